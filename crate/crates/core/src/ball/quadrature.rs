use alloc::vec::Vec;
use core::f64::consts::PI;

use super::jacobi::gauss_jacobi;
use crate::{Error, Result};

/// Tensor quadrature on the unit disk for `∫_B f(R) (1-|R|²)^α dR`.
///
/// Radially the rule is Gauss–Jacobi in `s = |R|²`, angularly it is the
/// trapezoid rule. Integrands that are polynomials in `R` of total degree `d`
/// are integrated exactly whenever `d <= exact_degree()`.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    pub alpha: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl BallQuadrature {
    pub fn new(n_r: usize, n_theta: usize, alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) {
            return Err(Error::InvalidWeight { alpha });
        }
        if n_r == 0 || n_theta == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node per direction".into()));
        }
        let (x, w) = gauss_jacobi(n_r, alpha, 0.0);
        // s = (1+x)/2 turns (1-x)^α dx into 2^{α+1} (1-s)^α ds; the polar
        // Jacobian r dr dθ = ds dθ / 2.
        let radial_scale = libm::pow(2.0, -alpha - 1.0) * 0.5;
        let dtheta = 2.0 * PI / n_theta as f64;
        let mut points = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        for (xi, wi) in x.iter().zip(&w) {
            let r = (0.5 * (1.0 + xi)).sqrt();
            for j in 0..n_theta {
                let theta = dtheta * j as f64;
                points.push([r * libm::cos(theta), r * libm::sin(theta)]);
                weights.push(wi * radial_scale * dtheta);
            }
        }
        Ok(Self {
            alpha,
            n_r,
            n_theta,
            points,
            weights,
        })
    }

    /// Highest total polynomial degree in `R` integrated exactly against the weight.
    pub fn exact_degree(&self) -> usize {
        (4 * self.n_r - 2).min(self.n_theta - 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

/// The three Jacobi-weighted rules every model needs: `α = k` (mass, stiffness,
/// drag, moments), `α = k-1` (stress) and `α = k-2` (closure constants and the
/// strong Hardy inequality).
#[derive(Debug, Clone)]
pub struct QuadratureSet {
    pub k: f64,
    pub mass: BallQuadrature,
    pub stress: BallQuadrature,
    pub singular: BallQuadrature,
}

impl QuadratureSet {
    pub fn new(k: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(k > 1.0) {
            return Err(Error::Integrability { k });
        }
        Ok(Self {
            k,
            mass: BallQuadrature::new(n_r, n_theta, k)?,
            stress: BallQuadrature::new(n_r, n_theta, k - 1.0)?,
            singular: BallQuadrature::new(n_r, n_theta, k - 2.0)?,
        })
    }

    /// Default resolution for a basis of maximal degree `p`: `n_r = p+6`, `n_θ = 4p+8`.
    pub fn for_degree(k: f64, p: usize) -> Result<Self> {
        Self::new(k, p + 6, 4 * p + 8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_exponent_must_exceed_minus_one() {
        assert!(matches!(BallQuadrature::new(4, 8, -1.0), Err(Error::InvalidWeight { .. })));
        assert!(BallQuadrature::new(4, 8, -0.5).is_ok());
    }

    #[test]
    fn normalization_integral_matches_beta_oracle() {
        // ∫_B (1-|R|²)^k dR = π/(k+1)
        for &k in &[1.5, 2.0, 3.0, 5.0] {
            let q = BallQuadrature::new(6, 16, k).unwrap();
            assert!((q.integrate(|_| 1.0) - PI / (k + 1.0)).abs() < 1e-13);
            assert!(q.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn odd_moments_vanish_and_second_moment_matches() {
        let k = 2.0;
        let q = BallQuadrature::new(8, 24, k).unwrap();
        let z = q.integrate(|_| 1.0);
        assert!(q.integrate(|r| r[0]).abs() < 1e-15);
        // ∫ R1² ψ∞ dR = 1/(2(k+2))
        assert!((q.integrate(|r| r[0] * r[0]) / z - 1.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn exact_up_to_reported_degree() {
        // ∫_B R1^{2a} R2^{2b} (1-|R|²)^α dR
        //   = B(a+1/2, b+1/2) · B(a+b+1, α+1) / 1  (polar split), written with Γ.
        let alpha = 0.7;
        let q = BallQuadrature::new(5, 19, alpha).unwrap();
        let d = q.exact_degree();
        let lg = libm::lgamma;
        for a in 0..=d / 2 {
            for b in 0..=(d / 2 - a) {
                let (af, bf) = (a as f64, b as f64);
                let ang = 2.0 * libm::exp(lg(af + 0.5) + lg(bf + 0.5) - lg(af + bf + 1.0));
                let rad = 0.5 * libm::exp(lg(af + bf + 1.0) + lg(alpha + 1.0) - lg(af + bf + alpha + 2.0));
                let exact = ang * rad;
                let got = q.integrate(|r| r[0].powi(2 * a as i32) * r[1].powi(2 * b as i32));
                assert!((got - exact).abs() < 1e-13 * exact.max(1e-3), "a={a} b={b}");
            }
        }
    }
}
