use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};

use super::basis::BallBasis;
use super::operators::BallOperators;
use super::quadrature::QuadratureSet;
use crate::{Error, Result};

/// Left side over `|ψ|²_{Ḣ¹}` for the three configuration-space inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityRatios {
    /// `∫ ψ²/ψ∞ dR / |ψ|²_{Ḣ¹}` (Poincaré).
    pub poincare: f64,
    /// `∫ ψ² / (ψ∞ (1-|R|)²) dR / |ψ|²_{Ḣ¹}` (Hardy, needs k > 1).
    pub hardy: f64,
    /// `(∫ |ψ| / (1-|R|) dR)² / |ψ|²_{Ḣ¹}` (the bound used for the stress).
    pub tau_hardy: f64,
}

/// Measures the three ratios for `ψ = ψ∞ Σ c_p φ_p` with `c_0 = 0`.
///
/// The boundary singularities are removed analytically: `1/(1-r)` becomes
/// `(1+r)(1-r²)^{k-1}` against `ψ∞`'s `(1-r²)^k`, and `1/(1-r)²` becomes
/// `(1+r)²(1-r²)^{k-2}`; the resulting smooth integrands use the α = k-1 and
/// α = k-2 rules respectively.
pub fn inequality_ratios(
    coeffs: &[f64],
    basis: &BallBasis,
    ops: &BallOperators,
    quads: &QuadratureSet,
) -> Result<InequalityRatios> {
    let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
    if coeffs.len() != basis.len() {
        return Err(Error::InvalidParameter("coefficient length differs from basis size".into()));
    }
    if coeffs[0].abs() > 1e-12 * norm_sq.sqrt().max(1e-300) {
        return Err(Error::InvalidParameter("inequality ratios need zero R-mass (c_0 = 0)".into()));
    }
    let h1 = ops.h1_seminorm_sq(coeffs);
    if !(h1 > 0.0) {
        return Err(Error::DegenerateInput);
    }
    let z = quads.mass.integrate(|_| 1.0);
    let radius = |pt: [f64; 2]| (pt[0] * pt[0] + pt[1] * pt[1]).sqrt();
    let l1 = quads
        .stress
        .integrate(|pt| (1.0 + radius(pt)) * basis.synthesize(coeffs, pt).abs())
        / z;
    let hardy_lhs = quads.singular.integrate(|pt| {
        let v = basis.synthesize(coeffs, pt);
        (1.0 + radius(pt)).powi(2) * v * v
    }) / z;
    Ok(InequalityRatios {
        poincare: norm_sq / h1,
        hardy: hardy_lhs / h1,
        tau_hardy: l1 * l1 / h1,
    })
}

/// Smallest nonzero eigenvalue of the stiffness form on zero-mass coefficients.
#[derive(Debug, Clone)]
pub struct SpectralGap {
    pub lambda_min: f64,
    /// Rayleigh quotient of `φ = R₁`, an upper bound equal to `2(k+2)`.
    pub rayleigh_r1: f64,
    /// All eigenvalues of the zero-mass block, ascending.
    pub eigenvalues: Vec<f64>,
}

pub fn spectral_gap(ops: &BallOperators, basis: &BallBasis, quads: &QuadratureSet) -> Result<SpectralGap> {
    let q = ops.len();
    if q < 2 {
        return Err(Error::InvalidParameter("spectral gap needs a nonconstant basis function".into()));
    }
    let block: DMatrix<f64> = ops.stiffness.view((1, 1), (q - 1, q - 1)).into_owned();
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda_min = eigenvalues[0];
    if !(lambda_min > 0.0) {
        return Err(Error::Assembly(alloc::format!("nonpositive spectral gap {lambda_min:e}")));
    }
    let r1 = basis.project(&quads.mass, |pt| pt[0]);
    let rayleigh_r1 = ops.h1_seminorm_sq(&r1) / r1.iter().map(|c| c * c).sum::<f64>();
    Ok(SpectralGap {
        lambda_min,
        rayleigh_r1,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{ConfigSpace, FeneParams};

    fn space(k: f64, p: usize) -> ConfigSpace {
        ConfigSpace::new(FeneParams::new(k, 1.0).unwrap(), p).unwrap()
    }

    #[test]
    fn eigenvector_attains_the_poincare_constant() {
        let sp = space(2.0, 6);
        let q = sp.len();
        let block: DMatrix<f64> = sp.ops.stiffness.view((1, 1), (q - 1, q - 1)).into_owned();
        let eig = SymmetricEigen::new(block);
        for (n, &lambda) in eig.eigenvalues.iter().enumerate().take(4) {
            let mut c = alloc::vec![0.0; q];
            for (dst, v) in c[1..].iter_mut().zip(eig.eigenvectors.column(n).iter()) {
                *dst = *v;
            }
            let r = inequality_ratios(&c, &sp.basis, &sp.ops, &sp.quads).unwrap();
            assert!((r.poincare - 1.0 / lambda).abs() < 1e-12 / lambda);
        }
    }

    #[test]
    fn random_draws_respect_the_gap() {
        use rand::{Rng, SeedableRng};
        let sp = space(2.0, 5);
        let gap = spectral_gap(&sp.ops, &sp.basis, &sp.quads).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut c: Vec<f64> = (0..sp.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            c[0] = 0.0;
            let r = inequality_ratios(&c, &sp.basis, &sp.ops, &sp.quads).unwrap();
            assert!(r.poincare <= (1.0 + 1e-12) / gap.lambda_min);
            assert!(r.hardy.is_finite() && r.hardy > 0.0);
            assert!(r.tau_hardy.is_finite() && r.tau_hardy > 0.0);
        }
    }

    #[test]
    fn hardy_ratio_of_the_first_moment() {
        // ψ = ψ∞R₁ at k = 2: ∫ψ²/(ψ∞(1-r)²) = (3/π)·π∫₀¹ r³(1+r)² dr = 49/20,
        // and |R₁|²_{Ḣ¹} = ∫ψ∞ = 1. The rules are Gaussian in r², so the odd
        // powers of r from (1+r)² converge only algebraically.
        let sp = space(2.0, 4);
        let c = sp.basis.project(&sp.quads.mass, |pt| pt[0]);
        let r = inequality_ratios(&c, &sp.basis, &sp.ops, &sp.quads).unwrap();
        assert!((r.hardy - 2.45).abs() < 1e-5, "{}", r.hardy);
    }

    #[test]
    fn gap_is_positive_bounded_and_converged() {
        for k in [1.5, 2.0, 3.0, 5.0] {
            let coarse = space(k, 8);
            let g = spectral_gap(&coarse.ops, &coarse.basis, &coarse.quads).unwrap();
            let bound = 2.0 * (k + 2.0);
            assert!(g.lambda_min > 0.0 && g.lambda_min <= bound * (1.0 + 1e-12));
            assert!((g.rayleigh_r1 - bound).abs() < 1e-10 * bound);
            let fine = space(k, 10);
            let gf = spectral_gap(&fine.ops, &fine.basis, &fine.quads).unwrap();
            assert!((gf.lambda_min - g.lambda_min).abs() <= 0.05 * g.lambda_min);
        }
    }

    #[test]
    fn mass_and_degenerate_inputs_are_rejected() {
        let sp = space(2.0, 3);
        let mut c = alloc::vec![0.0; sp.len()];
        assert!(matches!(
            inequality_ratios(&c, &sp.basis, &sp.ops, &sp.quads),
            Err(Error::DegenerateInput)
        ));
        c[0] = 1.0;
        c[1] = 1.0;
        assert!(inequality_ratios(&c, &sp.basis, &sp.ops, &sp.quads).is_err());
    }
}
