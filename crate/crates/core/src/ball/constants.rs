use alloc::format;


use super::quadrature::QuadratureSet;
use crate::{Error, Result};

/// Closure constants of the enhanced-dissipation mechanism and the moment constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    /// `∫_B (1-|R|²)^k dR`.
    pub z: f64,
    /// `c₁(k) = -2k ∫ R₁³ ∂_{R₁}ψ∞ / (1-|R|²) dR`.
    pub c1: f64,
    /// `c₂(k) = -2k ∫ R₁² R₂ ∂_{R₂}ψ∞ / (1-|R|²) dR`.
    pub c2: f64,
    /// `𝒞 = 2 ∫ R₁² ψ∞ dR`.
    pub ccoef: f64,
}

/// Tolerance for `c₁ = 3 c₂`.
pub const CLOSURE_RATIO_TOL: f64 = 1e-10;

/// Evaluates the constants by quadrature. Since `∂_{R_i}ψ∞ = -2k R_i (1-|R|²)^{k-1}/Z`,
/// both closure integrands reduce to `4k² R^4-monomials · (1-|R|²)^{k-2} / Z`,
/// which the α = k-2 rule integrates exactly.
pub fn compute_model_constants(quads: &QuadratureSet) -> Result<ModelConstants> {
    let k = quads.k;
    if !(k > 1.0) {
        return Err(Error::Integrability { k });
    }
    let z = quads.mass.integrate(|_| 1.0);
    let c1 = 4.0 * k * k / z * quads.singular.integrate(|r| r[0].powi(4));
    let c2 = 4.0 * k * k / z * quads.singular.integrate(|r| r[0] * r[0] * r[1] * r[1]);
    let ccoef = 2.0 / z * quads.mass.integrate(|r| r[0] * r[0]);
    if !(c2 > 0.0) || !(ccoef > 0.0) || (c1 / c2 - 3.0).abs() > CLOSURE_RATIO_TOL {
        return Err(Error::Breakdown(format!(
            "closure constants violate c1 = 3 c2 > 0: c1 = {c1}, c2 = {c2}, C = {ccoef}"
        )));
    }
    Ok(ModelConstants { z, c1, c2, ccoef })
}


#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    // Closed forms from Beta integrals:
    //   Z = π/(k+1),  ∫R₁⁴(1-r²)^{k-2} = 3π/(4(k-1)k(k+1)),  ∫R₁²R₂²(1-r²)^{k-2} = π/(4(k-1)k(k+1)),
    //   so c₁ = 3k/(k-1), c₂ = k/(k-1), 𝒞 = 1/(k+2).
    #[test]
    fn constants_match_beta_oracle() {
        for &k in &[1.5, 2.0, 3.0, 5.0] {
            let q = QuadratureSet::new(k, 6, 16).unwrap();
            let c = compute_model_constants(&q).unwrap();
            assert!((c.z - PI / (k + 1.0)).abs() < 1e-13);
            assert!((c.c1 - 3.0 * k / (k - 1.0)).abs() < 1e-10);
            assert!((c.c2 - k / (k - 1.0)).abs() < 1e-10);
            assert!((c.ccoef - 1.0 / (k + 2.0)).abs() < 1e-12);
            assert!((c.c1 / c.c2 - 3.0).abs() < 1e-10);
        }
        let c = compute_model_constants(&QuadratureSet::new(2.0, 6, 16).unwrap()).unwrap();
        assert!((c.c2 - 2.0).abs() < 1e-10 && (c.c1 - 6.0).abs() < 1e-10 && (c.ccoef - 0.25).abs() < 1e-12);
    }

    #[test]
    fn k_at_most_one_is_not_integrable() {
        assert!(matches!(QuadratureSet::new(1.0, 6, 16), Err(Error::Integrability { .. })));
    }
}
