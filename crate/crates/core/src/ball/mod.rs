//! Configuration space: the unit disk `B` of dumbbell elongations.

mod basis;
mod constants;
mod inequality;
pub mod jacobi;
mod operators;
mod quadrature;

pub use basis::{BallBasis, BasisIndex};
pub use constants::{compute_model_constants, ModelConstants, CLOSURE_RATIO_TOL};
pub use inequality::{inequality_ratios, spectral_gap, InequalityRatios, SpectralGap};
pub use operators::BallOperators;
pub use quadrature::{BallQuadrature, QuadratureSet};

use core::f64::consts::PI;

use crate::{Error, Result};

/// `ψ∞(R) = (1-|R|²)^k / ∫_B (1-|R|²)^k dR`, with the normaliser `π/(k+1)`.
///
/// Defined for any `k > -1`; the model itself requires `k > 1`.
pub fn equilibrium_weight(k: f64, pt: [f64; 2]) -> Result<f64> {
    if !(k > -1.0) {
        return Err(Error::InvalidParameter(alloc::format!("ψ∞ is not normalisable for k = {k}")));
    }
    let r2 = pt[0] * pt[0] + pt[1] * pt[1];
    if r2 > 1.0 {
        return Err(Error::Domain(pt[0], pt[1]));
    }
    Ok(libm::pow(1.0 - r2, k) * (k + 1.0) / PI)
}

/// Physical parameters of the perturbation system and the constants derived from `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeneParams {
    /// Spring exponent in `𝒰(R) = -k log(1-|R|²)`.
    pub k: f64,
    /// Centre-of-mass diffusion rate.
    pub nu: f64,
    pub z: f64,
    pub ccoef: f64,
    pub c1: f64,
    pub c2: f64,
}

impl FeneParams {
    pub fn new(k: f64, nu: f64) -> Result<Self> {
        if !(k > 1.0) {
            return Err(Error::Integrability { k });
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("nu = {nu} must be finite and nonnegative")));
        }
        let constants = compute_model_constants(&QuadratureSet::new(k, 6, 16)?)?;
        Ok(Self {
            k,
            nu,
            z: constants.z,
            ccoef: constants.ccoef,
            c1: constants.c1,
            c2: constants.c2,
        })
    }

    pub fn d_config(&self) -> usize {
        crate::CONFIG_DIM
    }

    /// `ψ∞` at `pt`, using the stored normaliser.
    pub fn equilibrium(&self, pt: [f64; 2]) -> Result<f64> {
        let r2 = pt[0] * pt[0] + pt[1] * pt[1];
        if r2 > 1.0 {
            return Err(Error::Domain(pt[0], pt[1]));
        }
        Ok(libm::pow(1.0 - r2, self.k) / self.z)
    }
}

/// Everything the coupled solver needs from configuration space, built once.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    pub params: FeneParams,
    pub quads: QuadratureSet,
    pub basis: BallBasis,
    pub ops: BallOperators,
}

impl ConfigSpace {
    pub fn new(params: FeneParams, max_degree: usize) -> Result<Self> {
        let quads = QuadratureSet::for_degree(params.k, max_degree)?;
        let basis = BallBasis::new(params.k, max_degree, &quads.mass)?;
        let ops = BallOperators::assemble(&basis, &quads)?;
        Ok(Self {
            params,
            quads,
            basis,
            ops,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_weight_values() {
        // k = 1: ∫_B (1-r²) dR = π/2, so ψ∞(0) = 2/π.
        assert!((equilibrium_weight(1.0, [0.0, 0.0]).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert_eq!(equilibrium_weight(3.0, [0.6, 0.8]).unwrap(), 0.0);
        assert!(matches!(equilibrium_weight(2.0, [0.9, 0.9]), Err(Error::Domain(..))));
    }

    #[test]
    fn equilibrium_integrates_to_one() {
        let p = FeneParams::new(2.5, 1.0).unwrap();
        let q = BallQuadrature::new(10, 24, 0.0).unwrap();
        // Integrate ψ∞ against the unweighted rule; (1-r²)^2.5 is not polynomial, so
        // compare on the weighted rule instead where the sum is exact.
        let qw = BallQuadrature::new(4, 8, p.k).unwrap();
        assert!((qw.integrate(|_| 1.0) / p.z - 1.0).abs() < 1e-12);
        let rough = q.integrate(|r| p.equilibrium(r).unwrap());
        assert!((rough - 1.0).abs() < 1e-3);
    }

    #[test]
    fn params_reject_small_k() {
        assert!(matches!(FeneParams::new(0.5, 1.0), Err(Error::Integrability { .. })));
        assert!(FeneParams::new(2.0, -1.0).is_err());
    }
}
