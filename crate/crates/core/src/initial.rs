//! Random small initial data.

use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::weighted_norms;
use crate::micromacro::{MicroMacroModel, MicroMacroState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    /// Target `‖u₀‖_s = ‖ψ₀‖_{s,𝓛²}`.
    pub epsilon: f64,
    /// Largest `|ξ|` carrying energy.
    pub xi_cutoff: f64,
    pub seed: u64,
    pub s: u32,
}

/// Divergence-free `u₀` with `|û| = 1` and random phases on `0 < |ξ| ≤ ξ_c`,
/// and `ψ₀` with unit random-phase coefficients `c_p`, `p ≥ 1`, on the same
/// modes; both rescaled to norm `ε`. `c₀ = 0`, so `ψ₀` has zero R-mass.
pub fn generate(model: &MicroMacroModel, data: &InitialData) -> Result<MicroMacroState> {
    if !(data.epsilon >= 0.0 && data.epsilon.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("epsilon = {} must be nonnegative", data.epsilon)));
    }
    let grid = &model.grid;
    let q = model.q();
    let mut st = MicroMacroState::zeros(model);
    if data.epsilon == 0.0 {
        return Ok(st);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(data.seed);
    let r2 = data.xi_cutoff * data.xi_cutoff * (1.0 + 1e-12);
    let mut count = 0;
    for (idx, mode) in grid.modes().iter().enumerate() {
        let partner = grid.conj_index(idx);
        if !mode.active || mode.n_sq == 0 || mode.xi_sq > r2 || partner < idx {
            continue;
        }
        count += 1;
        let norm = mode.xi_sq.sqrt();
        let e = [-mode.xi[1] / norm, mode.xi[0] / norm];
        let a = Complex64::from_polar(1.0, rng.gen::<f64>() * 2.0 * PI);
        for comp in 0..2 {
            st.u.comps[comp][idx] = a * e[comp];
            st.u.comps[comp][partner] = (a * e[comp]).conj();
        }
        for p in 1..q {
            let v = Complex64::from_polar(1.0, rng.gen::<f64>() * 2.0 * PI);
            st.c[p][idx] = v;
            st.c[p][partner] = v.conj();
        }
        if partner == idx {
            // Self-conjugate modes must be real.
            for comp in 0..2 {
                st.u.comps[comp][idx].im = 0.0;
            }
            for p in 1..q {
                st.c[p][idx].im = 0.0;
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "xi_cutoff = {} admits no nonzero lattice mode (spacing {})",
            data.xi_cutoff,
            grid.xi_min()
        )));
    }
    let n = weighted_norms(model, &st, data.s);
    if n.u_hs > 0.0 {
        st.u.scale(data.epsilon / n.u_hs);
    }
    if n.psi_sl2 > 0.0 {
        let s = data.epsilon / n.psi_sl2;
        for c in st.c.iter_mut() {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{ConfigSpace, FeneParams};
    use crate::torus::TorusGrid;

    fn model() -> MicroMacroModel {
        let space = ConfigSpace::new(FeneParams::new(2.0, 1.0).unwrap(), 2).unwrap();
        MicroMacroModel::new(TorusGrid::new(16.0 * PI, 16).unwrap(), space)
    }

    #[test]
    fn scaled_hermitian_divergence_free() {
        let m = model();
        let data = InitialData {
            epsilon: 1e-3,
            xi_cutoff: 0.6,
            seed: 7,
            s: 3,
        };
        let st = generate(&m, &data).unwrap();
        let n = weighted_norms(&m, &st, 3);
        assert!((n.u_hs - 1e-3).abs() < 1e-15);
        assert!((n.psi_sl2 - 1e-3).abs() < 1e-15);
        assert!(st.u.is_divergence_free(&m.grid));
        assert!(m.mass_max(&st.c) == 0.0);
        for (idx, _) in m.grid.modes().iter().enumerate() {
            let j = m.grid.conj_index(idx);
            assert_eq!(st.u.comps[0][idx], st.u.comps[0][j].conj());
            assert_eq!(st.c[1][idx], st.c[1][j].conj());
        }
        assert_eq!(st, generate(&m, &data).unwrap());
        assert_ne!(st, generate(&m, &InitialData { seed: 8, ..data }).unwrap());
    }

    #[test]
    fn degenerate_requests() {
        let m = model();
        let zero = generate(&m, &InitialData { epsilon: 0.0, xi_cutoff: 1.0, seed: 1, s: 3 }).unwrap();
        assert_eq!(zero, MicroMacroState::zeros(&m));
        assert!(generate(&m, &InitialData { epsilon: 1.0, xi_cutoff: 0.01, seed: 1, s: 3 }).is_err());
    }
}
