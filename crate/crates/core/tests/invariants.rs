use std::f64::consts::PI;

use fene_core::ball::{ConfigSpace, FeneParams};
use fene_core::diagnostics::{a_star, lyapunov_pair, weighted_norms};
use fene_core::initial::{generate, InitialData};
use fene_core::micromacro::MicroMacroModel;
use fene_core::torus::{Spectrum, TorusGrid, VectorField};
use num_complex::Complex64;
use proptest::prelude::*;

const M: usize = 8;

fn grid() -> TorusGrid {
    TorusGrid::new(4.0 * PI, M).unwrap()
}

fn spectrum(grid: &TorusGrid, raw: &[f64]) -> Spectrum {
    let mut f: Spectrum = raw.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
    grid.dealias(&mut f);
    grid.symmetrize(&mut f);
    f
}

fn raw_field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2 * M * M)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leray_projection_is_an_orthogonal_projector(a in raw_field(), b in raw_field()) {
        let g = grid();
        let f = VectorField { comps: [spectrum(&g, &a), spectrum(&g, &b)] };
        let p = g.leray_project(&f);
        prop_assert!(p.is_divergence_free(&g));
        let pp = g.leray_project(&p);
        let mut diff = pp.clone();
        diff.axpy(-1.0, &p);
        prop_assert!(diff.coefficient_norm() <= 1e-13 * (1.0 + p.coefficient_norm()));
        let mut rest = f.clone();
        rest.axpy(-1.0, &p);
        prop_assert!(p.inner(&rest, &g).abs() <= 1e-12 * (1.0 + f.norm_sq(&g)));
    }

    #[test]
    fn physical_round_trip_of_dealiased_spectra(a in raw_field()) {
        let g = grid();
        let f = spectrum(&g, &a);
        let back = g.to_spectral(&g.to_physical(&f));
        for (x, y) in f.iter().zip(&back) {
            prop_assert!((x - y).norm() <= 1e-13);
        }
    }

    #[test]
    fn lyapunov_functional_is_equivalent_to_the_h1_energy(
        seed in 0u64..1000,
        eps in 1e-4f64..1.0,
        frac in 0.05f64..1.0,
        cut in 0.3f64..1.0,
    ) {
        let space = ConfigSpace::new(FeneParams::new(2.0, 1.0).unwrap(), 4).unwrap();
        let model = MicroMacroModel::new(TorusGrid::new(4.0 * PI, 16).unwrap(), space);
        let xi_c = model.grid.dealias_cutoff() as f64 * model.grid.xi_min() * cut;
        let st = generate(&model, &InitialData { epsilon: eps, xi_cutoff: xi_c, seed, s: 1 }).unwrap();
        let a = frac * a_star(&model.space.ops);
        let n = weighted_norms(&model, &st, 1);
        let theta = n.u_h1 * n.u_h1 + n.psi_1l2 * n.psi_1l2;
        let f = lyapunov_pair(&model, &st, a).f;
        prop_assert!(0.5 * theta <= f * (1.0 + 1e-12) && f <= 2.0 * theta * (1.0 + 1e-12));
    }
}
