//! The computations behind each command, returning structured results.

use fene_core::ball::{
    compute_model_constants, inequality_ratios, spectral_gap, ConfigSpace, FeneParams, QuadratureSet,
};
use fene_core::diagnostics::{
    auto_window, decay_fit, saturation_time, shell_spectrum, AuxRecord, DecayFit, DecaySeries, DiagnosticsRecord,
    DiagnosticsSettings,
};
use fene_core::initial::{generate, InitialData};
use fene_core::integrator::{run_simulation, RunOutcome, Simulation};
use fene_core::micromacro::{MicroMacroModel, MicroMacroState};
use fene_core::torus::{TorusGrid, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::report::Check;

pub type CoreError = fene_core::Error;

pub fn build_model(cfg: &ExperimentConfig) -> Result<MicroMacroModel, CoreError> {
    let params = FeneParams::new(cfg.model.k, cfg.model.nu)?;
    let space = ConfigSpace::new(params, cfg.discretization.p)?;
    let grid = TorusGrid::new(cfg.discretization.l_box.0, cfg.discretization.m)?;
    Ok(MicroMacroModel::new(grid, space))
}

pub fn diagnostics_settings(cfg: &ExperimentConfig, model: &MicroMacroModel) -> Result<DiagnosticsSettings, CoreError> {
    let d = &cfg.diagnostics;
    let default = DiagnosticsSettings::default_for(model);
    DiagnosticsSettings::new(d.s, d.a.unwrap_or(default.a), d.eta, d.s_exp)
}

pub fn initial_state(cfg: &ExperimentConfig, model: &MicroMacroModel, seed: u64) -> Result<MicroMacroState, CoreError> {
    generate(
        model,
        &InitialData {
            epsilon: cfg.initial.epsilon,
            xi_cutoff: cfg.xi_cutoff(),
            seed,
            s: cfg.diagnostics.s,
        },
    )
}

/// Closed forms of the constants through `∫_B |R|^{2j}(1-|R|²)^α dR = π B(j+1, α+1)`
/// and `B(n, b) = (n-1)! / (b (b+1) ⋯ (b+n-1))` for integer `n`.
pub fn beta_oracle(k: f64) -> (f64, f64, f64) {
    let beta = |n: u32, b: f64| -> f64 {
        let fact: f64 = (1..n).map(f64::from).product();
        fact / (0..n).map(|i| b + f64::from(i)).product::<f64>()
    };
    let pi = std::f64::consts::PI;
    let z = pi * beta(1, k + 1.0);
    let quartic = pi * beta(3, k - 1.0);
    // Angular means: cos⁴ → 3/8, cos²sin² → 1/8, cos² → 1/2.
    let c1 = 4.0 * k * k * 0.375 * quartic / z;
    let c2 = 4.0 * k * k * 0.125 * quartic / z;
    let ccoef = 2.0 * 0.5 * pi * beta(2, k + 1.0) / z;
    (c1, c2, ccoef)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsRow {
    pub k: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "Ccoef")]
    pub ccoef: f64,
    pub ratio: f64,
    pub c1_oracle: f64,
    pub c2_oracle: f64,
    pub ccoef_oracle: f64,
}

pub const CONSTANT_TOL: f64 = 1e-10;

pub fn verify_constants(ks: &[f64]) -> Result<(Vec<ConstantsRow>, Vec<Check>), CoreError> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &k in ks {
        let c = compute_model_constants(&QuadratureSet::new(k, 6, 16)?)?;
        let (c1o, c2o, cco) = beta_oracle(k);
        let row = ConstantsRow {
            k,
            c1: c.c1,
            c2: c.c2,
            ccoef: c.ccoef,
            ratio: c.c1 / c.c2,
            c1_oracle: c1o,
            c2_oracle: c2o,
            ccoef_oracle: cco,
        };
        checks.push(Check::new(
            format!("ratio_k{k}"),
            (row.ratio - 3.0).abs() <= CONSTANT_TOL,
            format!("c1/c2 = {:.15}", row.ratio),
        ));
        let worst = [(row.c1, c1o), (row.c2, c2o), (row.ccoef, cco)]
            .iter()
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new(
            format!("oracle_k{k}"),
            worst <= CONSTANT_TOL,
            format!("max deviation from the Beta closed forms {worst:.3e}"),
        ));
        rows.push(row);
    }
    Ok((rows, checks))
}

fn random_state(model: &MicroMacroModel, rng: &mut ChaCha8Rng, amplitude: f64) -> Result<MicroMacroState, CoreError> {
    let xi_c = model.grid.dealias_cutoff() as f64 * model.grid.xi_min();
    let mut st = generate(
        model,
        &InitialData {
            epsilon: amplitude,
            xi_cutoff: xi_c * rng.gen_range(0.3..1.0),
            seed: rng.gen(),
            s: 0,
        },
    )?;
    // Break the flat spectrum so the draws are not all alike.
    let tilt: f64 = rng.gen_range(0.5..3.0);
    for (idx, mode) in model.grid.modes().iter().enumerate() {
        let w = (-tilt * mode.xi_sq / (xi_c * xi_c)).exp();
        st.u.comps[0][idx] *= w;
        st.u.comps[1][idx] *= w;
        for c in st.c.iter_mut() {
            c[idx] *= w;
        }
    }
    Ok(st)
}

fn relative(diff: &VectorField, reference: &VectorField) -> f64 {
    diff.coefficient_norm() / reference.coefficient_norm()
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub closure_max_rel_error: f64,
    pub galerkin_closure_max_rel_error: f64,
    pub cancellation_max_rel: f64,
    pub moment_identity_max_rel: f64,
    pub gram_max_dev: f64,
    pub stiffness_asymmetry: f64,
    pub kernel_dimension: usize,
    pub lambda_min: f64,
    pub rayleigh_bound: f64,
    pub inequality_max: [f64; 3],
    pub draws: usize,
}

/// `𝒞`-weighted and Galerkin `c₂Δu` closure errors for one field.
pub fn closure_errors(model: &MicroMacroModel, u: &VectorField) -> (f64, f64) {
    let g = &model.grid;
    let mut expect = VectorField {
        comps: [g.laplacian(&u.comps[0]), g.laplacian(&u.comps[1])],
    };
    expect.scale(model.space.params.c2);
    let mut exact = model.closure_velocity(u);
    exact.axpy(-1.0, &expect);
    let mut galerkin = model.galerkin_closure_velocity(u);
    galerkin.axpy(-1.0, &expect);
    (relative(&exact, &expect), relative(&galerkin, &expect))
}

/// `⟨div τ, u⟩ + ⟨drag_eq(u), ψ⟩` relative to the size of either term.
pub fn cancellation_error(model: &MicroMacroModel, st: &MicroMacroState) -> f64 {
    let g = &model.grid;
    let a = st.u.inner(&model.stress_divergence(&st.c), g);
    let drag = model.equilibrium_drag(&st.u);
    let b: f64 = st.c.iter().zip(&drag).map(|(x, y)| g.inner(x, y)).sum();
    (a + b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Semi-discrete `𝔻u` reconstruction error relative to `max|𝔻u|`.
pub fn moment_identity_error(model: &MicroMacroModel, st: &MicroMacroState) -> Result<f64, CoreError> {
    let nl = model.nonlinear_terms(st).tendency;
    let rhs = model.rhs(st, true);
    let du = model.reconstruct_du(st, &rhs.c, Some(&nl.c))?;
    let mut diff = model.deformation(&st.u);
    let scale = model.tensor_max_abs(&diff);
    for (drow, rrow) in diff.iter_mut().zip(&du) {
        for (d, r) in drow.iter_mut().zip(rrow) {
            for (x, y) in d.iter_mut().zip(r) {
                *x -= y;
            }
        }
    }
    Ok(model.tensor_max_abs(&diff) / scale)
}

pub fn verify_identities(
    model: &MicroMacroModel,
    seed: u64,
    fields: usize,
    draws: usize,
) -> Result<(IdentityReport, Vec<Check>), CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closure: f64 = 0.0;
    let mut galerkin: f64 = 0.0;
    let mut cancel: f64 = 0.0;
    let mut moment: f64 = 0.0;
    for _ in 0..fields {
        let st = random_state(model, &mut rng, 1e-2)?;
        let (e, g) = closure_errors(model, &st.u);
        closure = closure.max(e);
        galerkin = galerkin.max(g);
        cancel = cancel.max(cancellation_error(model, &st));
        moment = moment.max(moment_identity_error(model, &st)?);
    }

    let space = &model.space;
    let q = space.len();
    let gram = space.basis.gram(&space.quads.mass);
    let gram_dev = (0..q)
        .flat_map(|i| (0..q).map(move |j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let asym = space.ops.assembly_asymmetry;
    let eig = space.ops.stiffness_eigenvalues();
    let scale = eig.iter().cloned().fold(0.0, f64::max);
    let kernel = eig.iter().filter(|&&l| l.abs() <= 1e-10 * scale).count();
    let psd = eig.iter().all(|&l| l >= -1e-10 * scale);
    let gap = spectral_gap(&space.ops, &space.basis, &space.quads)?;
    let bound = 2.0 * (space.params.k + 2.0);

    let mut ineq = [0.0f64; 3];
    let mut finite = true;
    for _ in 0..draws {
        let mut c: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
        c[0] = 0.0;
        let r = inequality_ratios(&c, &space.basis, &space.ops, &space.quads)?;
        for (m, v) in ineq.iter_mut().zip([r.poincare, r.hardy, r.tau_hardy]) {
            finite &= v.is_finite() && v > 0.0;
            *m = m.max(v);
        }
    }

    let report = IdentityReport {
        closure_max_rel_error: closure,
        galerkin_closure_max_rel_error: galerkin,
        cancellation_max_rel: cancel,
        moment_identity_max_rel: moment,
        gram_max_dev: gram_dev,
        stiffness_asymmetry: asym,
        kernel_dimension: kernel,
        lambda_min: gap.lambda_min,
        rayleigh_bound: bound,
        inequality_max: ineq,
        draws,
    };
    let checks = vec![
        Check::new("c2_laplacian_closure", closure <= 1e-8, format!("max relative error {closure:.3e}")),
        Check::new("energy_cancellation", cancel <= 1e-10, format!("max relative pairing {cancel:.3e}")),
        Check::new("moment_identity", moment <= 1e-8, format!("max relative error {moment:.3e}")),
        Check::new("gram_identity", gram_dev <= 1e-12, format!("max |G - I| {gram_dev:.3e}")),
        Check::new(
            "stiffness_structure",
            asym <= 1e-12 && psd && kernel == 1,
            format!("asymmetry {asym:.3e}, kernel dimension {kernel}, PSD {psd}"),
        ),
        Check::new(
            "spectral_gap",
            gap.lambda_min > 0.0 && gap.lambda_min <= bound * (1.0 + 1e-12),
            format!("lambda_min {:.6} vs Rayleigh bound {bound}", gap.lambda_min),
        ),
        Check::new(
            "inequality_ratios",
            finite,
            format!("max ratios poincare {:.4}, hardy {:.4}, tau {:.4}", ineq[0], ineq[1], ineq[2]),
        ),
    ];
    Ok((report, checks))
}

/// Records and auxiliary rows of one trajectory, plus how it ended.
#[derive(Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub aux: Vec<AuxRecord>,
    pub spectra: Vec<(f64, Vec<f64>, Vec<f64>)>,
    pub outcome: Result<RunOutcome, CoreError>,
    pub final_state: MicroMacroState,
    pub settings: DiagnosticsSettings,
}

pub fn run_trajectory(
    cfg: &ExperimentConfig,
    model: &MicroMacroModel,
    seed: u64,
    with_spectra: bool,
) -> Result<Trajectory, CoreError> {
    let settings = diagnostics_settings(cfg, model)?;
    let st = initial_state(cfg, model, seed)?;
    let mut sim = Simulation::new(model, st, cfg.scheme_config())?;
    let mut records = Vec::new();
    let mut aux = Vec::new();
    let mut spectra = Vec::new();
    let outcome = run_simulation(&mut sim, &settings, cfg.diagnostics.record_every, |r, a, s| {
        records.push(*r);
        aux.push(*a);
        if with_spectra {
            let u: Vec<_> = s.u.comps.iter().collect();
            let c: Vec<_> = s.c.iter().collect();
            spectra.push((s.t, shell_spectrum(&model.grid, &u), shell_spectrum(&model.grid, &c)));
        }
    });
    Ok(Trajectory {
        records,
        aux,
        spectra,
        outcome,
        final_state: sim.state,
        settings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedFit {
    pub seed: u64,
    pub alpha_u: f64,
    pub alpha_psi: f64,
    pub window: [f64; 2],
    pub algebraic_u: bool,
    pub algebraic_psi: bool,
    pub residual_u: f64,
    pub residual_psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayStudy {
    pub fits: Vec<SeedFit>,
    pub alpha_u_mean: f64,
    pub alpha_u_std: f64,
    pub alpha_psi_mean: f64,
    pub alpha_psi_std: f64,
    pub t_sat_predicted: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Predicted saturation time of the splitting ball for this configuration.
pub fn predicted_t_sat(cfg: &ExperimentConfig, model: &MicroMacroModel, settings: &DiagnosticsSettings) -> f64 {
    cfg.decay
        .t_sat
        .unwrap_or_else(|| saturation_time(model.grid.xi_min(), settings, model.ccoef()))
}

pub fn fit_trajectory(
    records: &[DiagnosticsRecord],
    aux: &[AuxRecord],
    t_sat: f64,
) -> Result<(DecayFit, DecayFit), CoreError> {
    let window = auto_window(records, aux, t_sat);
    Ok((
        decay_fit(records, DecaySeries::VelocityH1, window)?,
        decay_fit(records, DecaySeries::PsiH1, window)?,
    ))
}

/// Runs every seed (in parallel) and fits `‖u‖₁` and `‖ψ‖_{1,𝓛²}`.
pub fn decay_study(cfg: &ExperimentConfig, model: &MicroMacroModel, seeds: &[u64]) -> Result<DecayStudy, CoreError> {
    let settings = diagnostics_settings(cfg, model)?;
    let t_sat = predicted_t_sat(cfg, model, &settings);
    let fits = seeds
        .par_iter()
        .map(|&seed| {
            let traj = run_trajectory(cfg, model, seed, false)?;
            traj.outcome?;
            let (fu, fp) = fit_trajectory(&traj.records, &traj.aux, t_sat)?;
            Ok(SeedFit {
                seed,
                alpha_u: fu.alpha,
                alpha_psi: fp.alpha,
                window: fu.window,
                algebraic_u: fu.algebraic,
                algebraic_psi: fp.algebraic,
                residual_u: fu.residual,
                residual_psi: fp.residual,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let (alpha_u_mean, alpha_u_std) = mean_std(&fits.iter().map(|f| f.alpha_u).collect::<Vec<_>>());
    let (alpha_psi_mean, alpha_psi_std) = mean_std(&fits.iter().map(|f| f.alpha_psi).collect::<Vec<_>>());
    Ok(DecayStudy {
        fits,
        alpha_u_mean,
        alpha_u_std,
        alpha_psi_mean,
        alpha_psi_std,
        t_sat_predicted: t_sat,
    })
}
