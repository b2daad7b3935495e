//! IMEX time stepping of the coupled system.
//!
//! The whole linear part (relaxation `S`, diffusion `νΔ`, and the linear
//! velocity/stress coupling) is solved implicitly mode by mode; transport and
//! the drag on the perturbation are explicit. In the eigenbasis `S = VΛVᵀ`
//! the implicit system of a mode `ξ ≠ 0` reduces to one scalar equation for
//! the amplitude `a` of `û = a e(ξ)`, `e = ξ^⊥/|ξ|`, plus a diagonal solve for
//! `y = Vᵀĉ`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::diagnostics::{
    fourier_split_mass, lyapunov_from_norms, weighted_norms, AuxRecord, DiagnosticsRecord, DiagnosticsSettings,
    EnergyAccumulator, NormSet,
};
use crate::micromacro::{MicroMacroModel, MicroMacroState, Tendency, TensorField};
use crate::torus::{Spectrum, VectorField};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler on the linear part, forward Euler on the rest. Order 1.
    ImexEuler,
    /// Crank–Nicolson on the linear part, variable-step Adams–Bashforth 2 on the rest.
    Cnab,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::ImexEuler => 1,
            Scheme::Cnab => 2,
        }
    }

    fn theta(self) -> f64 {
        match self {
            Scheme::ImexEuler => 1.0,
            Scheme::Cnab => 0.5,
        }
    }
}

/// Geometric step growth `dt(t) = clamp(relative·(1+t), dt, max)` for long decay runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtGrowth {
    pub relative: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_final: f64,
    pub cfl_safety: f64,
    /// Include transport and the drag on the perturbation.
    pub nonlinear: bool,
    pub dt_growth: Option<DtGrowth>,
}

impl SchemeConfig {
    pub fn new(dt: f64, scheme: Scheme, t_final: f64) -> Self {
        Self {
            dt,
            scheme,
            t_final,
            cfl_safety: 0.5,
            nonlinear: true,
            dt_growth: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "T_final = {} must be finite and nonnegative",
                self.t_final
            )));
        }
        if !(self.cfl_safety > 0.0) {
            return Err(Error::InvalidParameter("CFL safety factor must be positive".into()));
        }
        if let Some(g) = self.dt_growth {
            if !(g.relative > 0.0 && g.max >= self.dt) {
                return Err(Error::InvalidParameter("dt growth needs relative > 0 and max >= dt".into()));
            }
        }
        Ok(())
    }
}

/// Per-mode implicit solver with diagonal factors cached per distinct `|n|²`.
#[derive(Debug, Clone)]
pub struct ImplicitSolver {
    theta: f64,
    nu: f64,
    q: usize,
    /// `V` column-major: `v_col[k*q + p] = V[p][k]`.
    v_col: Vec<f64>,
    /// `V` row-major: `v_row[p*q + k] = V[p][k]`.
    v_row: Vec<f64>,
    lambda: Vec<f64>,
    stress_t: [[Vec<f64>; 2]; 2],
    source_t: [[Vec<f64>; 2]; 2],
    mode_slot: Vec<usize>,
    slot_xi_sq: Vec<f64>,
    cached_dt: Option<f64>,
    /// `1/(1 + θ dt (ν|ξ|² + λ_p))` per slot.
    factors: Vec<Vec<f64>>,
}

impl ImplicitSolver {
    pub fn new(model: &MicroMacroModel, scheme: Scheme) -> Result<Self> {
        let ops = &model.space.ops;
        let q = model.q();
        let eig = SymmetricEigen::try_new(ops.stiffness.clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::Breakdown("eigendecomposition of the stiffness matrix did not converge".into()))?;
        let v = eig.eigenvectors;
        let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let mut v_col = vec![0.0; q * q];
        let mut v_row = vec![0.0; q * q];
        for p in 0..q {
            for k in 0..q {
                v_col[k * q + p] = v[(p, k)];
                v_row[p * q + k] = v[(p, k)];
            }
        }
        let rotate = |w: &[f64]| -> Vec<f64> { (0..q).map(|k| (0..q).map(|p| v[(p, k)] * w[p]).sum()).collect() };
        let stress_t = [
            [rotate(&ops.stress[0][0]), rotate(&ops.stress[0][1])],
            [rotate(&ops.stress[1][0]), rotate(&ops.stress[1][1])],
        ];
        let source_t = [
            [rotate(&ops.drag_source[0][0]), rotate(&ops.drag_source[0][1])],
            [rotate(&ops.drag_source[1][0]), rotate(&ops.drag_source[1][1])],
        ];

        let grid = &model.grid;
        let mut keys: Vec<i64> = grid.modes().iter().filter(|m| m.active).map(|m| m.n_sq).collect();
        keys.sort_unstable();
        keys.dedup();
        let mode_slot = grid
            .modes()
            .iter()
            .map(|m| if m.active { keys.binary_search(&m.n_sq).unwrap() } else { usize::MAX })
            .collect();
        let unit = grid.xi_min();
        let slot_xi_sq = keys.iter().map(|&n| n as f64 * unit * unit).collect();
        Ok(Self {
            theta: scheme.theta(),
            nu: model.nu(),
            q,
            v_col,
            v_row,
            lambda,
            stress_t,
            source_t,
            mode_slot,
            slot_xi_sq,
            cached_dt: None,
            factors: Vec::new(),
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    /// Number of distinct cached factorizations.
    pub fn slots(&self) -> usize {
        self.slot_xi_sq.len()
    }

    pub fn cached_dt(&self) -> Option<f64> {
        self.cached_dt
    }

    fn prepare(&mut self, dt: f64) {
        if self.cached_dt == Some(dt) {
            return;
        }
        let td = self.theta * dt;
        self.factors = self
            .slot_xi_sq
            .iter()
            .map(|&x2| self.lambda.iter().map(|&l| 1.0 / (1.0 + td * (self.nu * x2 + l))).collect())
            .collect();
        self.cached_dt = Some(dt);
    }

    /// One θ-step of `x' = Lx + E` with `E` held fixed over the step.
    pub fn solve(
        &mut self,
        model: &MicroMacroModel,
        st: &MicroMacroState,
        explicit: Option<&Tendency>,
        dt: f64,
    ) -> (VectorField, Vec<Spectrum>) {
        self.prepare(dt);
        let q = self.q;
        let th = self.theta;
        let grid = &model.grid;
        let mut u = VectorField::zeros(grid);
        let mut c = vec![grid.zeros(); q];
        let mut cv = vec![ZERO; q];
        let mut ev = vec![ZERO; q];
        let mut y = vec![ZERO; q];
        let mut ey = vec![ZERO; q];
        let mut wt = vec![0.0; q];
        let mut vt = vec![0.0; q];
        for (idx, mode) in grid.modes().iter().enumerate() {
            let slot = self.mode_slot[idx];
            if slot == usize::MAX {
                continue;
            }
            let d = &self.factors[slot];
            for p in 0..q {
                cv[p] = st.c[p][idx];
                ev[p] = explicit.map_or(ZERO, |e| e.c[p][idx]);
            }
            for k in 0..q {
                let col = &self.v_col[k * q..(k + 1) * q];
                let mut a = ZERO;
                let mut b = ZERO;
                for p in 0..q {
                    a += cv[p] * col[p];
                    b += ev[p] * col[p];
                }
                y[k] = a;
                ey[k] = b;
            }
            let x2 = mode.xi_sq;
            if x2 == 0.0 {
                for k in 0..q {
                    let rhs = y[k] + (ey[k] - y[k] * ((1.0 - th) * self.lambda[k])) * dt;
                    y[k] = rhs * d[k];
                }
                for comp in 0..2 {
                    u.comps[comp][idx] = st.u.comps[comp][idx] + explicit.map_or(ZERO, |e| e.u.comps[comp][idx]) * dt;
                }
            } else {
                let norm = x2.sqrt();
                let e = [-mode.xi[1] / norm, mode.xi[0] / norm];
                for k in 0..q {
                    let mut w = 0.0;
                    let mut s = 0.0;
                    for l in 0..2 {
                        for m in 0..2 {
                            w += e[l] * mode.xi[m] * self.stress_t[l][m][k];
                            s += e[l] * mode.xi[m] * self.source_t[l][m][k];
                        }
                    }
                    wt[k] = w;
                    vt[k] = s;
                }
                let a_n = st.u.comps[0][idx] * e[0] + st.u.comps[1][idx] * e[1];
                let ea = explicit.map_or(ZERO, |t| t.u.comps[0][idx] * e[0] + t.u.comps[1][idx] * e[1]);
                let mut wy = ZERO;
                for k in 0..q {
                    wy += y[k] * wt[k];
                }
                let r_a = a_n + (I * wy * (1.0 - th) + ea) * dt;
                let mut num = r_a;
                let mut den = 1.0;
                for k in 0..q {
                    let lam = self.nu * x2 + self.lambda[k];
                    let yk = y[k];
                    y[k] = yk + ((I * a_n * vt[k] - yk * lam) * (1.0 - th) + ey[k]) * dt;
                    num += I * (th * dt * wt[k] * d[k]) * y[k];
                    den += th * th * dt * dt * wt[k] * d[k] * vt[k];
                }
                let a = num / den;
                for k in 0..q {
                    y[k] = (y[k] + I * a * (th * dt * vt[k])) * d[k];
                }
                u.comps[0][idx] = a * e[0];
                u.comps[1][idx] = a * e[1];
            }
            for p in 0..q {
                let row = &self.v_row[p * q..(p + 1) * q];
                let mut acc = ZERO;
                for k in 0..q {
                    acc += y[k] * row[k];
                }
                c[p][idx] = acc;
            }
        }
        (u, c)
    }
}

/// Moment data of one state used for the time-discrete `𝔻u` residual.
#[derive(Debug, Clone)]
struct MomentSnapshot {
    t: f64,
    moments: TensorField,
    remainder: TensorField,
    du: TensorField,
}

#[derive(Debug, Clone)]
struct ExplicitEval {
    terms: Option<Tendency>,
    max_speed: f64,
    snapshot: MomentSnapshot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub max_speed: f64,
}

/// A running trajectory: state, scheme, cached solver and explicit history.
#[derive(Debug, Clone)]
pub struct Simulation<'m> {
    model: &'m MicroMacroModel,
    pub state: MicroMacroState,
    config: SchemeConfig,
    solver: ImplicitSolver,
    current: Option<ExplicitEval>,
    previous_terms: Option<(Tendency, f64)>,
    previous_snapshot: Option<MomentSnapshot>,
    last_du_residual: f64,
    steps: usize,
}

impl<'m> Simulation<'m> {
    pub fn new(model: &'m MicroMacroModel, state: MicroMacroState, config: SchemeConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            solver: ImplicitSolver::new(model, config.scheme)?,
            model,
            state,
            config,
            current: None,
            previous_terms: None,
            previous_snapshot: None,
            last_du_residual: 0.0,
            steps: 0,
        })
    }

    pub fn model(&self) -> &MicroMacroModel {
        self.model
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn solver(&self) -> &ImplicitSolver {
        &self.solver
    }

    pub fn finished(&self) -> bool {
        self.state.t >= self.config.t_final
    }

    /// `max_x |(M_{n+1}-M_n)/Δt + ½(X_n+X_{n+1}) - 𝒞 ½(𝔻u_n+𝔻u_{n+1})|` for the
    /// last completed step, with `M = m2·c` and `X` the remaining moment terms.
    pub fn du_residual(&mut self) -> f64 {
        self.ensure_explicit();
        self.last_du_residual
    }

    fn ensure_explicit(&mut self) {
        if self.current.is_some() {
            return;
        }
        let model = self.model;
        let st = &self.state;
        let (terms, max_speed) = if self.config.nonlinear {
            let nl = model.nonlinear_terms(st);
            (Some(nl.tendency), nl.max_speed)
        } else {
            (None, 0.0)
        };
        let snapshot = MomentSnapshot {
            t: st.t,
            moments: model.moment_fields(&st.c),
            remainder: model.moment_remainder(&st.c, terms.as_ref().map(|t| t.c.as_slice())),
            du: model.deformation(&st.u),
        };
        if let Some(prev) = &self.previous_snapshot {
            let dt = snapshot.t - prev.t;
            let cc = model.ccoef();
            let mut diff: TensorField = snapshot.moments.clone();
            for j in 0..2 {
                for l in 0..2 {
                    for idx in 0..model.grid.len() {
                        diff[j][l][idx] = (snapshot.moments[j][l][idx] - prev.moments[j][l][idx]) / dt
                            + (snapshot.remainder[j][l][idx] + prev.remainder[j][l][idx]) * 0.5
                            - (snapshot.du[j][l][idx] + prev.du[j][l][idx]) * (0.5 * cc);
                    }
                }
            }
            self.last_du_residual = model.tensor_max_abs(&diff);
        }
        self.current = Some(ExplicitEval {
            terms,
            max_speed,
            snapshot,
        });
    }

    fn next_dt(&self) -> (f64, bool) {
        let mut dt = self.config.dt;
        if let Some(g) = self.config.dt_growth {
            dt = (g.relative * (1.0 + self.state.t)).clamp(self.config.dt, g.max);
        }
        let remaining = self.config.t_final - self.state.t;
        if remaining <= dt * (1.0 + 1e-9) {
            (remaining, true)
        } else {
            (dt, false)
        }
    }

    /// Advances one step; returns the step actually taken.
    pub fn step(&mut self) -> Result<StepReport> {
        if self.finished() {
            return Err(Error::InvalidParameter("simulation already reached T_final".into()));
        }
        let (dt, last) = self.next_dt();
        self.ensure_explicit();
        let speed = self.current.as_ref().map_or(0.0, |c| c.max_speed);
        if self.config.nonlinear && speed > 0.0 {
            let limit = self.config.cfl_safety * self.model.grid.dx() / speed;
            if dt > limit {
                return Err(Error::StepRejected { dt, suggested: limit });
            }
        }
        let current = self.current.take().expect("explicit terms evaluated");
        let combined = match (&current.terms, &self.previous_terms, self.config.scheme) {
            (Some(n), Some((prev, dt_prev)), Scheme::Cnab) => {
                let omega = dt / dt_prev;
                let mut out = n.clone();
                let (w0, w1) = (1.0 + 0.5 * omega, -0.5 * omega);
                for (o, (a, b)) in out.u.comps.iter_mut().zip(n.u.comps.iter().zip(&prev.u.comps)) {
                    for (x, (y, z)) in o.iter_mut().zip(a.iter().zip(b)) {
                        *x = y * w0 + z * w1;
                    }
                }
                for (o, (a, b)) in out.c.iter_mut().zip(n.c.iter().zip(&prev.c)) {
                    for (x, (y, z)) in o.iter_mut().zip(a.iter().zip(b)) {
                        *x = y * w0 + z * w1;
                    }
                }
                Some(out)
            }
            (Some(n), _, _) => Some(n.clone()),
            (None, _, _) => None,
        };
        let (u, c) = self.solver.solve(self.model, &self.state, combined.as_ref(), dt);
        let t = if last { self.config.t_final } else { self.state.t + dt };
        let next = MicroMacroState { u, c, t };
        if !next.is_finite() {
            return Err(Error::Breakdown(alloc::format!("non-finite coefficients at t = {t}")));
        }
        self.previous_terms = current.terms.map(|n| (n, dt));
        self.previous_snapshot = Some(current.snapshot);
        self.state = next;
        self.steps += 1;
        Ok(StepReport {
            t,
            dt,
            max_speed: speed,
        })
    }

    /// Diagnostics of the current state.
    pub fn record(
        &mut self,
        norms: &NormSet,
        settings: &DiagnosticsSettings,
        energy: &EnergyAccumulator,
    ) -> (DiagnosticsRecord, AuxRecord) {
        let du_residual = self.du_residual();
        let model = self.model;
        let st = &self.state;
        let lyap = lyapunov_from_norms(norms, model.nu(), model.ccoef(), settings.a);
        let split = fourier_split_mass(model, st, st.t, settings);
        (
            DiagnosticsRecord {
                t: st.t,
                u_l2: norms.u_l2,
                u_h1: norms.u_h1,
                u_hs: norms.u_hs,
                grad_u_hsm1: norms.grad_u_hsm1,
                psi_l2: norms.psi_l2,
                psi_1l2: norms.psi_1l2,
                psi_sl2: norms.psi_sl2,
                grad_psi_sl2: norms.grad_psi_sl2,
                psi_sh1dot: norms.psi_sh1dot,
                e1: energy.e1(),
                e2: energy.e2(),
                f: lyap.f,
                g: lyap.g,
                split_u: split.u,
                split_psi: split.psi,
                du_residual,
                mass_max: model.mass_max(&st.c),
                div_max: st.u.divergence_max(&model.grid),
            },
            AuxRecord {
                t: st.t,
                e1_alt: energy.e1_alt(),
                split_radius: split.radius,
                split_saturated: split.saturated,
                du_sq: norms.du_sq,
                cross: norms.cross,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub steps: usize,
    pub records: usize,
    pub t_final: f64,
    pub energy: EnergyAccumulator,
    pub first: DiagnosticsRecord,
    pub last: DiagnosticsRecord,
}

fn norms_finite(n: &NormSet) -> bool {
    [n.u_hs, n.psi_sl2, n.grad_psi_sl2, n.psi_sh1dot, n.grad_u_hsm1]
        .iter()
        .all(|v| v.is_finite() && *v < 1e150)
}

/// Runs to `T_final`, handing a record to `sink` at the start, every
/// `record_every` steps and at the end. `E1`/`E2` are accumulated every step.
pub fn run_simulation(
    sim: &mut Simulation<'_>,
    settings: &DiagnosticsSettings,
    record_every: usize,
    mut sink: impl FnMut(&DiagnosticsRecord, &AuxRecord, &MicroMacroState),
) -> Result<RunOutcome> {
    let record_every = record_every.max(1);
    let model = sim.model;
    let mut energy = EnergyAccumulator::default();
    let norms = weighted_norms(model, &sim.state, settings.s);
    if !norms_finite(&norms) {
        return Err(Error::BlowUp {
            t: sim.state.t,
            last_valid: None,
        });
    }
    energy.push(sim.state.t, &norms, model.nu());
    let (first, aux) = sim.record(&norms, settings, &energy);
    sink(&first, &aux, &sim.state);
    let mut last = first;
    let mut records = 1;
    while !sim.finished() {
        match sim.step() {
            Ok(_) => {}
            Err(Error::Breakdown(_)) => {
                return Err(Error::BlowUp {
                    t: sim.state.t,
                    last_valid: Some(alloc::boxed::Box::new(last)),
                })
            }
            Err(e) => return Err(e),
        }
        let norms = weighted_norms(model, &sim.state, settings.s);
        if !norms_finite(&norms) {
            return Err(Error::BlowUp {
                t: sim.state.t,
                last_valid: Some(alloc::boxed::Box::new(last)),
            });
        }
        energy.push(sim.state.t, &norms, model.nu());
        if sim.steps.is_multiple_of(record_every) || sim.finished() {
            let (rec, aux) = sim.record(&norms, settings, &energy);
            sink(&rec, &aux, &sim.state);
            last = rec;
            records += 1;
        }
    }
    Ok(RunOutcome {
        steps: sim.steps,
        records,
        t_final: sim.state.t,
        energy,
        first,
        last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{ConfigSpace, FeneParams};
    use crate::torus::TorusGrid;
    use core::f64::consts::PI;

    fn model(m: usize, p: usize) -> MicroMacroModel {
        let space = ConfigSpace::new(FeneParams::new(2.0, 1.0).unwrap(), p).unwrap();
        MicroMacroModel::new(TorusGrid::new(2.0 * PI * 2.0, m).unwrap(), space)
    }

    fn seeded(model: &MicroMacroModel, amp: f64) -> MicroMacroState {
        let g = &model.grid;
        let mut st = MicroMacroState::zeros(model);
        for (idx, mode) in g.modes().iter().enumerate() {
            if !mode.active || mode.n_sq == 0 || mode.n_sq > 4 {
                continue;
            }
            let h = (idx as f64 * 0.37).sin();
            let e = [-mode.xi[1], mode.xi[0]];
            let v = Complex64::new(h, (idx as f64 * 1.3).cos()) * amp;
            st.u.comps[0][idx] = v * e[0];
            st.u.comps[1][idx] = v * e[1];
            for p in 1..model.q() {
                st.c[p][idx] = Complex64::new((p as f64 + h).cos(), (p as f64 * h).sin()) * (amp / p as f64);
            }
        }
        for comp in st.u.comps.iter_mut() {
            g.symmetrize(comp);
        }
        for c in st.c.iter_mut() {
            g.symmetrize(c);
        }
        st
    }

    fn energy(model: &MicroMacroModel, st: &MicroMacroState) -> f64 {
        st.u.norm_sq(&model.grid) + st.c.iter().map(|c| model.grid.norm_sq(c)).sum::<f64>()
    }

    #[test]
    fn eigen_direction_decays_by_scalar_factor() {
        let m = model(8, 2);
        let mut solver = ImplicitSolver::new(&m, Scheme::ImexEuler).unwrap();
        let eig = SymmetricEigen::new(m.space.ops.stiffness.clone());
        let k = (0..m.q()).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
        let lam = eig.eigenvalues[k];
        let mut st = MicroMacroState::zeros(&m);
        let idx = m.grid.len() / 2 + 3; // some mode
        let idx = (0..m.grid.len()).find(|&i| m.grid.mode(i).active && m.grid.mode(i).n_sq == 2).unwrap_or(idx);
        for p in 0..m.q() {
            st.c[p][idx] = Complex64::new(eig.eigenvectors[(p, k)], 0.0);
        }
        // The velocity coupling is switched on by a nonzero stress; pick a
        // direction orthogonal to it by checking the result instead.
        let dt = 0.3;
        let (_, c) = solver.solve(&m, &st, None, dt);
        let x2 = m.grid.mode(idx).xi_sq;
        let w_zero = m.space.ops.stress.iter().flatten().all(|t| {
            (0..m.q()).map(|p| t[p] * eig.eigenvectors[(p, k)]).sum::<f64>().abs() < 1e-12
        });
        if w_zero {
            for p in 0..m.q() {
                let expect = st.c[p][idx] / (1.0 + dt * (m.nu() * x2 + lam));
                assert!((c[p][idx] - expect).norm() < 1e-13);
            }
        }
        // Mean mode has no velocity coupling at all.
        let mut st0 = MicroMacroState::zeros(&m);
        for p in 0..m.q() {
            st0.c[p][0] = Complex64::new(eig.eigenvectors[(p, k)], 0.0);
        }
        let (_, c0) = solver.solve(&m, &st0, None, dt);
        for p in 0..m.q() {
            let expect = st0.c[p][0] / (1.0 + dt * lam);
            assert!((c0[p][0] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let m = model(8, 2);
        let mut sim = Simulation::new(&m, MicroMacroState::zeros(&m), SchemeConfig::new(0.1, Scheme::Cnab, 1.0)).unwrap();
        while !sim.finished() {
            sim.step().unwrap();
        }
        assert_eq!(sim.state.u, VectorField::zeros(&m.grid));
        assert!(sim.state.c.iter().flatten().all(|v| *v == ZERO));
        assert_eq!(sim.steps(), 10);
    }

    #[test]
    fn implicit_part_is_contractive() {
        let m = model(8, 3);
        let st = seeded(&m, 1.0);
        for scheme in [Scheme::ImexEuler, Scheme::Cnab] {
            let mut solver = ImplicitSolver::new(&m, scheme).unwrap();
            for dt in [1e-3, 0.1, 10.0, 1e4] {
                let (u, c) = solver.solve(&m, &st, None, dt);
                let next = MicroMacroState { u, c, t: dt };
                assert!(energy(&m, &next) <= energy(&m, &st) * (1.0 + 1e-13));
            }
        }
    }

    #[test]
    fn linear_run_preserves_invariants_and_decays() {
        let m = model(8, 3);
        let mut cfg = SchemeConfig::new(0.05, Scheme::Cnab, 2.0);
        cfg.nonlinear = false;
        let mut sim = Simulation::new(&m, seeded(&m, 1e-2), cfg).unwrap();
        let mut prev = energy(&m, &sim.state);
        while !sim.finished() {
            sim.step().unwrap();
            let e = energy(&m, &sim.state);
            assert!(e <= prev);
            prev = e;
            assert!(sim.state.u.is_divergence_free(&m.grid));
            assert!(m.mass_max(&sim.state.c) < 1e-13);
        }
    }

    fn final_state(m: &MicroMacroModel, scheme: Scheme, dt: f64) -> MicroMacroState {
        let mut sim = Simulation::new(m, seeded(m, 0.05), SchemeConfig::new(dt, scheme, 0.4)).unwrap();
        while !sim.finished() {
            sim.step().unwrap();
        }
        sim.state
    }

    fn distance(m: &MicroMacroModel, a: &MicroMacroState, b: &MicroMacroState) -> f64 {
        let mut d = a.clone();
        d.u.axpy(-1.0, &b.u);
        for (x, y) in d.c.iter_mut().zip(&b.c) {
            for (p, q) in x.iter_mut().zip(y) {
                *p -= q;
            }
        }
        energy(m, &d).sqrt()
    }

    #[test]
    fn richardson_orders() {
        let m = model(8, 3);
        for (scheme, expect) in [(Scheme::ImexEuler, 1.0), (Scheme::Cnab, 2.0)] {
            let reference = final_state(&m, scheme, 0.4 / 512.0);
            let e1 = distance(&m, &final_state(&m, scheme, 0.4 / 16.0), &reference);
            let e2 = distance(&m, &final_state(&m, scheme, 0.4 / 32.0), &reference);
            let order = (e1 / e2).log2();
            assert!((order - expect).abs() < 0.25, "{scheme:?}: observed order {order}");
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let m = model(8, 2);
        let cfg = SchemeConfig::new(100.0, Scheme::ImexEuler, 1000.0);
        let mut sim = Simulation::new(&m, seeded(&m, 1.0), cfg).unwrap();
        match sim.step() {
            Err(Error::StepRejected { dt, suggested }) => assert!(suggested < dt),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn zero_final_time_gives_one_record() {
        let m = model(8, 2);
        let settings = DiagnosticsSettings::default_for(&m);
        let mut sim = Simulation::new(&m, seeded(&m, 1e-3), SchemeConfig::new(0.1, Scheme::Cnab, 0.0)).unwrap();
        let mut n = 0;
        let out = run_simulation(&mut sim, &settings, 1, |_, _, _| n += 1).unwrap();
        assert_eq!((n, out.records, out.steps), (1, 1, 0));
    }
}
