//! The coupled perturbation system on `ℝ²_x × B_R`:
//!
//! ```text
//! ∂t u + u·∇u + ∇p = div τ,                 div u = 0,
//! ∂t ψ + u·∇ψ = νΔψ + div_R(ψ∞ ∇_R(ψ/ψ∞)) - div_R(∇u·R ψ) - div_R(∇u·R ψ∞),
//! τ_lm = ∫ R_l ∂_m𝒰 ψ dR,
//! ```
//!
//! with `ψ = ψ∞ Σ_p c_p(x) φ_p(R)` and `(∇u·R)_i = Σ_j ∂_j u_i R_j`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::ball::ConfigSpace;
use crate::torus::{Spectrum, TorusGrid, VectorField};
use crate::{Error, Result};

/// A symmetric or general 2×2 tensor field, one spectrum per component.
pub type TensorField = [[Spectrum; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct MicroMacroState {
    /// Velocity spectrum.
    pub u: VectorField,
    /// `c[p]` is the spectrum of the Galerkin coefficient `c_p(x)`.
    pub c: Vec<Spectrum>,
    pub t: f64,
}

impl MicroMacroState {
    pub fn zeros(model: &MicroMacroModel) -> Self {
        Self {
            u: VectorField::zeros(&model.grid),
            c: vec![model.grid.zeros(); model.q()],
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .comps
            .iter()
            .chain(self.c.iter())
            .all(|s| s.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }
}

/// Time derivative (or a part of it) of a [`MicroMacroState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub u: VectorField,
    pub c: Vec<Spectrum>,
}

impl Tendency {
    pub fn zeros(model: &MicroMacroModel) -> Self {
        Self {
            u: VectorField::zeros(&model.grid),
            c: vec![model.grid.zeros(); model.q()],
        }
    }

    pub fn add(&mut self, other: &Self) {
        self.u.axpy(1.0, &other.u);
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressField {
    pub tau: TensorField,
}

/// Explicitly treated terms together with the data the step controller needs.
#[derive(Debug, Clone)]
pub struct NonlinearTerms {
    pub tendency: Tendency,
    pub max_speed: f64,
}

#[derive(Debug, Clone, Copy)]
struct DragEntry {
    p: usize,
    q: usize,
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Debug, Clone)]
pub struct MicroMacroModel {
    pub grid: TorusGrid,
    pub space: ConfigSpace,
    drag_entries: Vec<DragEntry>,
}

impl MicroMacroModel {
    pub fn new(grid: TorusGrid, space: ConfigSpace) -> Self {
        let ops = &space.ops;
        let scale = ops
            .drag
            .iter()
            .flatten()
            .map(|d| d.amax())
            .fold(0.0, f64::max);
        let mut drag_entries = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                let d = &ops.drag[i][j];
                for p in 0..d.nrows() {
                    for q in 0..d.ncols() {
                        let value = d[(p, q)];
                        if value.abs() > 1e-14 * scale {
                            drag_entries.push(DragEntry { p, q, i, j, value });
                        }
                    }
                }
            }
        }
        Self {
            grid,
            space,
            drag_entries,
        }
    }

    pub fn q(&self) -> usize {
        self.space.len()
    }

    pub fn nu(&self) -> f64 {
        self.space.params.nu
    }

    /// `𝒞 = 2 ∫ R_1² ψ∞ dR`.
    pub fn ccoef(&self) -> f64 {
        self.space.params.ccoef
    }

    /// `g[i][j] = ∂_j u_i`.
    pub fn velocity_gradient(&self, u: &VectorField) -> TensorField {
        let g = &self.grid;
        [
            [g.derivative(&u.comps[0], 0, 1), g.derivative(&u.comps[0], 1, 1)],
            [g.derivative(&u.comps[1], 0, 1), g.derivative(&u.comps[1], 1, 1)],
        ]
    }

    /// `𝔻u = (∇u + ∇uᵀ)/2`.
    pub fn deformation(&self, u: &VectorField) -> TensorField {
        let g = self.velocity_gradient(u);
        let off: Spectrum = g[0][1].iter().zip(&g[1][0]).map(|(a, b)| (a + b) * 0.5).collect();
        [[g[0][0].clone(), off.clone()], [off, g[1][1].clone()]]
    }

    /// Contracts each mode's coefficient vector with `w`: `Σ_p w_p c_p(ξ)`.
    fn contract(&self, w: &[f64], c: &[Spectrum]) -> Spectrum {
        let mut out = self.grid.zeros();
        for (wp, cp) in w.iter().zip(c) {
            if *wp == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(cp) {
                *o += v * *wp;
            }
        }
        out
    }

    /// `τ = ∫ R ⊗ ∇𝒰 ψ dR`.
    pub fn stress(&self, c: &[Spectrum]) -> StressField {
        let s = &self.space.ops.stress;
        let t01 = self.contract(&s[0][1], c);
        StressField {
            tau: [
                [self.contract(&s[0][0], c), t01.clone()],
                [t01, self.contract(&s[1][1], c)],
            ],
        }
    }

    /// Second moments `∫ R_j R_k ψ dR`.
    pub fn moment_fields(&self, c: &[Spectrum]) -> TensorField {
        let m = &self.space.ops.moments;
        let m01 = self.contract(&m[0][1], c);
        [
            [self.contract(&m[0][0], c), m01.clone()],
            [m01, self.contract(&m[1][1], c)],
        ]
    }

    /// `ℙ div τ`.
    pub fn stress_divergence(&self, c: &[Spectrum]) -> VectorField {
        self.divergence_of(&self.stress(c).tau)
    }

    /// Applies `-(ν|ξ|² + S)` to the coefficient spectra.
    pub fn dissipation(&self, c: &[Spectrum]) -> Vec<Spectrum> {
        let q = self.q();
        let s = &self.space.ops.stiffness;
        let nu = self.nu();
        let mut out = vec![self.grid.zeros(); q];
        let mut local = vec![Complex64::new(0.0, 0.0); q];
        for (idx, mode) in self.grid.modes().iter().enumerate() {
            for p in 0..q {
                local[p] = c[p][idx];
            }
            for p in 0..q {
                let mut acc = local[p] * (-nu * mode.xi_sq);
                for qq in 0..q {
                    acc -= local[qq] * s[(p, qq)];
                }
                out[p][idx] = acc;
            }
        }
        out
    }

    /// Stress `τ_lm = Σ_ij K[l][m][i][j] ∂_j u_i` for a 4-index closure tensor `K`.
    pub fn stress_from_gradient(&self, u: &VectorField, closure: &[[[[f64; 2]; 2]; 2]; 2]) -> StressField {
        let g = self.velocity_gradient(u);
        let mut tau: TensorField = [[self.grid.zeros(), self.grid.zeros()], [self.grid.zeros(), self.grid.zeros()]];
        for l in 0..2 {
            for m in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let k = closure[l][m][i][j];
                        if k == 0.0 {
                            continue;
                        }
                        for (t, v) in tau[l][m].iter_mut().zip(&g[i][j]) {
                            *t += v * k;
                        }
                    }
                }
            }
        }
        StressField { tau }
    }

    /// `ℙ div ∫ div_R(-∇u·Rψ∞) R⊗∇𝒰 dR` through the exact closure tensor;
    /// equals `c₂Δu` for divergence-free `u`.
    pub fn closure_velocity(&self, u: &VectorField) -> VectorField {
        self.divergence_of(&self.stress_from_gradient(u, &self.space.ops.closure).tau)
    }

    /// The same pipeline through the truncated Galerkin contraction:
    /// equilibrium drag to coefficients, then coefficients to stress.
    pub fn galerkin_closure_velocity(&self, u: &VectorField) -> VectorField {
        self.stress_divergence(&self.equilibrium_drag(u))
    }

    fn divergence_of(&self, tau: &TensorField) -> VectorField {
        let g = &self.grid;
        let mut f = VectorField::zeros(g);
        for (l, comp) in f.comps.iter_mut().enumerate() {
            let a = g.derivative(&tau[l][0], 0, 1);
            let b = g.derivative(&tau[l][1], 1, 1);
            *comp = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        }
        g.leray_project(&f)
    }

    /// Linearised drag on the equilibrium, `-div_R(∇u·R ψ∞)` in coefficients.
    pub fn equilibrium_drag(&self, u: &VectorField) -> Vec<Spectrum> {
        let g = self.velocity_gradient(u);
        let src = &self.space.ops.drag_source;
        let mut out = vec![self.grid.zeros(); self.q()];
        for i in 0..2 {
            for j in 0..2 {
                for (p, o) in out.iter_mut().enumerate() {
                    let b = src[i][j][p];
                    if b == 0.0 {
                        continue;
                    }
                    for (x, y) in o.iter_mut().zip(&g[i][j]) {
                        *x += y * b;
                    }
                }
            }
        }
        out
    }

    /// The linear part `(ℙ div τ, νΔc - Sc - div_R(∇u·R ψ∞))`.
    pub fn linear_tendency(&self, st: &MicroMacroState) -> Tendency {
        let mut c = self.dissipation(&st.c);
        for (a, b) in c.iter_mut().zip(self.equilibrium_drag(&st.u)) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Tendency {
            u: self.stress_divergence(&st.c),
            c,
        }
    }

    /// `(-ℙ(u·∇u), -u·∇c - div_R(∇u·R ψ))`, dealiased.
    pub fn nonlinear_terms(&self, st: &MicroMacroState) -> NonlinearTerms {
        let g = &self.grid;
        let n = g.len();
        let q = self.q();
        let (u1, u2) = g.to_physical_pair(&st.u.comps[0], &st.u.comps[1]);
        let max_speed = u1
            .iter()
            .zip(&u2)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max);

        let gs = self.velocity_gradient(&st.u);
        let (g00, g01) = g.to_physical_pair(&gs[0][0], &gs[0][1]);
        let (g10, g11) = g.to_physical_pair(&gs[1][0], &gs[1][1]);
        let grad = [[g00, g01], [g10, g11]];

        let adv: Vec<Vec<f64>> = (0..2)
            .map(|i| (0..n).map(|x| u1[x] * grad[i][0][x] + u2[x] * grad[i][1][x]).collect())
            .collect();
        let (a1, a2) = g.to_spectral_pair(&adv[0], &adv[1]);
        let mut du = g.leray_project(&VectorField { comps: [a1, a2] });
        du.scale(-1.0);

        let mut c_phys: Vec<Vec<f64>> = Vec::with_capacity(q);
        let mut p = 0;
        while p < q {
            if p + 1 < q {
                let (a, b) = g.to_physical_pair(&st.c[p], &st.c[p + 1]);
                c_phys.push(a);
                c_phys.push(b);
                p += 2;
            } else {
                c_phys.push(g.to_physical(&st.c[p]));
                p += 1;
            }
        }

        let mut out: Vec<Vec<f64>> = Vec::with_capacity(q);
        for cp in &st.c {
            let (d1, d2) = g.to_physical_pair(&g.derivative(cp, 0, 1), &g.derivative(cp, 1, 1));
            out.push((0..n).map(|x| -(u1[x] * d1[x] + u2[x] * d2[x])).collect());
        }
        for e in &self.drag_entries {
            let gij = &grad[e.i][e.j];
            let cq = &c_phys[e.q];
            let o = &mut out[e.p];
            for x in 0..n {
                o[x] += e.value * gij[x] * cq[x];
            }
        }

        let mut dc = Vec::with_capacity(q);
        let mut p = 0;
        while p < q {
            if p + 1 < q {
                let (a, b) = g.to_spectral_pair(&out[p], &out[p + 1]);
                dc.push(a);
                dc.push(b);
                p += 2;
            } else {
                dc.push(g.to_spectral(&out[p]));
                p += 1;
            }
        }

        NonlinearTerms {
            tendency: Tendency { u: du, c: dc },
            max_speed,
        }
    }

    pub fn rhs_velocity(&self, st: &MicroMacroState, nonlinear: bool) -> VectorField {
        let mut f = self.stress_divergence(&st.c);
        if nonlinear {
            f.axpy(1.0, &self.nonlinear_terms(st).tendency.u);
        }
        f
    }

    pub fn rhs_distribution(&self, st: &MicroMacroState, nonlinear: bool) -> Vec<Spectrum> {
        let mut f = self.linear_tendency(st).c;
        if nonlinear {
            for (a, b) in f.iter_mut().zip(self.nonlinear_terms(st).tendency.c) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
        f
    }

    pub fn rhs(&self, st: &MicroMacroState, nonlinear: bool) -> Tendency {
        let mut f = self.linear_tendency(st);
        if nonlinear {
            f.add(&self.nonlinear_terms(st).tendency);
        }
        f
    }

    /// Moments of every term of the ψ equation other than `∂tψ` and the
    /// equilibrium drag: `m2·(ν|ξ|²c + Sc - N)`, where `N` holds the explicit terms.
    pub fn moment_remainder(&self, c: &[Spectrum], explicit_c: Option<&[Spectrum]>) -> TensorField {
        let mut rest = self.dissipation(c);
        for r in rest.iter_mut() {
            for v in r.iter_mut() {
                *v = -*v;
            }
        }
        if let Some(n) = explicit_c {
            for (a, b) in rest.iter_mut().zip(n) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x -= y;
                }
            }
        }
        self.moment_fields(&rest)
    }

    /// Recovers `𝔻u` from `∂tψ` by testing the ψ equation against `R ⊗ R`:
    /// `𝒞 𝔻u = ∫ R⊗R (∂tψ + u·∇ψ - νΔψ - 𝓛ψ + div_R(∇u·R ψ)) dR`.
    pub fn reconstruct_du(
        &self,
        st: &MicroMacroState,
        c_dot: &[Spectrum],
        explicit_c: Option<&[Spectrum]>,
    ) -> Result<TensorField> {
        let cc = self.ccoef();
        if !(cc > 0.0) {
            return Err(Error::Breakdown(alloc::format!("second-moment constant {cc} is not positive")));
        }
        let rate = self.moment_fields(c_dot);
        let rest = self.moment_remainder(&st.c, explicit_c);
        let mut out = rate;
        for (orow, rrow) in out.iter_mut().zip(&rest) {
            for (o, r) in orow.iter_mut().zip(rrow) {
                for (x, y) in o.iter_mut().zip(r) {
                    *x = (*x + y) / cc;
                }
            }
        }
        Ok(out)
    }

    /// `max_x |∫_B ψ dR| = max_x |c_0(x)|`.
    pub fn mass_max(&self, c: &[Spectrum]) -> f64 {
        self.grid
            .to_physical(&c[0])
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Maximum over the grid of every component of a tensor field.
    pub fn tensor_max_abs(&self, t: &TensorField) -> f64 {
        let g = &self.grid;
        let (a, b) = g.to_physical_pair(&t[0][0], &t[0][1]);
        let (c, d) = g.to_physical_pair(&t[1][0], &t[1][1]);
        [a, b, c, d]
            .iter()
            .flat_map(|v| v.iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::FeneParams;
    use core::f64::consts::PI;

    fn model() -> MicroMacroModel {
        let params = FeneParams::new(2.0, 1.0).unwrap();
        let space = ConfigSpace::new(params, 3).unwrap();
        MicroMacroModel::new(TorusGrid::new(2.0 * PI * 4.0, 16).unwrap(), space)
    }

    fn smooth_state(model: &MicroMacroModel) -> MicroMacroState {
        let g = &model.grid;
        let l = g.l_box;
        let mut st = MicroMacroState::zeros(model);
        let x = |j: usize| 2.0 * PI * (j / g.m) as f64 / g.m as f64;
        let y = |j: usize| 2.0 * PI * (j % g.m) as f64 / g.m as f64;
        // Stream function ϕ = sin(x) cos(2y): u = (∂_2ϕ, -∂_1ϕ).
        let s = 2.0 * PI / l;
        let u1: Vec<f64> = (0..g.len()).map(|j| -2.0 * s * libm::sin(x(j)) * libm::sin(2.0 * y(j))).collect();
        let u2: Vec<f64> = (0..g.len()).map(|j| -s * libm::cos(x(j)) * libm::cos(2.0 * y(j))).collect();
        st.u.comps = [g.to_spectral(&u1), g.to_spectral(&u2)];
        for p in 1..model.q() {
            let f: Vec<f64> = (0..g.len())
                .map(|j| {
                    0.1 / p as f64 * libm::cos(x(j) + p as f64 * y(j))
                        + 0.05 * libm::sin(p as f64) * libm::sin(x(j) + 0.3) * libm::cos(2.0 * y(j))
                })
                .collect();
            st.c[p] = g.to_spectral(&f);
        }
        st
    }

    #[test]
    fn velocity_is_divergence_free() {
        let m = model();
        let st = smooth_state(&m);
        assert!(st.u.is_divergence_free(&m.grid));
        let f = m.rhs_velocity(&st, true);
        assert!(f.is_divergence_free(&m.grid));
    }

    #[test]
    fn linear_energy_cancellation() {
        // <u, div τ> + <c, drag_eq> = 0 for the linear coupling.
        let m = model();
        let st = smooth_state(&m);
        let g = &m.grid;
        let fu = m.stress_divergence(&st.c);
        let fc = m.equilibrium_drag(&st.u);
        let a = st.u.inner(&fu, g);
        let b: f64 = st.c.iter().zip(&fc).map(|(x, y)| g.inner(x, y)).sum();
        assert!((a + b).abs() < 1e-12 * (a.abs() + 1e-300), "{a} {b}");
    }

    #[test]
    fn nonlinear_terms_conserve_energy() {
        let m = model();
        let st = smooth_state(&m);
        let g = &m.grid;
        let n = m.nonlinear_terms(&st).tendency;
        let eu = st.u.inner(&n.u, g);
        let ec: f64 = st.c.iter().zip(&n.c).map(|(x, y)| g.inner(x, y)).sum();
        let scale: f64 = n.c.iter().map(|x| g.norm_sq(x)).sum::<f64>().sqrt();
        // Transport is skew; the drag is skew in the ψ∞-weighted L² up to the
        // (div u) c0 term, which vanishes.
        assert!(eu.abs() < 1e-12 * scale.max(1e-300) + 1e-15, "{eu}");
        assert!(ec.abs() < 1e-10 * scale, "{ec} vs {scale}");
    }

    #[test]
    fn closure_gives_c2_laplacian() {
        let m = model();
        let st = smooth_state(&m);
        let v = m.closure_velocity(&st.u);
        let c2 = m.space.params.c2;
        let mut expect = VectorField {
            comps: [m.grid.laplacian(&st.u.comps[0]), m.grid.laplacian(&st.u.comps[1])],
        };
        expect.scale(c2);
        let mut diff = v.clone();
        diff.axpy(-1.0, &expect);
        assert!(diff.coefficient_norm() < 1e-12 * expect.coefficient_norm());
        // The Galerkin route only converges with the degree.
        let mut g = m.galerkin_closure_velocity(&st.u);
        g.axpy(-1.0, &expect);
        assert!(g.coefficient_norm() < 0.5 * expect.coefficient_norm());
    }

    #[test]
    fn du_reconstruction_is_exact() {
        let m = model();
        let st = smooth_state(&m);
        let n = m.nonlinear_terms(&st).tendency;
        let rhs = m.rhs(&st, true);
        let du = m.reconstruct_du(&st, &rhs.c, Some(&n.c)).unwrap();
        let exact = m.deformation(&st.u);
        let mut diff = exact.clone();
        for l in 0..2 {
            for k in 0..2 {
                for (d, r) in diff[l][k].iter_mut().zip(&du[l][k]) {
                    *d -= r;
                }
            }
        }
        assert!(m.tensor_max_abs(&diff) < 1e-12 * m.tensor_max_abs(&exact));
    }
}
