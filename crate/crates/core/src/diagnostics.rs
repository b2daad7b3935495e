//! Measured quantities: weighted norms, the energy functionals, the Lyapunov
//! pair `(f, g)`, Fourier-splitting masses and algebraic decay fits.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::ball::BallOperators;
use crate::micromacro::{MicroMacroModel, MicroMacroState};
use crate::torus::{Spectrum, TorusGrid};
use crate::{Error, Result};

/// Column order of the time-series output.
pub const CSV_COLUMNS: [&str; 19] = [
    "t",
    "u_l2",
    "u_h1",
    "u_hs",
    "grad_u_hsm1",
    "psi_L2",
    "psi_1L2",
    "psi_sL2",
    "grad_psi_sL2",
    "psi_sH1dot",
    "E1",
    "E2",
    "f",
    "g",
    "split_u",
    "split_psi",
    "du_residual",
    "mass_max",
    "div_max",
];

/// One row of the diagnostics time series.
///
/// Norms are stored unsquared; `e1`, `e2`, `f`, `g` and the split masses are
/// quadratic quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub u_l2: f64,
    pub u_h1: f64,
    pub u_hs: f64,
    pub grad_u_hsm1: f64,
    pub psi_l2: f64,
    pub psi_1l2: f64,
    pub psi_sl2: f64,
    pub grad_psi_sl2: f64,
    pub psi_sh1dot: f64,
    pub e1: f64,
    pub e2: f64,
    pub f: f64,
    pub g: f64,
    pub split_u: f64,
    pub split_psi: f64,
    pub du_residual: f64,
    pub mass_max: f64,
    pub div_max: f64,
}

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 19] {
        [
            self.t,
            self.u_l2,
            self.u_h1,
            self.u_hs,
            self.grad_u_hsm1,
            self.psi_l2,
            self.psi_1l2,
            self.psi_sl2,
            self.grad_psi_sl2,
            self.psi_sh1dot,
            self.e1,
            self.e2,
            self.f,
            self.g,
            self.split_u,
            self.split_psi,
            self.du_residual,
            self.mass_max,
            self.div_max,
        ]
    }

    pub fn from_values(v: [f64; 19]) -> Self {
        Self {
            t: v[0],
            u_l2: v[1],
            u_h1: v[2],
            u_hs: v[3],
            grad_u_hsm1: v[4],
            psi_l2: v[5],
            psi_1l2: v[6],
            psi_sl2: v[7],
            grad_psi_sl2: v[8],
            psi_sh1dot: v[9],
            e1: v[10],
            e2: v[11],
            f: v[12],
            g: v[13],
            split_u: v[14],
            split_psi: v[15],
            du_residual: v[16],
            mass_max: v[17],
            div_max: v[18],
        }
    }

    /// Name of the first column violating "finite, and nonnegative except `f`".
    ///
    /// `f` carries the cross term and is only nonnegative for small `a`.
    pub fn invalid_column(&self) -> Option<&'static str> {
        self.values()
            .iter()
            .zip(CSV_COLUMNS)
            .find(|(v, name)| !v.is_finite() || (*name != "f" && **v < 0.0))
            .map(|(_, name)| name)
    }
}

/// Quantities recorded alongside [`DiagnosticsRecord`] but kept out of the main table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuxRecord {
    pub t: f64,
    /// `E1` with `ν` on the `‖∇ψ‖²` integral only.
    pub e1_alt: f64,
    pub split_radius: f64,
    pub split_saturated: bool,
    /// `‖𝔻u‖²`.
    pub du_sq: f64,
    /// `∬ (ψ R⊗R):𝔻u`.
    pub cross: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsSettings {
    /// Sobolev index of the energy norms.
    pub s: u32,
    /// Weight of the cross term in `f`.
    pub a: f64,
    /// Shift in `d(t) = (η+t)^{s_exp}`.
    pub eta: f64,
    pub s_exp: f64,
}

impl DiagnosticsSettings {
    pub fn new(s: u32, a: f64, eta: f64, s_exp: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("a = {a} must be positive")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("eta = {eta} must be positive")));
        }
        if !(s_exp > 0.0 && s_exp.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("s_exp = {s_exp} must be positive")));
        }
        Ok(Self { s, a, eta, s_exp })
    }

    /// `s = 3`, `a = min(a*, 0.1/𝒞)`, `η = 1`, `s_exp = N/2 + 1`.
    pub fn default_for(model: &MicroMacroModel) -> Self {
        Self {
            s: 3,
            a: default_a(&model.space.ops, model.ccoef()),
            eta: 1.0,
            s_exp: crate::SPACE_DIM as f64 / 2.0 + 1.0,
        }
    }
}

/// Largest `a` for which `½Θ ≤ f ≤ 2Θ`, `Θ = ‖u‖₁² + ‖ψ‖²_{1,𝓛²}`.
///
/// With `K` the `Q × 4` matrix of second-moment vectors and `‖𝔻u‖² = ½‖∇u‖²`,
/// `|∬(ψR⊗R):𝔻u| ≤ ‖K‖ ‖ψ‖_{𝓛²} ‖𝔻u‖ ≤ ‖K‖ Θ / (2√2)`, so `2a|cross| ≤ Θ/2`
/// once `a ≤ 1/(√2 ‖K‖)`.
pub fn a_star(ops: &BallOperators) -> f64 {
    let q = ops.len();
    let mut k = DMatrix::zeros(q, 4);
    for j in 0..2 {
        for l in 0..2 {
            for p in 0..q {
                k[(p, 2 * j + l)] = ops.moments[j][l][p];
            }
        }
    }
    let ktk = k.transpose() * &k;
    let lmax = SymmetricEigen::new(ktk).eigenvalues.iter().cloned().fold(0.0, f64::max);
    1.0 / (core::f64::consts::SQRT_2 * lmax.sqrt())
}

pub fn default_a(ops: &BallOperators, ccoef: f64) -> f64 {
    a_star(ops).min(0.1 / ccoef)
}

/// `Σ_{|α|≤s} ξ₁^{2α₁} ξ₂^{2α₂}`, the exact multiplier of `‖·‖²_{H^s}`.
pub fn sobolev_weight(xi: [f64; 2], s: u32) -> f64 {
    let a = xi[0] * xi[0];
    let b = xi[1] * xi[1];
    let mut total = 0.0;
    let mut pa = 1.0;
    for i in 0..=s {
        let mut pb = 1.0;
        for _ in 0..=(s - i) {
            total += pa * pb;
            pb *= b;
        }
        pa *= a;
    }
    total
}

/// All norms of one state. Entries named `*_sq` and `cross` are quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormSet {
    pub u_l2: f64,
    pub u_h1: f64,
    pub u_hs: f64,
    pub grad_u_hsm1: f64,
    pub psi_l2: f64,
    pub psi_1l2: f64,
    pub psi_sl2: f64,
    pub grad_psi_1l2: f64,
    pub grad_psi_sl2: f64,
    pub psi_1h1dot: f64,
    pub psi_sh1dot: f64,
    pub du_sq: f64,
    pub cross: f64,
}

pub fn weighted_norms(model: &MicroMacroModel, st: &MicroMacroState, s: u32) -> NormSet {
    let grid = &model.grid;
    let ops = &model.space.ops;
    let q = model.q();
    let stiff = &ops.stiffness;
    let mom = &ops.moments;
    let mut acc = [0.0f64; 13];
    let mut local = vec![Complex64::new(0.0, 0.0); q];
    for (idx, mode) in grid.modes().iter().enumerate() {
        let u = [st.u.comps[0][idx], st.u.comps[1][idx]];
        let uu = u[0].norm_sqr() + u[1].norm_sqr();
        let mut cc = 0.0;
        let mut nonzero = false;
        for p in 0..q {
            local[p] = st.c[p][idx];
            cc += local[p].norm_sqr();
            nonzero |= local[p] != Complex64::new(0.0, 0.0);
        }
        if uu == 0.0 && !nonzero {
            continue;
        }
        let mut h1 = 0.0;
        let mut m2 = [[Complex64::new(0.0, 0.0); 2]; 2];
        if nonzero {
            for a in 0..q {
                let mut row = Complex64::new(0.0, 0.0);
                for b in 0..q {
                    row += local[b] * stiff[(a, b)];
                }
                h1 += (local[a].conj() * row).re;
            }
            for j in 0..2 {
                for l in 0..2 {
                    m2[j][l] = (0..q).map(|p| local[p] * mom[j][l][p]).sum();
                }
            }
        }
        let mut du = [[Complex64::new(0.0, 0.0); 2]; 2];
        if !mode.nyquist {
            for j in 0..2 {
                for l in 0..2 {
                    du[j][l] = Complex64::new(0.0, 0.5) * (u[j] * mode.xi[l] + u[l] * mode.xi[j]);
                }
            }
        }
        let du_sq: f64 = du.iter().flatten().map(|v| v.norm_sqr()).sum();
        let cross: f64 = (0..2)
            .flat_map(|j| (0..2).map(move |l| (j, l)))
            .map(|(j, l)| (m2[j][l] * du[j][l].conj()).re)
            .sum();
        let w1 = sobolev_weight(mode.xi, 1);
        let ws = sobolev_weight(mode.xi, s);
        let wsm1 = if s == 0 { 0.0 } else { sobolev_weight(mode.xi, s - 1) };
        let x2 = mode.xi_sq;
        let terms = [
            uu,
            w1 * uu,
            ws * uu,
            wsm1 * x2 * uu,
            cc,
            w1 * cc,
            ws * cc,
            w1 * x2 * cc,
            ws * x2 * cc,
            w1 * h1,
            ws * h1,
            du_sq,
            cross,
        ];
        for (a, t) in acc.iter_mut().zip(terms) {
            *a += t;
        }
    }
    let v = grid.volume();
    let n = |x: f64| (v * x).max(0.0).sqrt();
    NormSet {
        u_l2: n(acc[0]),
        u_h1: n(acc[1]),
        u_hs: n(acc[2]),
        grad_u_hsm1: n(acc[3]),
        psi_l2: n(acc[4]),
        psi_1l2: n(acc[5]),
        psi_sl2: n(acc[6]),
        grad_psi_1l2: n(acc[7]),
        grad_psi_sl2: n(acc[8]),
        psi_1h1dot: n(acc[9]),
        psi_sh1dot: n(acc[10]),
        du_sq: v * acc[11],
        cross: v * acc[12],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovPair {
    pub f: f64,
    pub g: f64,
}

/// `f = ‖u‖₁² + ‖ψ‖²_{1,𝓛²} - 2a∬(ψR⊗R):𝔻u`,
/// `g = ν‖∇ψ‖²_{1,𝓛²} + ‖ψ‖²_{1,Ḣ¹} + 2a𝒞‖𝔻u‖²`.
pub fn lyapunov_from_norms(n: &NormSet, nu: f64, ccoef: f64, a: f64) -> LyapunovPair {
    LyapunovPair {
        f: n.u_h1 * n.u_h1 + n.psi_1l2 * n.psi_1l2 - 2.0 * a * n.cross,
        g: nu * n.grad_psi_1l2 * n.grad_psi_1l2 + n.psi_1h1dot * n.psi_1h1dot + 2.0 * a * ccoef * n.du_sq,
    }
}

pub fn lyapunov_pair(model: &MicroMacroModel, st: &MicroMacroState, a: f64) -> LyapunovPair {
    lyapunov_from_norms(&weighted_norms(model, st, 1), model.nu(), model.ccoef(), a)
}

/// `d(t) = (η + t)^{s_exp}`.
pub fn weight_d(t: f64, settings: &DiagnosticsSettings) -> f64 {
    libm::pow(settings.eta + t, settings.s_exp)
}

pub fn weight_d_prime(t: f64, settings: &DiagnosticsSettings) -> f64 {
    settings.s_exp * libm::pow(settings.eta + t, settings.s_exp - 1.0)
}

/// Radius of `S(t) = {|ξ|² ≤ (2/(a𝒞)) d'(t)/d(t)}`.
pub fn split_radius(t: f64, settings: &DiagnosticsSettings, ccoef: f64) -> f64 {
    (2.0 * settings.s_exp / (settings.a * ccoef * (settings.eta + t))).sqrt()
}

/// First time at which `S(t)` no longer contains a nonzero lattice mode.
pub fn saturation_time(xi_min: f64, settings: &DiagnosticsSettings, ccoef: f64) -> f64 {
    (2.0 * settings.s_exp / (settings.a * ccoef * xi_min * xi_min) - settings.eta).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMass {
    pub u: f64,
    pub psi: f64,
    pub radius: f64,
    /// The ball has shrunk below the lattice spacing; only the mean mode is counted.
    pub saturated: bool,
}

/// `volume · Σ_{|ξ| ≤ radius} Σ_f |f̂(ξ)|²` over the given spectra.
pub fn split_mass_of(grid: &TorusGrid, fields: &[&Spectrum], radius: f64) -> f64 {
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut acc = 0.0;
    for (idx, mode) in grid.modes().iter().enumerate() {
        if mode.xi_sq <= r2 {
            acc += fields.iter().map(|f| f[idx].norm_sqr()).sum::<f64>();
        }
    }
    grid.volume() * acc
}

pub fn fourier_split_mass(
    model: &MicroMacroModel,
    st: &MicroMacroState,
    t: f64,
    settings: &DiagnosticsSettings,
) -> SplitMass {
    let grid = &model.grid;
    let radius = split_radius(t, settings, model.ccoef());
    let u: Vec<&Spectrum> = st.u.comps.iter().collect();
    let c: Vec<&Spectrum> = st.c.iter().collect();
    SplitMass {
        u: split_mass_of(grid, &u, radius),
        psi: split_mass_of(grid, &c, radius),
        radius,
        saturated: radius < grid.xi_min(),
    }
}

/// Running `E1`, `E1_alt` and `E2`, accumulated with the trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyAccumulator {
    sup_u: f64,
    sup_psi: f64,
    diss: f64,
    diss_alt: f64,
    e2: f64,
    last: Option<[f64; 4]>,
}

impl EnergyAccumulator {
    /// Adds the state at time `t` with norms `n`.
    pub fn push(&mut self, t: f64, n: &NormSet, nu: f64) {
        let gp = n.grad_psi_sl2 * n.grad_psi_sl2;
        let hp = n.psi_sh1dot * n.psi_sh1dot;
        let rates = [t, nu * (gp + hp), nu * gp + hp, n.grad_u_hsm1 * n.grad_u_hsm1];
        if let Some(prev) = self.last {
            let h = 0.5 * (t - prev[0]);
            self.diss += h * (prev[1] + rates[1]);
            self.diss_alt += h * (prev[2] + rates[2]);
            self.e2 += h * (prev[3] + rates[3]);
        }
        self.sup_u = self.sup_u.max(n.u_hs * n.u_hs);
        self.sup_psi = self.sup_psi.max(n.psi_sl2 * n.psi_sl2);
        self.last = Some(rates);
    }

    pub fn e1(&self) -> f64 {
        self.sup_u + self.sup_psi + self.diss
    }

    pub fn e1_alt(&self) -> f64 {
        self.sup_u + self.sup_psi + self.diss_alt
    }

    pub fn e2(&self) -> f64 {
        self.e2
    }
}

/// `(E1(t), E2(t))` at every record of a uniformly spaced stream.
pub fn energy_functionals(records: &[DiagnosticsRecord], nu: f64) -> Result<Vec<(f64, f64)>> {
    if records.len() > 2 {
        let first = records[1].t - records[0].t;
        for w in records.windows(2) {
            let found = w[1].t - w[0].t;
            if (found - first).abs() > 1e-9 * first.abs().max(1e-300) {
                return Err(Error::NonuniformSpacing { first, found });
            }
        }
    }
    let mut acc = EnergyAccumulator::default();
    Ok(records
        .iter()
        .map(|r| {
            let n = NormSet {
                u_hs: r.u_hs,
                psi_sl2: r.psi_sl2,
                grad_psi_sl2: r.grad_psi_sl2,
                psi_sh1dot: r.psi_sh1dot,
                grad_u_hsm1: r.grad_u_hsm1,
                ..NormSet::default()
            };
            acc.push(r.t, &n, nu);
            (acc.e1(), acc.e2())
        })
        .collect())
}

/// Norm fitted by [`decay_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecaySeries {
    VelocityL2,
    VelocityH1,
    PsiL2,
    PsiH1,
}

impl DecaySeries {
    pub fn select(self, r: &DiagnosticsRecord) -> f64 {
        match self {
            DecaySeries::VelocityL2 => r.u_l2,
            DecaySeries::VelocityH1 => r.u_h1,
            DecaySeries::PsiL2 => r.psi_l2,
            DecaySeries::PsiH1 => r.psi_1l2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Fitted exponent in `norm ≈ C (1+t)^{-α}`.
    pub alpha: f64,
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub window: [f64; 2],
    pub points: usize,
    pub early_alpha: f64,
    pub late_alpha: f64,
    /// The two half-window exponents agree to within 25%.
    pub algebraic: bool,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Least-squares slope of `log(norm)` against `log(1+t)` over `window`.
pub fn decay_fit(records: &[DiagnosticsRecord], series: DecaySeries, window: [f64; 2]) -> Result<DecayFit> {
    let [t0, t1] = window;
    if !(t1 > t0) || (1.0 + t1) / (1.0 + t0) < 10.0 {
        return Err(Error::InsufficientRange { t0, t1 });
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= t0 && r.t <= t1)
        .map(|r| (libm::log1p(r.t), series.select(r)))
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x, libm::log(y)))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientRange { t0, t1 });
    }
    let used = [
        libm::expm1(pts.first().unwrap().0),
        libm::expm1(pts.last().unwrap().0),
    ];
    if (1.0 + used[1]) / (1.0 + used[0]) < 10.0 {
        return Err(Error::InsufficientRange { t0: used[0], t1: used[1] });
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    let mid = 0.5 * (xs[0] + xs[xs.len() - 1]);
    let split = xs.iter().position(|&x| x > mid).unwrap_or(xs.len() / 2).clamp(2, xs.len() - 2);
    let (early, _, _) = least_squares(&xs[..split], &ys[..split]);
    let (late, _, _) = least_squares(&xs[split..], &ys[split..]);
    let alpha = -slope;
    Ok(DecayFit {
        alpha,
        intercept,
        residual,
        window: used,
        points: xs.len(),
        early_alpha: -early,
        late_alpha: -late,
        algebraic: (late - early).abs() <= 0.25 * alpha.abs(),
    })
}

/// `[5, t_sat/2]`, clipped to the recorded range. `t_sat` is the first
/// saturated record if any, otherwise `predicted_t_sat`.
pub fn auto_window(records: &[DiagnosticsRecord], aux: &[AuxRecord], predicted_t_sat: f64) -> [f64; 2] {
    let t_sat = aux
        .iter()
        .find(|a| a.split_saturated)
        .map(|a| a.t)
        .unwrap_or(predicted_t_sat);
    let t_end = records.last().map(|r| r.t).unwrap_or(0.0);
    [5.0, (0.5 * t_sat).min(t_end)]
}

/// Slack in the discrete splitting inequality between two consecutive records:
/// `[d f]_n^{n+1}/Δt + ½a𝒞 d̄ ‖𝔻u‖̄² - d̄' split_ū`, with bars denoting
/// averages of the endpoint values. Nonpositive when the inequality holds.
pub fn splitting_excess(
    r0: (&DiagnosticsRecord, &AuxRecord),
    r1: (&DiagnosticsRecord, &AuxRecord),
    settings: &DiagnosticsSettings,
    ccoef: f64,
) -> f64 {
    let (a0, b0) = r0;
    let (a1, b1) = r1;
    let dt = a1.t - a0.t;
    let d0 = weight_d(a0.t, settings);
    let d1 = weight_d(a1.t, settings);
    let lhs = (d1 * a1.f - d0 * a0.f) / dt
        + 0.25 * settings.a * ccoef * (d0 * b0.du_sq + d1 * b1.du_sq);
    let rhs = 0.5 * (weight_d_prime(a0.t, settings) * a0.split_u + weight_d_prime(a1.t, settings) * a1.split_u);
    lhs - rhs
}

/// Shell-averaged energy spectrum: entry `n` sums `volume·|û|²` over
/// `n - ½ < |ξ|/ξ_min ≤ n + ½`.
pub fn shell_spectrum(grid: &TorusGrid, fields: &[&Spectrum]) -> Vec<f64> {
    let cutoff = grid.dealias_cutoff() as f64;
    let shells = (cutoff * core::f64::consts::SQRT_2).ceil() as usize + 2;
    let mut out = vec![0.0; shells];
    for (idx, mode) in grid.modes().iter().enumerate() {
        let r = (mode.n_sq as f64).sqrt();
        let shell = libm::round(r) as usize;
        if shell < shells {
            out[shell] += grid.volume() * fields.iter().map(|f| f[idx].norm_sqr()).sum::<f64>();
        }
    }
    out
}
