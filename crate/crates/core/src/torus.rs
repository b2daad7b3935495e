//! Pseudo-spectral calculus on the periodic box `[0, L)²`, the stand-in for `ℝ²`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::fft::Fft2;
use crate::{Error, Result};

/// Spectral coefficients of one real scalar field, row-major `M × M`.
pub type Spectrum = Vec<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Integer wavenumber, in `[-M/2, M/2)`.
    pub n: [i64; 2],
    pub xi: [f64; 2],
    pub xi_sq: f64,
    pub n_sq: i64,
    /// Survives the 2/3 dealiasing mask.
    pub active: bool,
    /// Lies on a Nyquist line; odd derivatives vanish there.
    pub nyquist: bool,
}

#[derive(Debug, Clone)]
pub struct TorusGrid {
    pub l_box: f64,
    pub m: usize,
    fft: Fft2,
    modes: Vec<Mode>,
}

impl TorusGrid {
    pub fn new(l_box: f64, m: usize) -> Result<Self> {
        if !(l_box > 0.0) || !l_box.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("box length {l_box} must be positive")));
        }
        let fft = Fft2::new(m)?;
        let kmax = (m / 3) as i64;
        let half = (m / 2) as i64;
        let unit = 2.0 * PI / l_box;
        let wrap = |i: usize| {
            let i = i as i64;
            if i < half {
                i
            } else {
                i - m as i64
            }
        };
        let mut modes = Vec::with_capacity(m * m);
        for i1 in 0..m {
            for i2 in 0..m {
                let n = [wrap(i1), wrap(i2)];
                let xi = [unit * n[0] as f64, unit * n[1] as f64];
                modes.push(Mode {
                    n,
                    xi,
                    xi_sq: xi[0] * xi[0] + xi[1] * xi[1],
                    n_sq: n[0] * n[0] + n[1] * n[1],
                    active: n[0].abs() <= kmax && n[1].abs() <= kmax,
                    nyquist: n[0] == -half || n[1] == -half,
                });
            }
        }
        Ok(Self { l_box, m, fft, modes })
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, idx: usize) -> &Mode {
        &self.modes[idx]
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn dx(&self) -> f64 {
        self.l_box / self.m as f64
    }

    /// Area of the box; `∫ f g dx = volume · Σ f̂ conj(ĝ)`.
    pub fn volume(&self) -> f64 {
        self.l_box * self.l_box
    }

    /// Smallest nonzero lattice wavenumber `2π/L`.
    pub fn xi_min(&self) -> f64 {
        2.0 * PI / self.l_box
    }

    /// Largest integer index kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.m / 3) as i64
    }

    pub fn conj_index(&self, idx: usize) -> usize {
        self.fft.conj_index(idx)
    }

    pub fn zeros(&self) -> Spectrum {
        vec![ZERO; self.len()]
    }

    pub fn dealias(&self, f: &mut [Complex64]) {
        for (v, mode) in f.iter_mut().zip(&self.modes) {
            if !mode.active {
                *v = ZERO;
            }
        }
    }

    /// Replaces `f` by its Hermitian part so it synthesises a real field.
    pub fn symmetrize(&self, f: &mut [Complex64]) {
        let orig = f.to_vec();
        for idx in 0..f.len() {
            f[idx] = (orig[idx] + orig[self.conj_index(idx)].conj()) * 0.5;
        }
    }

    pub fn to_physical(&self, f: &[Complex64]) -> Vec<f64> {
        self.fft.inverse_real(f)
    }

    pub fn to_physical_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        self.fft.inverse_real_pair(a, b)
    }

    /// Forward transform followed by the 2/3 mask.
    pub fn to_spectral(&self, f: &[f64]) -> Spectrum {
        let mut out = self.fft.forward_real(f);
        self.dealias(&mut out);
        out
    }

    pub fn to_spectral_pair(&self, a: &[f64], b: &[f64]) -> (Spectrum, Spectrum) {
        let (mut fa, mut fb) = self.fft.forward_real_pair(a, b);
        self.dealias(&mut fa);
        self.dealias(&mut fb);
        (fa, fb)
    }

    /// `∂_dir^order f` as an exact Fourier multiplier, `order ∈ {1, 2}`.
    pub fn derivative(&self, f: &[Complex64], dir: usize, order: u32) -> Spectrum {
        assert!(dir < 2 && (order == 1 || order == 2));
        f.iter()
            .zip(&self.modes)
            .map(|(&v, mode)| match order {
                1 if mode.nyquist => ZERO,
                1 => v * Complex64::new(0.0, mode.xi[dir]),
                _ => v * (-mode.xi[dir] * mode.xi[dir]),
            })
            .collect()
    }

    /// Multiplier `-|ξ|²`.
    pub fn laplacian(&self, f: &[Complex64]) -> Spectrum {
        f.iter().zip(&self.modes).map(|(&v, mode)| v * (-mode.xi_sq)).collect()
    }

    /// `ℙ = I - ∇Δ⁻¹div`, mode by mode; the mean mode passes through.
    pub fn leray_project(&self, f: &VectorField) -> VectorField {
        let mut out = f.clone();
        for (idx, mode) in self.modes.iter().enumerate() {
            if mode.xi_sq == 0.0 {
                continue;
            }
            let dot = f.comps[0][idx] * mode.xi[0] + f.comps[1][idx] * mode.xi[1];
            let s = dot / mode.xi_sq;
            out.comps[0][idx] -= s * mode.xi[0];
            out.comps[1][idx] -= s * mode.xi[1];
        }
        out
    }

    /// Dealiased `(u·∇) f`.
    pub fn advect(&self, u: &VectorField, f: &[Complex64]) -> Spectrum {
        let (u1, u2) = self.to_physical_pair(&u.comps[0], &u.comps[1]);
        let (d1, d2) = self.to_physical_pair(&self.derivative(f, 0, 1), &self.derivative(f, 1, 1));
        let prod: Vec<f64> = (0..self.len()).map(|j| u1[j] * d1[j] + u2[j] * d2[j]).collect();
        self.to_spectral(&prod)
    }

    /// `∫ f g dx` for real fields given by their spectra.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> f64 {
        self.volume() * f.iter().zip(g).map(|(a, b)| (a * b.conj()).re).sum::<f64>()
    }

    pub fn norm_sq(&self, f: &[Complex64]) -> f64 {
        self.volume() * f.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }
}

/// Velocity-like field with two spectral components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub comps: [Spectrum; 2],
}

impl VectorField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            comps: [grid.zeros(), grid.zeros()],
        }
    }

    /// `max_ξ |ξ·û(ξ)|`.
    pub fn divergence_max(&self, grid: &TorusGrid) -> f64 {
        grid.modes()
            .iter()
            .enumerate()
            .map(|(idx, m)| (self.comps[0][idx] * m.xi[0] + self.comps[1][idx] * m.xi[1]).norm())
            .fold(0.0, f64::max)
    }

    /// Coefficient ℓ² norm `(Σ |û|²)^{1/2}`.
    pub fn coefficient_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_divergence_free(&self, grid: &TorusGrid) -> bool {
        self.divergence_max(grid) <= 1e-12 * self.coefficient_norm().max(f64::MIN_POSITIVE)
    }

    pub fn norm_sq(&self, grid: &TorusGrid) -> f64 {
        grid.norm_sq(&self.comps[0]) + grid.norm_sq(&self.comps[1])
    }

    pub fn inner(&self, other: &Self, grid: &TorusGrid) -> f64 {
        grid.inner(&self.comps[0], &other.comps[0]) + grid.inner(&self.comps[1], &other.comps[1])
    }

    pub fn scale(&mut self, s: f64) {
        for c in self.comps.iter_mut() {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            for (v, w) in c.iter_mut().zip(o) {
                *v += w * a;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(2.0 * PI * 3.0, 16).unwrap()
    }

    #[test]
    fn lattice_and_mask() {
        let g = grid();
        assert_eq!(g.modes().iter().filter(|m| m.n_sq == 0).count(), 1);
        let kept = g.modes().iter().filter(|m| m.active).count();
        assert_eq!(kept, 11 * 11); // |n| <= 5 for M = 16
        assert!(g.modes().iter().all(|m| !m.active || !m.nyquist));
    }

    #[test]
    fn single_mode_derivative() {
        let g = grid();
        let l = g.l_box;
        let f: Vec<f64> = (0..g.len())
            .map(|j| libm::sin(2.0 * PI * (j / g.m) as f64 * g.dx() / l))
            .collect();
        let d = g.to_physical(&g.derivative(&g.to_spectral(&f), 0, 1));
        for j in 0..g.len() {
            let x1 = (j / g.m) as f64 * g.dx();
            assert!((d[j] - 2.0 * PI / l * libm::cos(2.0 * PI * x1 / l)).abs() < 1e-14);
        }
        let c = g.to_spectral(&vec![3.0; g.len()]);
        assert!(g.laplacian(&c).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gradient_is_removed_by_leray() {
        let g = grid();
        let phi: Vec<f64> = (0..g.len()).map(|j| libm::sin(0.3 * j as f64) + libm::cos(0.11 * (j * j) as f64)).collect();
        let ph = g.to_spectral(&phi);
        let grad = VectorField {
            comps: [g.derivative(&ph, 0, 1), g.derivative(&ph, 1, 1)],
        };
        let p = g.leray_project(&grad);
        assert!(p.coefficient_norm() < 1e-14 * grad.coefficient_norm().max(1.0));
    }
}
