//! Radix-2 complex FFT for square periodic grids.
//!
//! Conventions: `forward` returns mean-normalised coefficients
//! `f̂(n) = M⁻² Σ_x f(x) e^{-iξ·x}`, `inverse` is the plain synthesis
//! `f(x) = Σ_n f̂(n) e^{iξ·x}`. Data is row-major, `index = i1 * M + i2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(alloc::format!("FFT length {n} must be a power of two >= 2")));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        let twiddles = (0..n / 2)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
            .collect();
        Ok(Self { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unnormalised in-place transform; `inverse` flips the exponent sign.
    pub fn process(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for j in 0..half {
                    let mut w = self.twiddles[j * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + j];
                    let b = data[start + j + half] * w;
                    data[start + j] = a + b;
                    data[start + j + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Two-dimensional transform on an `M × M` grid.
#[derive(Debug, Clone)]
pub struct Fft2 {
    fft: Fft,
}

impl Fft2 {
    pub fn new(m: usize) -> Result<Self> {
        Ok(Self { fft: Fft::new(m)? })
    }

    pub fn size(&self) -> usize {
        self.fft.len()
    }

    fn process(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.fft.len();
        assert_eq!(data.len(), m * m);
        for row in data.chunks_exact_mut(m) {
            self.fft.process(row, inverse);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for c in 0..m {
            for r in 0..m {
                col[r] = data[r * m + c];
            }
            self.fft.process(&mut col, inverse);
            for r in 0..m {
                data[r * m + c] = col[r];
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(data, false);
        let scale = 1.0 / (data.len() as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.process(data, true);
    }

    /// Index of the mode `-n` for the mode stored at `idx`.
    pub fn conj_index(&self, idx: usize) -> usize {
        let m = self.fft.len();
        let (i1, i2) = (idx / m, idx % m);
        ((m - i1) % m) * m + (m - i2) % m
    }

    /// Forward transforms of two real fields with one complex transform.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut h: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.forward(&mut h);
        let half = Complex64::new(0.5, 0.0);
        let minus_half_i = Complex64::new(0.0, -0.5);
        let mut fa = vec![Complex64::new(0.0, 0.0); h.len()];
        let mut fb = vec![Complex64::new(0.0, 0.0); h.len()];
        for idx in 0..h.len() {
            let hc = h[self.conj_index(idx)].conj();
            fa[idx] = (h[idx] + hc) * half;
            fb[idx] = (h[idx] - hc) * minus_half_i;
        }
        (fa, fb)
    }

    /// Forward transform of a single real field.
    pub fn forward_real(&self, a: &[f64]) -> Vec<Complex64> {
        // Going through the pair path makes the result Hermitian bit for bit.
        let zeros = vec![0.0; a.len()];
        self.forward_real_pair(a, &zeros).0
    }

    /// Inverse transforms of two Hermitian spectra (real fields) at once.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut h: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
        self.inverse(&mut h);
        (h.iter().map(|v| v.re).collect(), h.iter().map(|v| v.im).collect())
    }

    pub fn inverse_real(&self, a: &[Complex64]) -> Vec<f64> {
        let mut h = a.to_vec();
        self.inverse(&mut h);
        h.iter().map(|v| v.re).collect()
    }
}
