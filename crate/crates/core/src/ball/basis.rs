use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::jacobi::{jacobi, jacobi_derivative};
use super::quadrature::BallQuadrature;
use crate::{Error, Result};

/// Label of one basis function: total degree, angular frequency and parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndex {
    pub degree: usize,
    pub m: usize,
    pub sine: bool,
}

/// Polynomials on the unit disk, orthonormal for `⟨f, g⟩ = ∫_B f g ψ∞ dR`.
///
/// A configuration density is represented as `ψ = ψ∞ Σ_p c_p φ_p`. The raw
/// functions are `r^m P_j^{(k,m)}(2r²-1) · {cos mθ, sin mθ}` with degree
/// `m + 2j`; they are orthogonal analytically, and a Cholesky pass against the
/// working quadrature removes rounding so the discrete Gram matrix is the
/// identity. `φ_0 ≡ 1`, hence `c_0` carries the R-mass.
#[derive(Debug, Clone)]
pub struct BallBasis {
    pub k: f64,
    pub max_degree: usize,
    pub indices: Vec<BasisIndex>,
    /// `φ_p = Σ_q transform[(p,q)] · raw_q`, lower triangular.
    transform: DMatrix<f64>,
    /// Values at the nodes of the α = k rule, `Q × nodes`.
    pub values: DMatrix<f64>,
    /// Gradients at the same nodes.
    pub grads: [DMatrix<f64>; 2],
}

/// Ordered by (total degree, angular frequency, cos before sin).
fn enumerate(max_degree: usize) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for degree in 0..=max_degree {
        for m in (degree % 2..=degree).step_by(2) {
            out.push(BasisIndex { degree, m, sine: false });
            if m > 0 {
                out.push(BasisIndex { degree, m, sine: true });
            }
        }
    }
    out
}

impl BallBasis {
    pub fn new(k: f64, max_degree: usize, quad: &BallQuadrature) -> Result<Self> {
        if !(k > -1.0) || (quad.alpha - k).abs() > 1e-14 {
            return Err(Error::InvalidParameter(
                "basis must be built on the quadrature with weight exponent k".into(),
            ));
        }
        let needed = (2 * max_degree).max(max_degree + 2);
        if quad.exact_degree() < needed || quad.n_theta < 2 * max_degree + 1 {
            return Err(Error::Resolution {
                n_r: quad.n_r,
                n_theta: quad.n_theta,
                degree: needed,
            });
        }
        let indices = enumerate(max_degree);
        let q = indices.len();
        let n = quad.len();
        let mut raw = DMatrix::zeros(q, n);
        let mut raw_g = [DMatrix::zeros(q, n), DMatrix::zeros(q, n)];
        for (col, &pt) in quad.points.iter().enumerate() {
            for (row, idx) in indices.iter().enumerate() {
                let (v, g) = raw_eval(k, *idx, pt);
                raw[(row, col)] = v;
                raw_g[0][(row, col)] = g[0];
                raw_g[1][(row, col)] = g[1];
            }
        }
        let z = quad.integrate(|_| 1.0);
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, quad.weights.iter().map(|w| w / z)));
        let gram = &raw * &w * raw.transpose();
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Assembly("raw Gram matrix is not positive definite".into()))?;
        let l = chol.l();
        let transform = l
            .solve_lower_triangular(&DMatrix::identity(q, q))
            .ok_or_else(|| Error::Assembly("singular Cholesky factor".into()))?;
        let values = &transform * &raw;
        let grads = [&transform * &raw_g[0], &transform * &raw_g[1]];
        Ok(Self {
            k,
            max_degree,
            indices,
            transform,
            values,
            grads,
        })
    }

    /// Number of basis functions `(P+1)(P+2)/2`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index_of(&self, degree: usize, m: usize, sine: bool) -> Option<usize> {
        self.indices
            .iter()
            .position(|i| *i == BasisIndex { degree, m, sine })
    }

    /// Values and gradients of every basis function at `pt`.
    pub fn eval_all(&self, pt: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let q = self.len();
        let mut raw = vec![0.0; q];
        let mut raw_g = vec![[0.0; 2]; q];
        for (i, idx) in self.indices.iter().enumerate() {
            let (v, g) = raw_eval(self.k, *idx, pt);
            raw[i] = v;
            raw_g[i] = g;
        }
        let mut vals = vec![0.0; q];
        let mut grads = vec![[0.0; 2]; q];
        for p in 0..q {
            for j in 0..=p {
                let t = self.transform[(p, j)];
                vals[p] += t * raw[j];
                grads[p][0] += t * raw_g[j][0];
                grads[p][1] += t * raw_g[j][1];
            }
        }
        (vals, grads)
    }

    pub fn eval(&self, p: usize, pt: [f64; 2]) -> f64 {
        self.eval_all(pt).0[p]
    }

    /// Gram matrix `∫ φ_p φ_q ψ∞ dR` on an arbitrary α = k rule.
    pub fn gram(&self, quad: &BallQuadrature) -> DMatrix<f64> {
        let q = self.len();
        let z = quad.integrate(|_| 1.0);
        let mut g = DMatrix::zeros(q, q);
        for (&pt, &w) in quad.points.iter().zip(&quad.weights) {
            let (v, _) = self.eval_all(pt);
            for a in 0..q {
                for b in 0..q {
                    g[(a, b)] += w / z * v[a] * v[b];
                }
            }
        }
        g
    }

    /// Coefficients `⟨f, φ_p⟩ = ∫ f φ_p ψ∞ dR` using the stored node values.
    pub fn project(&self, quad: &BallQuadrature, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let z = quad.integrate(|_| 1.0);
        let fv: Vec<f64> = quad.points.iter().map(|&p| f(p)).collect();
        (0..self.len())
            .map(|p| {
                (0..quad.len())
                    .map(|j| quad.weights[j] / z * fv[j] * self.values[(p, j)])
                    .sum()
            })
            .collect()
    }

    /// Evaluates `Σ_p c_p φ_p(pt)`.
    pub fn synthesize(&self, coeffs: &[f64], pt: [f64; 2]) -> f64 {
        let (v, _) = self.eval_all(pt);
        v.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

/// Raw function `r^m P_j^{(k,m)}(2r²-1) T(mθ)` and its Cartesian gradient.
fn raw_eval(k: f64, idx: BasisIndex, pt: [f64; 2]) -> (f64, [f64; 2]) {
    let [x, y] = pt;
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    let theta = libm::atan2(y, x);
    let (c, s) = (libm::cos(theta), libm::sin(theta));
    let m = idx.m;
    let mf = m as f64;
    let j = (idx.degree - m) / 2;
    let arg = 2.0 * r2 - 1.0;
    let pj = jacobi(j, k, mf, arg);
    let dpj = jacobi_derivative(j, k, mf, arg);
    let (trig, dtrig) = if m == 0 {
        (1.0, 0.0)
    } else if idx.sine {
        (libm::sin(mf * theta), mf * libm::cos(mf * theta))
    } else {
        (libm::cos(mf * theta), -mf * libm::sin(mf * theta))
    };
    // g(r) = r^m P_j, g'(r) = m r^{m-1} P_j + 4 r^{m+1} P_j', g/r = r^{m-1} P_j.
    let rm = r.powi(m as i32);
    let g = rm * pj;
    let (dg, g_over_r) = if m == 0 {
        (4.0 * r * dpj, 0.0)
    } else {
        let rm1 = r.powi(m as i32 - 1);
        (mf * rm1 * pj + 4.0 * rm * r * dpj, rm1 * pj)
    };
    let gx = dg * c * trig - g_over_r * dtrig * s;
    let gy = dg * s * trig + g_over_r * dtrig * c;
    (g * trig, [gx, gy])
}
