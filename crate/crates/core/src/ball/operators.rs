use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::basis::BallBasis;
use super::quadrature::QuadratureSet;
use crate::{Error, Result};

/// Galerkin operators of the configuration equation in the basis `φ_p`.
///
/// With `ψ = ψ∞ Σ c_q φ_q` (indices `i, j, l, m ∈ {0, 1}`):
///
/// * `stiffness[p][q] = ∫ ψ∞ ∇φ_p·∇φ_q`: weak form of `-𝓛`;
/// * `drag[i][j][p][q] = ∫ R_j ψ∞ φ_q ∂_iφ_p`: so the projected drag
///   `div_R(-∇u·Rψ)` reads `Σ_ij ∂_j u_i · drag[i][j] c`;
/// * `drag_source[i][j][p] = ∫ R_j ψ∞ ∂_iφ_p`: the same with `ψ = ψ∞`;
/// * `stress[l][m][p] = ∫ R_l ∂_m𝒰 ψ∞ φ_p`: `τ_lm = stress[l][m]·c`;
/// * `moments[j][k][p] = ∫ R_j R_k ψ∞ φ_p`;
/// * `closure[l][m][i][j] = ∫ div_R(-(e_i⊗e_j)·Rψ∞) R_l ∂_m𝒰 dR`, the stress
///   generated by one unit velocity gradient acting on the equilibrium. It is
///   integrated with the α = k-2 rule and is therefore exact, unlike the
///   truncated Galerkin contraction `Σ_p stress[l][m][p] drag_source[i][j][p]`.
#[derive(Debug, Clone)]
pub struct BallOperators {
    pub k: f64,
    pub stiffness: DMatrix<f64>,
    pub drag: [[DMatrix<f64>; 2]; 2],
    pub drag_source: [[Vec<f64>; 2]; 2],
    pub stress: [[Vec<f64>; 2]; 2],
    pub moments: [[Vec<f64>; 2]; 2],
    pub closure: [[[[f64; 2]; 2]; 2]; 2],
    /// Largest `|S - Sᵀ|` entry before symmetrisation.
    pub assembly_asymmetry: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl BallOperators {
    pub fn assemble(basis: &BallBasis, quads: &QuadratureSet) -> Result<Self> {
        let k = basis.k;
        if (quads.k - k).abs() > 1e-14 {
            return Err(Error::InvalidParameter(format!(
                "basis built for k = {k}, quadratures for k = {}",
                quads.k
            )));
        }
        let q = basis.len();
        let mass = &quads.mass;
        let z = mass.integrate(|_| 1.0);

        let mut stiffness: DMatrix<f64> = DMatrix::zeros(q, q);
        let mut drag = [
            [DMatrix::zeros(q, q), DMatrix::zeros(q, q)],
            [DMatrix::zeros(q, q), DMatrix::zeros(q, q)],
        ];
        let mut drag_source = [[vec![0.0; q], vec![0.0; q]], [vec![0.0; q], vec![0.0; q]]];
        let mut moments = [[vec![0.0; q], vec![0.0; q]], [vec![0.0; q], vec![0.0; q]]];

        for (node, (&pt, &w)) in mass.points.iter().zip(&mass.weights).enumerate() {
            let w = w / z;
            for p in 0..q {
                let gp = [basis.grads[0][(p, node)], basis.grads[1][(p, node)]];
                let vp = basis.values[(p, node)];
                for (i, row) in drag_source.iter_mut().enumerate() {
                    for (j, src) in row.iter_mut().enumerate() {
                        src[p] += w * pt[j] * gp[i];
                    }
                }
                for (j, row) in moments.iter_mut().enumerate() {
                    for (kk, mom) in row.iter_mut().enumerate() {
                        mom[p] += w * pt[j] * pt[kk] * vp;
                    }
                }
                for qq in 0..q {
                    let gq = [basis.grads[0][(qq, node)], basis.grads[1][(qq, node)]];
                    let vq = basis.values[(qq, node)];
                    stiffness[(p, qq)] += w * (gp[0] * gq[0] + gp[1] * gq[1]);
                    for (i, row) in drag.iter_mut().enumerate() {
                        for (j, d) in row.iter_mut().enumerate() {
                            d[(p, qq)] += w * pt[j] * vq * gp[i];
                        }
                    }
                }
            }
        }

        // R_l ∂_m𝒰 ψ∞ = 2k R_l R_m (1-|R|²)^{k-1} / Z
        let sq = &quads.stress;
        let mut stress = [[vec![0.0; q], vec![0.0; q]], [vec![0.0; q], vec![0.0; q]]];
        for (&pt, &w) in sq.points.iter().zip(&sq.weights) {
            let (vals, _) = basis.eval_all(pt);
            let w = 2.0 * k * w / z;
            for (l, row) in stress.iter_mut().enumerate() {
                for (m, s) in row.iter_mut().enumerate() {
                    for p in 0..q {
                        s[p] += w * pt[l] * pt[m] * vals[p];
                    }
                }
            }
        }

        let closure = closure_tensor(k, quads, z);

        let asym: f64 = (&stiffness - stiffness.transpose()).amax();
        if asym > SYMMETRY_TOL * stiffness.amax().max(1.0) {
            return Err(Error::Assembly(format!("stiffness asymmetric by {asym:e}")));
        }
        let stress_asym = stress[0][1]
            .iter()
            .zip(&stress[1][0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if stress_asym > SYMMETRY_TOL {
            return Err(Error::Assembly(format!("stress vectors asymmetric by {stress_asym:e}")));
        }
        // Exact symmetrisation so τ12 = τ21 holds bit for bit downstream.
        let sym = (&stiffness + stiffness.transpose()) * 0.5;
        let s01 = stress[0][1].clone();
        stress[1][0] = s01;

        Ok(Self {
            k,
            stiffness: sym,
            drag,
            drag_source,
            stress,
            moments,
            closure,
            assembly_asymmetry: asym,
        })
    }

    pub fn len(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Truncated Galerkin version of [`BallOperators::closure`]:
    /// `Σ_p stress[l][m][p] · drag_source[i][j][p]`. It converges to the exact
    /// closure only as the basis degree grows.
    pub fn galerkin_closure(&self) -> [[[[f64; 2]; 2]; 2]; 2] {
        let mut out = [[[[0.0; 2]; 2]; 2]; 2];
        for l in 0..2 {
            for m in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        out[l][m][i][j] = self.stress[l][m]
                            .iter()
                            .zip(&self.drag_source[i][j])
                            .map(|(a, b)| a * b)
                            .sum();
                    }
                }
            }
        }
        out
    }

    /// Eigenvalues of the stiffness matrix, ascending.
    pub fn stiffness_eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.stiffness.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Quadratic form `cᵀ S c = |ψ|²_{Ḣ¹}`.
    pub fn h1_seminorm_sq(&self, c: &[f64]) -> f64 {
        let q = self.len();
        let mut acc = 0.0;
        for a in 0..q {
            let mut row = 0.0;
            for b in 0..q {
                row += self.stiffness[(a, b)] * c[b];
            }
            acc += c[a] * row;
        }
        acc
    }
}

/// `closure[l][m][i][j] = ∫ R_j ψ∞ ∂_i(R_l ∂_m𝒰) dR` after integrating by parts
/// (the boundary term carries `(1-|R|²)^{k-1}` and vanishes for `k > 1`):
/// `(2k/Z) ∫ R_j [(δ_il R_m + δ_im R_l)(1-|R|²)^{k-1} + 2 R_i R_l R_m (1-|R|²)^{k-2}] dR`.
fn closure_tensor(k: f64, quads: &QuadratureSet, z: f64) -> [[[[f64; 2]; 2]; 2]; 2] {
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for l in 0..2 {
        for m in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let regular = quads.stress.integrate(|r| {
                        r[j] * (delta(i, l) * r[m] + delta(i, m) * r[l])
                    });
                    let singular = quads.singular.integrate(|r| 2.0 * r[i] * r[j] * r[l] * r[m]);
                    out[l][m][i][j] = 2.0 * k / z * (regular + singular);
                }
            }
        }
    }
    out
}
