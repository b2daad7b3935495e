//! Assembled configuration-space operators against an independent oracle:
//! adaptive Simpson in `r` with the weight `(1-r²)^α` evaluated directly,
//! periodic trapezoid in `θ`, and fourth-order difference quotients for
//! the basis gradients.

use std::f64::consts::PI;

use fene_core::ball::{BallBasis, ConfigSpace, FeneParams};

const N_THETA: usize = 64;
const H: f64 = 1e-3;

fn fd_grad(basis: &BallBasis, pt: [f64; 2]) -> Vec<[f64; 2]> {
    let at = |dx: f64, dy: f64| basis.eval_all([pt[0] + dx, pt[1] + dy]).0;
    let stencil = |f: &dyn Fn(f64) -> Vec<f64>| -> Vec<f64> {
        let (m2, m1, p1, p2) = (f(-2.0 * H), f(-H), f(H), f(2.0 * H));
        (0..m1.len())
            .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * H))
            .collect()
    };
    let gx = stencil(&|d| at(d, 0.0));
    let gy = stencil(&|d| at(0.0, d));
    gx.into_iter().zip(gy).map(|(a, b)| [a, b]).collect()
}

/// Every entry of S, D, t and m2 at radius `r`, already integrated over `θ`
/// and multiplied by the polar Jacobian, in one flat vector.
fn entries_at(basis: &BallBasis, k: f64, r: f64) -> Vec<f64> {
    let q = basis.len();
    let z = PI / (k + 1.0);
    let w_k = (1.0 - r * r).max(0.0).powf(k) / z;
    let w_km1 = 2.0 * k * (1.0 - r * r).max(0.0).powf(k - 1.0) / z;
    let mut out = vec![0.0; q * q * 5 + 8 * q];
    let dtheta = 2.0 * PI / N_THETA as f64;
    for n in 0..N_THETA {
        let th = n as f64 * dtheta;
        let pt = [r * th.cos(), r * th.sin()];
        let vals = basis.eval_all(pt).0;
        let grads = fd_grad(basis, pt);
        let jac = r * dtheta;
        let mut slot = 0;
        for p in 0..q {
            for qq in 0..q {
                out[slot] += jac * w_k * (grads[p][0] * grads[qq][0] + grads[p][1] * grads[qq][1]);
                slot += 1;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..q {
                    for qq in 0..q {
                        out[slot] += jac * w_k * pt[j] * vals[qq] * grads[p][i];
                        slot += 1;
                    }
                }
            }
        }
        for l in 0..2 {
            for m in 0..2 {
                for p in 0..q {
                    out[slot] += jac * w_km1 * pt[l] * pt[m] * vals[p];
                    out[slot + 4 * q] += jac * w_k * pt[l] * pt[m] * vals[p];
                    slot += 1;
                }
            }
        }
    }
    out
}

fn simpson(a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    (0..fa.len())
        .map(|i| (b - a) / 6.0 * (fa[i] + 4.0 * fm[i] + fb[i]))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> Vec<f64>,
    a: f64,
    b: f64,
    fa: Vec<f64>,
    fm: Vec<f64>,
    fb: Vec<f64>,
    whole: Vec<f64>,
    tol: f64,
    depth: u32,
) -> Vec<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, &fa, &flm, &fm);
    let right = simpson(m, b, &fm, &frm, &fb);
    let err = (0..whole.len())
        .map(|i| (left[i] + right[i] - whole[i]).abs())
        .fold(0.0, f64::max);
    if depth == 0 || err <= 15.0 * tol {
        return (0..whole.len())
            .map(|i| left[i] + right[i] + (left[i] + right[i] - whole[i]) / 15.0)
            .collect();
    }
    let l = adaptive(f, a, m, fa, flm, fm.clone(), left, 0.5 * tol, depth - 1);
    let r = adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    l.iter().zip(&r).map(|(x, y)| x + y).collect()
}

fn oracle(basis: &BallBasis, k: f64) -> Vec<f64> {
    let f = |r: f64| entries_at(basis, k, r);
    // Split at a few radii so the first Simpson estimate is not fooled.
    let cuts = [0.0, 0.25, 0.5, 0.75, 0.9, 1.0];
    let mut total = vec![0.0; f(0.5).len()];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = simpson(a, b, &fa, &fm, &fb);
        let part = adaptive(&f, a, b, fa, fm, fb, whole, 1e-12, 30);
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

fn check(k: f64, p: usize) {
    let sp = ConfigSpace::new(FeneParams::new(k, 1.0).unwrap(), p).unwrap();
    let q = sp.len();
    let ops = &sp.ops;
    let reference = oracle(&sp.basis, k);
    let mut assembled = Vec::with_capacity(reference.len());
    for a in 0..q {
        for b in 0..q {
            assembled.push(ops.stiffness[(a, b)]);
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..q {
                for b in 0..q {
                    assembled.push(ops.drag[i][j][(a, b)]);
                }
            }
        }
    }
    for l in 0..2 {
        for m in 0..2 {
            assembled.extend_from_slice(&ops.stress[l][m]);
        }
    }
    for l in 0..2 {
        for m in 0..2 {
            assembled.extend_from_slice(&ops.moments[l][m]);
        }
    }
    let worst = assembled
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "k = {k}, P = {p}: max entry deviation {worst:e}");
}

#[test]
fn integer_exponent_matches_oracle() {
    check(2.0, 4);
}

#[test]
fn fractional_exponent_matches_oracle() {
    check(2.5, 4);
    check(1.5, 3);
}

#[test]
fn drag_has_no_mass_row() {
    let sp = ConfigSpace::new(FeneParams::new(2.0, 1.0).unwrap(), 4).unwrap();
    for row in &sp.ops.drag {
        for d in row {
            for q in 0..sp.len() {
                assert!(d[(0, q)].abs() <= 1e-14, "D_0{q} = {}", d[(0, q)]);
            }
        }
    }
}
