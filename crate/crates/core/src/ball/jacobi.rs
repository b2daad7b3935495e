//! Jacobi polynomials `P_n^{(a,b)}` and Gauss–Jacobi rules on `[-1, 1]`.

use alloc::vec;
use alloc::vec::Vec;

/// Evaluates `P_n^{(a,b)}(x)` by the three-term recurrence.
pub fn jacobi(n: usize, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
    for m in 2..=n {
        let m = m as f64;
        let s = 2.0 * m + a + b;
        let c1 = 2.0 * m * (m + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (m + a - 1.0) * (m + b - 1.0) * s;
        let next = (c2 * cur - c3 * prev) / c1;
        prev = cur;
        cur = next;
    }
    cur
}

/// Derivative `d/dx P_n^{(a,b)}(x) = (n+a+b+1)/2 · P_{n-1}^{(a+1,b+1)}(x)`.
pub fn jacobi_derivative(n: usize, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    0.5 * (n as f64 + a + b + 1.0) * jacobi(n - 1, a + 1.0, b + 1.0, x)
}

/// Gauss–Jacobi nodes and weights for `∫_{-1}^{1} f(x) (1-x)^a (1+x)^b dx`.
///
/// Nodes start from Chebyshev-like guesses and are refined by Newton iteration
/// with deflation against already located roots; weights use the closed form
/// in terms of `P_n'` at the nodes. Exact for polynomials up to degree `2n-1`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0 && a > -1.0 && b > -1.0);
    let mut nodes = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        // Initial guess (Hale & Townsend style asymptotic is overkill for n <= 64).
        let mut x = -libm::cos(core::f64::consts::PI * (i as f64 + 0.75 + 0.5 * a) / (nf + 0.5 + 0.5 * (a + b)));
        if i > 0 {
            x = x.max(nodes[i - 1] + 1e-12);
        }
        for _ in 0..100 {
            let p = jacobi(n, a, b, x);
            let dp = jacobi_derivative(n, a, b, x);
            let defl: f64 = nodes[..i].iter().map(|&r| 1.0 / (x - r)).sum();
            let step = p / (dp - defl * p);
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = x;
    }
    nodes.sort_by(|l, r| l.partial_cmp(r).unwrap());
    // Two plain Newton sweeps to remove deflation bias.
    for x in nodes.iter_mut() {
        for _ in 0..2 {
            let p = jacobi(n, a, b, *x);
            let dp = jacobi_derivative(n, a, b, *x);
            *x -= p / dp;
        }
    }
    let log_c = libm::lgamma(nf + a + 1.0) + libm::lgamma(nf + b + 1.0)
        - libm::lgamma(nf + a + b + 1.0)
        - libm::lgamma(nf + 1.0)
        + (a + b + 1.0) * core::f64::consts::LN_2;
    let c = libm::exp(log_c);
    let weights = nodes
        .iter()
        .map(|&x| {
            let dp = jacobi_derivative(n, a, b, x);
            c / ((1.0 - x * x) * dp * dp)
        })
        .collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_closed_forms() {
        assert_eq!(jacobi(0, 2.0, 1.0, 0.3), 1.0);
        // P_1^{(a,b)}(x) = (a+1) + (a+b+2)(x-1)/2
        let (a, b, x) = (2.5, 1.0, 0.3);
        assert!((jacobi(1, a, b, x) - ((a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0)).abs() < 1e-14);
        // Legendre P_2
        assert!((jacobi(2, 0.0, 0.0, 0.4) - 0.5 * (3.0 * 0.16 - 1.0)).abs() < 1e-14);
        // P_n^{(a,b)}(1) = binom(n+a, n)
        assert!((jacobi(3, 2.0, 0.0, 1.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (a, b) = (1.5, 3.0);
        for n in 0..7 {
            for &x in &[-0.7, 0.1, 0.8] {
                let h = 1e-6;
                let fd = (jacobi(n, a, b, x + h) - jacobi(n, a, b, x - h)) / (2.0 * h);
                assert!((fd - jacobi_derivative(n, a, b, x)).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn gauss_jacobi_integrates_moments() {
        // ∫ x^j (1-x)^a dx over [-1,1] computed via the Beta function.
        for &a in &[0.0, 0.5, 1.0, 2.0, 3.7] {
            let n = 6;
            let (x, w) = gauss_jacobi(n, a, 0.0);
            assert!(w.iter().all(|&w| w > 0.0));
            // ∫ (1+x)^j (1-x)^a dx = 2^{j+a+1} B(j+1, a+1)
            for j in 0..2 * n {
                let jf = j as f64;
                let exact = libm::exp(
                    (jf + a + 1.0) * core::f64::consts::LN_2 + libm::lgamma(jf + 1.0) + libm::lgamma(a + 1.0)
                        - libm::lgamma(jf + a + 2.0),
                );
                let quad: f64 = x.iter().zip(&w).map(|(&x, &w)| w * (1.0 + x).powi(j as i32)).sum();
                assert!((quad - exact).abs() < 1e-13 * exact, "a={a} j={j}: {quad} vs {exact}");
            }
        }
    }
}
