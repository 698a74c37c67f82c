//! Legendre-Gauss-Lobatto (LGL) collocation machinery on [-1, 1]: nodes,
//! quadrature weights, the spectral differentiation matrix, and a modal
//! damping matrix for the highest Legendre mode.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Legendre polynomial and its derivative at `x` by the three-term
/// recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // (1 - x^2) P_n' = n (P_{n-1} - x P_n); fall back to the closed form at
    // the endpoints where the relation degenerates.
    let dp = if (1.0 - x * x).abs() > 1e-14 {
        n as f64 * (p_prev - x * p) / (1.0 - x * x)
    } else {
        let sign = if x > 0.0 {
            1.0
        } else {
            (-1.0f64).powi(n as i32 + 1)
        };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p, dp)
}

/// LGL rule of polynomial order `n`: the `n + 1` nodes (both endpoints plus
/// the roots of P_n'), the quadrature weights `2 / (n (n+1) P_n(x)^2)`, and
/// the differentiation matrix.
pub struct LglRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub diff: Array2<f64>,
}

pub fn lgl_rule(order: usize) -> Result<LglRule> {
    if order < 1 {
        return Err(Error::Config(
            "LGL rule needs polynomial order at least 1".to_string(),
        ));
    }
    let n = order;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // Interior nodes: Newton on P_n' from Chebyshev-Lobatto initial guesses.
    for i in 1..n {
        let mut x = -(std::f64::consts::PI * i as f64 / n as f64).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            // d/dx P_n' via the Legendre ODE.
            let ddp = (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x);
            let step = dp / ddp;
            x -= step;
            if step.abs() < 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Linalg(format!(
                "LGL node {} of order {} did not converge",
                i, n
            )));
        }
        nodes[i] = x;
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut weights = vec![0.0; n + 1];
    for (i, &x) in nodes.iter().enumerate() {
        let (p, _) = legendre_with_derivative(n, x);
        weights[i] = 2.0 / ((n * (n + 1)) as f64 * p * p);
    }

    let mut diff = Array2::<f64>::zeros((n + 1, n + 1));
    for i in 0..=n {
        let (pi, _) = legendre_with_derivative(n, nodes[i]);
        for j in 0..=n {
            if i == j {
                continue;
            }
            let (pj, _) = legendre_with_derivative(n, nodes[j]);
            diff[[i, j]] = pi / (pj * (nodes[i] - nodes[j]));
        }
    }
    diff[[0, 0]] = -((n * (n + 1)) as f64) / 4.0;
    diff[[n, n]] = (n * (n + 1)) as f64 / 4.0;
    Ok(LglRule {
        nodes,
        weights,
        diff,
    })
}

/// Invert a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting.
pub fn invert_small(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape("inverse of a non-square matrix".to_string()));
    }
    let mut m = a.clone();
    let mut inv = Array2::<f64>::eye(n);
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if m[[r, col]].abs() > m[[pivot, col]].abs() {
                pivot = r;
            }
        }
        if m[[pivot, col]].abs() < 1e-14 {
            return Err(Error::Linalg("matrix is singular".to_string()));
        }
        if pivot != col {
            for c in 0..n {
                m.swap([pivot, c], [col, c]);
                inv.swap([pivot, c], [col, c]);
            }
        }
        let d = m[[col, col]];
        for c in 0..n {
            m[[col, c]] /= d;
            inv[[col, c]] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[[r, col]];
            if f != 0.0 {
                for c in 0..n {
                    m[[r, c]] -= f * m[[col, c]];
                    inv[[r, c]] -= f * inv[[col, c]];
                }
            }
        }
    }
    Ok(inv)
}

/// Nodal matrix that damps the highest Legendre mode by `exp(-1)` and leaves
/// all lower modes untouched: `V diag(1, ..., 1, e^{-1}) V^{-1}` where `V`
/// is the Legendre Vandermonde matrix on the LGL nodes.
pub fn top_mode_damping(rule: &LglRule) -> Result<Array2<f64>> {
    let n = rule.nodes.len();
    let mut v = Array2::<f64>::zeros((n, n));
    for (i, &x) in rule.nodes.iter().enumerate() {
        for j in 0..n {
            v[[i, j]] = legendre_with_derivative(j, x).0;
        }
    }
    let vinv = invert_small(&v)?;
    let mut d = Array2::<f64>::eye(n);
    d[[n - 1, n - 1]] = (-1.0f64).exp();
    Ok(v.dot(&d).dot(&vinv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_two_rule_is_simpson_like() {
        let r = lgl_rule(2).unwrap();
        assert!((r.nodes[0] + 1.0).abs() < 1e-15);
        assert!(r.nodes[1].abs() < 1e-15);
        assert!((r.nodes[2] - 1.0).abs() < 1e-15);
        assert!((r.weights[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((r.weights[1] - 4.0 / 3.0).abs() < 1e-14);
        assert!((r.weights[2] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn order_four_rule_matches_tabulated_values() {
        let r = lgl_rule(4).unwrap();
        let x = (3.0f64 / 7.0).sqrt();
        assert!((r.nodes[1] + x).abs() < 1e-13);
        assert!(r.nodes[2].abs() < 1e-13);
        assert!((r.nodes[3] - x).abs() < 1e-13);
        assert!((r.weights[0] - 0.1).abs() < 1e-14);
        assert!((r.weights[1] - 49.0 / 90.0).abs() < 1e-13);
        assert!((r.weights[2] - 32.0 / 45.0).abs() < 1e-13);
    }

    #[test]
    fn quadrature_is_exact_to_degree_two_n_minus_one() {
        let r = lgl_rule(4).unwrap();
        // int_{-1}^{1} x^6 dx = 2/7, degree 6 <= 2*4 - 1.
        let got: f64 = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(&x, &w)| w * x.powi(6))
            .sum();
        assert!((got - 2.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn differentiation_matrix_is_exact_on_polynomials() {
        let r = lgl_rule(4).unwrap();
        // d/dx (x^3 - x) = 3x^2 - 1, degree within the collocation space.
        let f: Vec<f64> = r.nodes.iter().map(|&x| x * x * x - x).collect();
        for i in 0..r.nodes.len() {
            let mut df = 0.0;
            for j in 0..r.nodes.len() {
                df += r.diff[[i, j]] * f[j];
            }
            let want = 3.0 * r.nodes[i] * r.nodes[i] - 1.0;
            assert!((df - want).abs() < 1e-12);
        }
        // Constants differentiate to zero: rows sum to zero.
        for i in 0..r.nodes.len() {
            let row: f64 = (0..r.nodes.len()).map(|j| r.diff[[i, j]]).sum();
            assert!(row.abs() < 1e-12);
        }
    }

    #[test]
    fn damping_matrix_keeps_low_modes_and_shrinks_the_top_one() {
        let r = lgl_rule(4).unwrap();
        let f = top_mode_damping(&r).unwrap();
        // Degree-3 data is untouched.
        let low: Vec<f64> = r.nodes.iter().map(|&x| 1.0 + 2.0 * x - x.powi(3)).collect();
        for i in 0..5 {
            let got: f64 = (0..5).map(|j| f[[i, j]] * low[j]).sum();
            assert!((got - low[i]).abs() < 1e-12);
        }
        // The fourth Legendre mode is scaled by exactly e^{-1}.
        let top: Vec<f64> = r
            .nodes
            .iter()
            .map(|&x| legendre_with_derivative(4, x).0)
            .collect();
        for i in 0..5 {
            let got: f64 = (0..5).map(|j| f[[i, j]] * top[j]).sum();
            assert!((got - (-1.0f64).exp() * top[i]).abs() < 1e-12);
        }
    }
}
