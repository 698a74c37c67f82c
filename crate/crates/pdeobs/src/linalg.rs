use ndarray::Array2;

use crate::error::{Error, Result};

/// Max-absolute-row-sum norm of a matrix.
pub fn mat_inf_norm(a: &Array2<f64>) -> f64 {
    let mut best = 0.0f64;
    for row in a.rows() {
        let sum: f64 = row.iter().map(|x| x.abs()).sum();
        best = best.max(sum);
    }
    best
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape("cholesky of a non-square matrix".to_string()));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Linalg(format!(
                "matrix is not positive definite (pivot {} is {:.3e})",
                j, d
            )));
        }
        let dj = d.sqrt();
        l[[j, j]] = dj;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / dj;
        }
    }
    Ok(l)
}

/// Solve L x = b with L lower triangular.
pub fn forward_sub(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solve L^T x = b with L lower triangular.
pub fn back_sub_transpose(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns the (unsorted) eigenvalues and the orthogonal matrix whose columns
/// are the matching eigenvectors. Iterates full sweeps until the off-diagonal
/// Frobenius mass falls below `1e-13` times the Frobenius norm of the input,
/// and fails after 60 sweeps without convergence.
pub fn jacobi_sym_eig(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(
            "eigendecomposition of a non-square matrix".to_string(),
        ));
    }
    let mut m = a.clone();
    // Work on the symmetrized copy so tiny asymmetries cannot bias rotations.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let tol = 1e-13 * frobenius(&m).max(f64::MIN_POSITIVE);
    let off = |m: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[[i, j]] * m[[i, j]];
                }
            }
        }
        s.sqrt()
    };
    let max_sweeps = 60;
    for _sweep in 0..max_sweeps {
        if off(&m) <= tol {
            let d = (0..n).map(|i| m[[i, i]]).collect();
            return Ok((d, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Linalg(format!(
        "jacobi eigensolver did not converge in {} sweeps",
        max_sweeps
    )))
}

/// Solve the generalized symmetric eigenproblem `G xi = sigma S xi` with `S`
/// positive definite.
///
/// Factorizes `S = L L^T`, diagonalizes `L^{-1} G L^{-T}` with cyclic Jacobi
/// rotations, and back-transforms. Eigenvalues are returned ascending; the
/// matching eigenvectors form the columns of the returned matrix and are
/// normalized to `xi^T S xi = 1`. After the solve every pair is checked
/// against the residual bound
/// `||G xi - sigma S xi||_inf <= 1e-10 (||G||_inf + |sigma| ||S||_inf)`.
pub fn generalized_sym_eig(g: &Array2<f64>, s: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = g.nrows();
    if g.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(Error::Shape(format!(
            "generalized eigenproblem needs square matrices of equal size, got {:?} and {:?}",
            g.dim(),
            s.dim()
        )));
    }
    if n == 0 {
        return Err(Error::Shape(
            "generalized eigenproblem of size zero".to_string(),
        ));
    }
    let l = cholesky(s).map_err(|e| match e {
        Error::Linalg(m) => Error::Linalg(format!("metric matrix: {}", m)),
        other => other,
    })?;

    // m = L^{-1} G L^{-T}, built column by column: w = L^{-1} g_col, then the
    // rows of w are pushed through L^{-1} once more via the transpose.
    let mut w = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| g[[i, j]]).collect();
        let x = forward_sub(&l, &col);
        for i in 0..n {
            w[[i, j]] = x[i];
        }
    }
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| w[[i, j]]).collect();
        let x = forward_sub(&l, &row);
        for j in 0..n {
            m[[i, j]] = x[j];
        }
    }

    let (d, q) = jacobi_sym_eig(&m)?;

    // Back-transform: xi_j = L^{-T} q_j, then S-normalize.
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for j in 0..n {
        let qj: Vec<f64> = (0..n).map(|i| q[[i, j]]).collect();
        let mut xi = back_sub_transpose(&l, &qj);
        let mut sxix = 0.0;
        for a in 0..n {
            let mut sx = 0.0;
            for b in 0..n {
                sx += s[[a, b]] * xi[b];
            }
            sxix += xi[a] * sx;
        }
        let scale = sxix.max(f64::MIN_POSITIVE).sqrt();
        for x in xi.iter_mut() {
            *x /= scale;
        }
        pairs.push((d[j], xi));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (j, (_, xi)) in pairs.iter().enumerate() {
        for i in 0..n {
            vectors[[i, j]] = xi[i];
        }
    }

    // Residual invariant for every returned pair.
    let g_inf = mat_inf_norm(g);
    let s_inf = mat_inf_norm(s);
    for j in 0..n {
        let sigma = values[j];
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut gx = 0.0;
            let mut sx = 0.0;
            for k in 0..n {
                gx += g[[i, k]] * vectors[[k, j]];
                sx += s[[i, k]] * vectors[[k, j]];
            }
            worst = worst.max((gx - sigma * sx).abs());
        }
        let bound = 1e-10 * (g_inf + sigma.abs() * s_inf);
        if worst > bound {
            return Err(Error::Linalg(format!(
                "eigenpair {} residual {:.3e} exceeds bound {:.3e}",
                j, worst, bound
            )));
        }
    }
    Ok((values, vectors))
}
