//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Each sweep visits every off-diagonal pair (p, q) and applies a Givens
//! rotation chosen to zero that entry; the accumulated rotations converge to
//! the eigenvector matrix. Convergence is declared when the largest
//! off-diagonal magnitude drops below `1e-12 * ||S||_F`. Plenty for the
//! desk-scale matrices this crate works with, and free of external
//! dependencies.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order; `eigenvectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

/// Decomposes a symmetric matrix. The input must be square and symmetric to
/// within `1e-10 * ||S||_F`; asymmetry beyond that is an error, not silently
/// symmetrized.
pub fn sym_eigen(s: &DenseMatrix) -> Result<SymEigen> {
    let n = s.rows();
    if s.cols() != n {
        return Err(Error::Shape(format!("expected square matrix, got {}x{}", n, s.cols())));
    }
    let norm = s.frobenius_norm_sq().sqrt();
    for i in 0..n {
        for j in (i + 1)..n {
            if (s.get(i, j) - s.get(j, i)).abs() > SYMMETRY_TOL * norm {
                return Err(Error::NotSymmetric);
            }
        }
    }

    let mut a: Vec<f64> = s.entries().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let threshold = OFF_DIAG_TOL * norm;
    let mut converged = n == 1 || norm == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
        let mut off_max = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off_max = off_max.max(a[p * n + q].abs());
            }
        }
        converged = off_max <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vecs[row * n + col] = v[row * n + src];
        }
    }
    Ok(SymEigen { eigenvalues, eigenvectors: DenseMatrix::new(n, n, vecs)? })
}

/// Spectral norm of a symmetric matrix: max |eigenvalue|.
pub fn operator_norm_sym(s: &DenseMatrix) -> Result<f64> {
    let eig = sym_eigen(s)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs())))
}

fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    // tan of the rotation angle; the large-theta branch avoids overflow in theta^2.
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = a[i * n + p];
        let aiq = a[i * n + q];
        let new_p = aip - s * (aiq + tau * aip);
        let new_q = aiq + s * (aip - tau * aiq);
        a[i * n + p] = new_p;
        a[p * n + i] = new_p;
        a[i * n + q] = new_q;
        a[q * n + i] = new_q;
    }
    for i in 0..n {
        let vip = v[i * n + p];
        let viq = v[i * n + q];
        v[i * n + p] = vip - s * (viq + tau * vip);
        v[i * n + q] = viq + s * (vip - tau * viq);
    }
}
