//! Reduced singular value decomposition via the smaller Gram matrix.
//!
//! For an m x n matrix the eigendecomposition runs on whichever of A A^T or
//! A^T A is smaller; the other factor is recovered as A^T u / sigma (or
//! A v / sigma). Singular values at or below `1e-10 * sigma_max` are treated
//! as zero, so the returned rank is the numerical rank at that tolerance.

use crate::eigen::sym_eigen;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const RANK_TOL: f64 = 1e-10;

/// A = U diag(sigma) V^T with U (m x r) and V (n x r) having orthonormal
/// columns and `singular_values` strictly positive, descending. The factors
/// are `None` exactly when `rank == 0` (the zero matrix).
#[derive(Debug, Clone)]
pub struct ReducedSvd {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub u: Option<DenseMatrix>,
    pub v: Option<DenseMatrix>,
}

pub fn reduced_svd(a: &DenseMatrix) -> Result<ReducedSvd> {
    let (m, n) = (a.rows(), a.cols());
    let use_rows = m <= n;
    let gram = if use_rows { a.gram_rows() } else { a.gram_columns() };
    let eig = sym_eigen(&gram)?;

    // Descending eigenvalues of the Gram matrix; clamp tiny negatives from roundoff.
    let mut lambdas: Vec<(usize, f64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (i, l.max(0.0)))
        .collect();
    lambdas.sort_by(|x, y| y.1.total_cmp(&x.1));

    let sigma_max = lambdas.first().map_or(0.0, |&(_, l)| l.sqrt());
    let cutoff = RANK_TOL * sigma_max;
    let kept: Vec<(usize, f64)> = lambdas
        .into_iter()
        .map(|(i, l)| (i, l.sqrt()))
        .filter(|&(_, s)| s > cutoff && s > 0.0)
        .collect();
    let rank = kept.len();
    if rank == 0 {
        return Ok(ReducedSvd { rank: 0, singular_values: vec![], u: None, v: None });
    }

    let singular_values: Vec<f64> = kept.iter().map(|&(_, s)| s).collect();
    let small_dim = gram.rows();
    let mut small_factor = DenseMatrix::zeros(small_dim, rank)?;
    for (col, &(src, _)) in kept.iter().enumerate() {
        for row in 0..small_dim {
            small_factor.set(row, col, eig.eigenvectors.get(row, src));
        }
    }

    // Recover the other factor and renormalize each column against roundoff.
    let big = if use_rows { a.transpose().matmul(&small_factor)? } else { a.matmul(&small_factor)? };
    let big_dim = big.rows();
    let mut big_factor = DenseMatrix::zeros(big_dim, rank)?;
    for col in 0..rank {
        let norm = big.column_norm_sq(col).sqrt();
        if norm == 0.0 {
            return Err(Error::Precondition(
                "singular vector collapsed during recovery; matrix is numerically degenerate".into(),
            ));
        }
        for row in 0..big_dim {
            big_factor.set(row, col, big.get(row, col) / norm);
        }
    }

    let (u, v) = if use_rows { (small_factor, big_factor) } else { (big_factor, small_factor) };
    Ok(ReducedSvd { rank, singular_values, u: Some(u), v: Some(v) })
}
