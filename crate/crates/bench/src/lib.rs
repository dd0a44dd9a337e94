//! Instance builders shared by the benchmark targets. Everything is seeded
//! so successive runs time the same inputs.

use sparsebound::rng::{normal_vec, stream};
use sparsebound::DenseMatrix;

pub fn design(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = stream(seed, 0);
    DenseMatrix::gaussian(rows, cols, (rows as f64).sqrt().recip(), &mut rng).unwrap()
}

/// Symmetric positive definite matrix A^T A + I for the eigensolver.
pub fn spd(n: usize, seed: u64) -> DenseMatrix {
    let g = design(n + 4, n, seed).gram_columns();
    let mut entries = g.entries().to_vec();
    for i in 0..n {
        entries[i * n + i] += 1.0;
    }
    DenseMatrix::new(n, n, entries).unwrap()
}

/// Observation of a fixed k-sparse signal through `a` under unit noise.
pub fn observation(a: &DenseMatrix, k: usize, seed: u64) -> Vec<f64> {
    let n = a.cols();
    let mut y = normal_vec(&mut stream(seed, 1), a.rows(), 1.0);
    for (j, col) in (0..k).map(|i| i * (n / k)).enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for (r, yr) in y.iter_mut().enumerate() {
            *yr += 4.0 * sign * a.get(r, col);
        }
    }
    y
}
