//! Dense row-major matrices and the CSV interchange format.
//!
//! The CSV format is deliberately plain: UTF-8, one row per line, entries as
//! decimal literals separated by commas, no header, LF line endings. Every
//! stored entry is finite; constructors reject NaN and infinities.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries. Dimensions must be positive and
    /// `entries.len()` must equal `rows * cols`; all entries must be finite.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("dimensions must be positive, got {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if !entries.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut m = Self::zeros(n, n)?;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            m.entries[i * n + i] = v;
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Shape("no rows given".into()));
        }
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            entries.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, entries)
    }

    /// Matrix with independent N(0, stddev^2) entries.
    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, stddev: f64, rng: &mut R) -> Result<Self> {
        if !(stddev.is_finite() && stddev >= 0.0) {
            return Err(Error::Precondition(format!("stddev must be finite and nonnegative, got {stddev}")));
        }
        let entries = (0..rows * cols)
            .map(|_| stddev * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        self.entries[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.rows, "row {i} out of bounds");
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.entries.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        Self { rows: self.cols, cols: self.rows, entries: out }
    }

    /// Sum of squared entries, accumulated in row-major order.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    pub fn column_norm_sq(&self, j: usize) -> f64 {
        assert!(j < self.cols, "column {j} out of bounds");
        (0..self.rows).map(|i| self.entries[i * self.cols + j].powi(2)).sum()
    }

    /// Submatrix keeping the columns listed in `support`, which must be
    /// strictly ascending and in range.
    pub fn column_submatrix(&self, support: &[usize]) -> Result<Self> {
        check_support(support, self.cols)?;
        let mut entries = Vec::with_capacity(self.rows * support.len());
        for i in 0..self.rows {
            let row = self.row(i);
            entries.extend(support.iter().map(|&j| row[j]));
        }
        Self::new(self.rows, support.len(), entries)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a_il = self.entries[i * self.cols + l];
                if a_il == 0.0 {
                    continue;
                }
                let src = &other.entries[l * other.cols..(l + 1) * other.cols];
                let dst = &mut out[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a_il * s;
                }
            }
        }
        Self::new(self.rows, other.cols, out)
    }

    /// A^T A, the Gram matrix of the columns.
    pub fn gram_columns(&self) -> Self {
        let n = self.cols;
        let mut out = vec![0.0; n * n];
        for p in 0..n {
            for q in p..n {
                let mut s = 0.0;
                for i in 0..self.rows {
                    s += self.entries[i * n + p] * self.entries[i * n + q];
                }
                out[p * n + q] = s;
                out[q * n + p] = s;
            }
        }
        Self { rows: n, cols: n, entries: out }
    }

    /// A A^T, the Gram matrix of the rows.
    pub fn gram_rows(&self) -> Self {
        let m = self.rows;
        let mut out = vec![0.0; m * m];
        for p in 0..m {
            for q in p..m {
                let s = dot(self.row(p), self.row(q));
                out[p * m + q] = s;
                out[q * m + p] = s;
            }
        }
        Self { rows: m, cols: m, entries: out }
    }

    /// Matrix-vector product A x.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} against {}x{} matrix",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// A x for a sparse x given as parallel (support, values) slices.
    pub fn apply_support(&self, support: &[usize], values: &[f64]) -> Result<Vec<f64>> {
        check_support(support, self.cols)?;
        if support.len() != values.len() {
            return Err(Error::Shape("support and values have different lengths".into()));
        }
        let mut out = vec![0.0; self.rows];
        for (i, out_i) in out.iter_mut().enumerate() {
            let row = self.row(i);
            *out_i = support.iter().zip(values).map(|(&j, &v)| row[j] * v).sum();
        }
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFinite);
        }
        Self::new(self.rows, self.cols, self.entries.iter().map(|v| c * v).collect())
    }

    /// Parses the CSV matrix format. Line numbers in errors are 1-based.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut cols = 0usize;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                return Err(Error::CsvParse { line: lineno, message: "blank line".into() });
            }
            let mut row = Vec::new();
            for tok in line.split(',') {
                let tok = tok.trim();
                let v: f64 = tok.parse().map_err(|_| Error::CsvParse {
                    line: lineno,
                    message: format!("cannot parse {tok:?} as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::CsvParse {
                        line: lineno,
                        message: format!("non-finite entry {tok:?}"),
                    });
                }
                row.push(v);
            }
            if rows.is_empty() {
                cols = row.len();
            } else if row.len() != cols {
                return Err(Error::CsvParse {
                    line: lineno,
                    message: format!("expected {cols} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::CsvParse { line: 1, message: "empty input".into() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Renders the CSV matrix format: shortest round-trip decimal literals,
    /// LF line endings, trailing newline.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let mut first = true;
            for v in self.row(i) {
                if !first {
                    out.push(',');
                }
                out.push_str(&format!("{v}"));
                first = false;
            }
            out.push('\n');
        }
        out
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Validates a support set: nonempty, strictly ascending, all indices below `n`.
pub(crate) fn check_support(support: &[usize], n: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Precondition("support must be nonempty".into()));
    }
    for w in support.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Precondition(format!(
                "support must be strictly ascending, saw {} then {}",
                w[0], w[1]
            )));
        }
    }
    let last = *support.last().unwrap();
    if last >= n {
        return Err(Error::ColumnOutOfRange { index: last, cols: n });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_shapes_and_nonfinite() {
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn transpose_roundtrip() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let t = a.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.get(0, 1), 4.0);
        assert_eq!(t.transpose(), a);
    }

    #[test]
    fn gram_matrices_match_matmul() {
        let a = DenseMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0], &[2.0, 1.0]]).unwrap();
        let at = a.transpose();
        assert_eq!(a.gram_columns(), at.matmul(&a).unwrap());
        assert_eq!(a.gram_rows(), a.matmul(&at).unwrap());
    }

    #[test]
    fn frobenius_and_column_norms() {
        let a = DenseMatrix::from_rows(&[&[3.0, 0.0], &[4.0, 2.0]]).unwrap();
        assert_eq!(a.frobenius_norm_sq(), 29.0);
        assert_eq!(a.column_norm_sq(0), 25.0);
        assert_eq!(a.column_norm_sq(1), 4.0);
    }

    #[test]
    fn column_submatrix_picks_ascending_columns() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let s = a.column_submatrix(&[0, 2]).unwrap();
        assert_eq!(s, DenseMatrix::from_rows(&[&[1.0, 3.0], &[4.0, 6.0]]).unwrap());
        assert!(a.column_submatrix(&[2, 0]).is_err());
        assert!(a.column_submatrix(&[1, 1]).is_err());
        assert!(a.column_submatrix(&[3]).is_err());
        assert!(a.column_submatrix(&[]).is_err());
    }

    #[test]
    fn apply_support_agrees_with_dense_apply() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]]).unwrap();
        let dense = a.apply(&[0.0, -1.0, 0.0, 2.0]).unwrap();
        let sparse = a.apply_support(&[1, 3], &[-1.0, 2.0]).unwrap();
        assert_eq!(dense, sparse);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let a = DenseMatrix::from_rows(&[&[0.1, -2.5e-3], &[1.0 / 3.0, 7.0]]).unwrap();
        let b = DenseMatrix::from_csv(&a.to_csv()).unwrap();
        assert_eq!(a, b);
        assert!(a.to_csv().ends_with('\n'));
        assert!(!a.to_csv().contains('\r'));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = DenseMatrix::from_csv("1,2\n3\n").unwrap_err();
        match err {
            Error::CsvParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        let err = DenseMatrix::from_csv("1,2\n3,inf\n").unwrap_err();
        match err {
            Error::CsvParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(DenseMatrix::from_csv("").is_err());
    }

    #[test]
    fn gaussian_moments_are_plausible() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = DenseMatrix::gaussian(200, 50, 2.0, &mut rng).unwrap();
        let mean = a.entries().iter().sum::<f64>() / 10_000.0;
        let var = a.frobenius_norm_sq() / 10_000.0;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 4.0).abs() < 0.2, "variance {var}");
    }
}
