//! Reference estimators and Monte Carlo risk measurement.
//!
//! The estimators are deliberately plain: least squares on a known support
//! (the oracle the lower bounds are benchmarked against), an l1-penalized
//! fit by cyclic coordinate descent, and the zero estimator. The harnesses
//! measure E ||xhat - x||^2 / n by simulation, one RNG substream per trial,
//! so trial i is reproducible regardless of how many trials run.

use crate::bounds::GRAM_RANK_TOL;
use crate::eigen::{sym_eigen, SymEigen};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::packing::{PackingSet, SparseVector};
use crate::rng;
use rand::Rng;
use serde::Serialize;
use std::collections::HashMap;

/// Cached least-squares factorization for one (design, support) pair.
#[derive(Debug, Clone)]
pub struct LsFactor {
    support: Vec<usize>,
    a_t: DenseMatrix,
    eig: SymEigen,
    n: usize,
}

impl LsFactor {
    /// Errors if the support's Gram matrix is numerically singular.
    pub fn new(a: &DenseMatrix, support: &[usize]) -> Result<Self> {
        let a_t = a.column_submatrix(support)?;
        let eig = sym_eigen(&a_t.gram_columns())?;
        let lambda_max = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if lambda_max <= 0.0 || eig.eigenvalues.iter().any(|&l| l <= GRAM_RANK_TOL * lambda_max) {
            return Err(Error::Precondition(
                "support is unidentifiable: singular Gram matrix".into(),
            ));
        }
        Ok(Self { support: support.to_vec(), a_t, eig, n: a.cols() })
    }

    /// argmin over vectors supported on T of ||y - A x||^2, via the
    /// eigendecomposition of A_T^T A_T.
    pub fn solve(&self, y: &[f64]) -> Result<SparseVector> {
        let k = self.support.len();
        if y.len() != self.a_t.rows() {
            return Err(Error::Shape(format!(
                "y has length {}, expected {}",
                y.len(),
                self.a_t.rows()
            )));
        }
        let mut w = vec![0.0; k];
        for (i, &yi) in y.iter().enumerate() {
            let row = self.a_t.row(i);
            for j in 0..k {
                w[j] += row[j] * yi;
            }
        }
        // V diag(1/lambda) V^T w.
        let v = &self.eig.eigenvectors;
        let mut coeffs = vec![0.0; k];
        for l in 0..k {
            let mut proj = 0.0;
            for (j, &wj) in w.iter().enumerate() {
                proj += v.get(j, l) * wj;
            }
            let scaled = proj / self.eig.eigenvalues[l];
            for (j, c) in coeffs.iter_mut().enumerate() {
                *c += v.get(j, l) * scaled;
            }
        }
        SparseVector::new(self.n, self.support.clone(), coeffs)
    }
}

/// Least squares restricted to a known support.
pub fn oracle_ls(a: &DenseMatrix, support: &[usize], y: &[f64]) -> Result<SparseVector> {
    LsFactor::new(a, support)?.solve(y)
}

/// The m x n averaging design: m/k copies of each unit row e_t, t in T,
/// stacked in ascending support order. Requires k | m and |T| = k.
pub fn averaging_design(n: usize, k: usize, m: usize, support: &[usize]) -> Result<DenseMatrix> {
    if k == 0 || m == 0 || !m.is_multiple_of(k) {
        return Err(Error::Precondition(format!(
            "averaging design needs k >= 1 dividing m, got k = {k}, m = {m}"
        )));
    }
    if support.len() != k {
        return Err(Error::Precondition(format!(
            "support has {} indices, expected k = {k}",
            support.len()
        )));
    }
    let mut a = DenseMatrix::zeros(m, n)?;
    let reps = m / k;
    for (slot, &t) in support.iter().enumerate() {
        if t >= n {
            return Err(Error::ColumnOutOfRange { index: t, cols: n });
        }
        for r in 0..reps {
            a.set(slot * reps + r, t, 1.0);
        }
    }
    // Validates ascending order as a side effect.
    a.column_submatrix(support)?;
    Ok(a)
}

/// Result of one l1 fit: coefficients, cycle count, whether the coordinate
/// updates settled below tolerance, and the objective trace.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
    pub objective: f64,
    pub objective_history: Vec<f64>,
}

/// Minimizes (1/2)||y - A x||^2 + lambda ||x||_1 by cyclic coordinate
/// descent with an incrementally maintained residual. Convergence: the
/// largest coordinate change in a full cycle drops to `tol` or below.
/// Zero columns keep coefficient zero. The objective is checked to be
/// non-increasing across cycles.
pub fn lasso_cd(
    a: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_cycles: usize,
) -> Result<LassoFit> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::Shape(format!("y has length {}, expected {m}", y.len())));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Precondition(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if !(tol.is_finite() && tol > 0.0) || max_cycles == 0 {
        return Err(Error::Precondition(format!(
            "need tol > 0 and max_cycles >= 1, got tol = {tol}, max_cycles = {max_cycles}"
        )));
    }

    // Column-major copy: coordinate descent walks columns.
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let col_norm_sq: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();

    let mut x = vec![0.0; n];
    let mut r = y.to_vec();
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut cycles = 0;
    while cycles < max_cycles {
        cycles += 1;
        let mut max_delta = 0.0f64;
        for j in 0..n {
            let c = col_norm_sq[j];
            if c == 0.0 {
                continue;
            }
            let col = &columns[j];
            let rho: f64 = col.iter().zip(&r).map(|(aij, ri)| aij * ri).sum::<f64>() + c * x[j];
            let new = soft_threshold(rho, lambda) / c;
            let delta = new - x[j];
            if delta != 0.0 {
                for (ri, aij) in r.iter_mut().zip(col) {
                    *ri -= delta * aij;
                }
                x[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        let obj = 0.5 * r.iter().map(|v| v * v).sum::<f64>()
            + lambda * x.iter().map(|v| v.abs()).sum::<f64>();
        if let Some(&prev) = history.last() {
            debug_assert!(
                obj <= prev + 1e-9 * (1.0 + prev.abs()),
                "objective rose from {prev} to {obj}"
            );
        }
        history.push(obj);
        if max_delta <= tol {
            converged = true;
            break;
        }
    }
    Ok(LassoFit {
        coefficients: x,
        cycles,
        converged,
        objective: *history.last().expect("at least one cycle ran"),
        objective_history: history,
    })
}

fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// The universal penalty 2 sigma sqrt(2 ln n) max_j ||a_j||.
pub fn universal_lambda(a: &DenseMatrix, sigma: f64) -> f64 {
    let max_col = (0..a.cols())
        .map(|j| a.column_norm_sq(j))
        .fold(0.0f64, f64::max)
        .sqrt();
    2.0 * sigma * (2.0 * (a.cols() as f64).ln()).sqrt() * max_col
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// 2 sigma sqrt(2 ln n) max_j ||a_j||, recomputed per design.
    Universal,
    Fixed(f64),
}

/// An estimator choice for the Monte Carlo harnesses.
#[derive(Debug, Clone)]
pub enum Estimator {
    /// Least squares on a fixed support, or on the true support of each
    /// drawn signal when `support` is `None`.
    OracleLs { support: Option<Vec<usize>> },
    Lasso { lambda: LambdaRule, tol: f64, max_cycles: usize },
    Zero,
}

impl Estimator {
    pub fn lasso_default() -> Self {
        Estimator::Lasso { lambda: LambdaRule::Universal, tol: 1e-8, max_cycles: 10_000 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::OracleLs { .. } => "oracle-ls",
            Estimator::Lasso { .. } => "lasso",
            Estimator::Zero => "zero",
        }
    }
}

/// Risk measured by simulation. `failures` counts trials dropped from the
/// mean (singular per-trial support, l1 fit that did not converge); a run
/// errors instead once failures reach 1% of trials.
#[derive(Debug, Clone, Serialize)]
pub struct RiskEstimate {
    pub estimator: String,
    pub mean_risk: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
    pub failures: usize,
}

impl RiskEstimate {
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Json(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

struct TrialRunner<'a> {
    a: &'a DenseMatrix,
    estimator: &'a Estimator,
    lambda: f64,
    fixed_factor: Option<LsFactor>,
    factor_cache: HashMap<Vec<usize>, Option<LsFactor>>,
}

impl<'a> TrialRunner<'a> {
    fn new(a: &'a DenseMatrix, estimator: &'a Estimator, sigma: f64) -> Result<Self> {
        let lambda = match estimator {
            Estimator::Lasso { lambda: LambdaRule::Fixed(l), .. } => {
                if !(l.is_finite() && *l >= 0.0) {
                    return Err(Error::Precondition(format!(
                        "lambda must be finite and nonnegative, got {l}"
                    )));
                }
                *l
            }
            Estimator::Lasso { lambda: LambdaRule::Universal, .. } => universal_lambda(a, sigma),
            _ => 0.0,
        };
        let fixed_factor = match estimator {
            Estimator::OracleLs { support: Some(s) } => Some(LsFactor::new(a, s)?),
            _ => None,
        };
        Ok(Self { a, estimator, lambda, fixed_factor, factor_cache: HashMap::new() })
    }

    /// `None` marks a recorded failure for this trial.
    fn estimate(&mut self, y: &[f64], true_support: &[usize]) -> Result<Option<Vec<f64>>> {
        match self.estimator {
            Estimator::Zero => Ok(Some(vec![0.0; self.a.cols()])),
            Estimator::OracleLs { .. } => {
                let factor = match &self.fixed_factor {
                    Some(f) => Some(f),
                    None => self
                        .factor_cache
                        .entry(true_support.to_vec())
                        .or_insert_with(|| LsFactor::new(self.a, true_support).ok())
                        .as_ref(),
                };
                match factor {
                    Some(f) => Ok(Some(f.solve(y)?.to_dense())),
                    None => Ok(None),
                }
            }
            Estimator::Lasso { tol, max_cycles, .. } => {
                let fit = lasso_cd(self.a, y, self.lambda, *tol, *max_cycles)?;
                Ok(if fit.converged { Some(fit.coefficients) } else { None })
            }
        }
    }
}

fn summarize(
    name: &str,
    risks: &[f64],
    trials: usize,
    failures: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if failures * 100 >= trials {
        return Err(Error::TooManyFailures { failed: failures, trials });
    }
    let count = risks.len() as f64;
    let mean = risks.iter().sum::<f64>() / count;
    let var = risks.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (count - 1.0);
    Ok(RiskEstimate {
        estimator: name.to_string(),
        mean_risk: mean,
        std_error: (var.max(0.0) / count).sqrt(),
        trials,
        seed,
        failures,
    })
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::Precondition(format!("need at least 2 trials, got {trials}")));
    }
    Ok(())
}

fn check_noise(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Precondition(format!("sigma must be finite and nonnegative, got {sigma}")));
    }
    Ok(())
}

/// Monte Carlo risk at a fixed signal: trial t draws z from substream t of
/// `seed`, observes y = A x + z, and scores ||xhat - x||^2 / n.
pub fn mc_risk(
    a: &DenseMatrix,
    x_true: &SparseVector,
    estimator: &Estimator,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_trials(trials)?;
    check_noise(sigma)?;
    if x_true.n() != a.cols() {
        return Err(Error::Shape(format!(
            "signal lives in R^{} but design has {} columns",
            x_true.n(),
            a.cols()
        )));
    }
    let mut runner = TrialRunner::new(a, estimator, sigma)?;
    let clean = x_true.image(a)?;
    let x_dense = x_true.to_dense();
    let mut risks = Vec::with_capacity(trials);
    let mut failures = 0usize;
    for trial in 0..trials {
        let mut stream = rng::stream(seed, trial as u64);
        let z = rng::normal_vec(&mut stream, a.rows(), sigma);
        let y: Vec<f64> = clean.iter().zip(&z).map(|(c, zi)| c + zi).collect();
        match runner.estimate(&y, x_true.support())? {
            Some(xhat) => risks.push(sq_dist(&xhat, &x_dense) / a.cols() as f64),
            None => failures += 1,
        }
    }
    summarize(estimator.name(), &risks, trials, failures, seed)
}

/// Bayes risk under the uniform prior on a packing rescaled to risk level M:
/// trial t draws a point index, then noise, from substream t; the point is
/// scaled by 4 sqrt(n M) before measurement. With the zero estimator the
/// risk is exactly 16 M, the separation-level risk of the packing prior.
pub fn packing_bayes_risk(
    a: &DenseMatrix,
    p: &PackingSet,
    level: f64,
    estimator: &Estimator,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    check_trials(trials)?;
    check_noise(sigma)?;
    if p.scale() != 1.0 {
        return Err(Error::Precondition(format!(
            "bayes harness rescales internally; packing must be unit scale, got {}",
            p.scale()
        )));
    }
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::Precondition(format!("risk level must be positive, got {level}")));
    }
    if p.n() != a.cols() {
        return Err(Error::Shape(format!(
            "packing lives in R^{} but design has {} columns",
            p.n(),
            a.cols()
        )));
    }
    let n = a.cols();
    let scale = 4.0 * (n as f64 * level).sqrt();
    let mut runner = TrialRunner::new(a, estimator, sigma)?;
    let mut risks = Vec::with_capacity(trials);
    let mut failures = 0usize;
    for trial in 0..trials {
        let mut stream = rng::stream(seed, trial as u64);
        let idx = stream.random_range(0..p.len());
        let x = p.points()[idx].scaled(scale)?;
        let clean = x.image(a)?;
        let z = rng::normal_vec(&mut stream, a.rows(), sigma);
        let y: Vec<f64> = clean.iter().zip(&z).map(|(c, zi)| c + zi).collect();
        match runner.estimate(&y, x.support())? {
            Some(xhat) => risks.push(sq_dist(&xhat, &x.to_dense()) / n as f64),
            None => failures += 1,
        }
    }
    summarize(estimator.name(), &risks, trials, failures, seed)
}

/// A k-sparse test signal with coordinates +-amplitude/sqrt(k) on a uniform
/// random support; any 1 <= k <= n works (no evenness constraint).
pub fn random_sparse_signal<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    amplitude: f64,
    rng: &mut R,
) -> Result<SparseVector> {
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::Precondition(format!("amplitude must be positive, got {amplitude}")));
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut support: Vec<usize> = pool[..k].to_vec();
    support.sort_unstable();
    let mag = amplitude / (k as f64).sqrt();
    let values = (0..k).map(|_| if rng.random::<bool>() { mag } else { -mag }).collect();
    SparseVector::new(n, support, values)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::build_packing;
    use rand::SeedableRng;

    fn random_design(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::gaussian(m, n, 1.0, &mut rng).unwrap()
    }

    #[test]
    fn oracle_ls_recovers_noiseless_signal() {
        let a = random_design(8, 20, 1);
        let x = SparseVector::new(20, vec![2, 9, 13], vec![1.5, -0.25, 3.0]).unwrap();
        let y = x.image(&a).unwrap();
        let xhat = oracle_ls(&a, &[2, 9, 13], &y).unwrap();
        assert_eq!(xhat.support(), x.support());
        for (got, want) in xhat.values().iter().zip(x.values()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn oracle_ls_rejects_singular_support() {
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0, 0.0], &[2.0, 2.0, 1.0]]).unwrap();
        assert!(oracle_ls(&a, &[0, 1], &[1.0, 2.0]).is_err());
        assert!(oracle_ls(&a, &[0, 2], &[1.0, 2.0]).is_ok());
    }

    #[test]
    fn averaging_design_layout_and_risk() {
        let a = averaging_design(10, 2, 8, &[0, 2]).unwrap();
        assert_eq!((a.rows(), a.cols()), (8, 10));
        for r in 0..4 {
            assert_eq!(a.get(r, 0), 1.0);
            assert_eq!(a.row(r).iter().sum::<f64>(), 1.0);
        }
        for r in 4..8 {
            assert_eq!(a.get(r, 2), 1.0);
        }
        // Its oracle risk matches the closed form (k sigma^2 / m)(k / n).
        let risk = crate::bounds::oracle_support_risk(&a, &[0, 2], 1.0).unwrap();
        assert_eq!(risk, crate::bounds::Risk::Finite(0.05));

        assert!(averaging_design(10, 3, 8, &[0, 1, 2]).is_err());
        assert!(averaging_design(10, 2, 8, &[0]).is_err());
        assert!(averaging_design(10, 2, 8, &[2, 0]).is_err());
    }

    #[test]
    fn lasso_orthogonal_design_soft_thresholds() {
        let a = DenseMatrix::identity(6).unwrap();
        let y = vec![3.0, -0.4, 0.1, -2.0, 0.9, 0.0];
        let fit = lasso_cd(&a, &y, 1.0, 1e-12, 100).unwrap();
        assert!(fit.converged);
        let want = [2.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        for (got, want) in fit.coefficients.iter().zip(want) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn lasso_kkt_conditions_hold() {
        let a = random_design(15, 40, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x = random_sparse_signal(40, 3, 4.0, &mut rng).unwrap();
        let clean = x.image(&a).unwrap();
        let z = rng::normal_vec(&mut rng, 15, 0.5);
        let y: Vec<f64> = clean.iter().zip(&z).map(|(c, zi)| c + zi).collect();
        let lambda = universal_lambda(&a, 0.5);
        let fit = lasso_cd(&a, &y, lambda, 1e-10, 10_000).unwrap();
        assert!(fit.converged);
        let residual: Vec<f64> = {
            let ax = a.apply(&fit.coefficients).unwrap();
            y.iter().zip(&ax).map(|(yi, axi)| yi - axi).collect()
        };
        for j in 0..40 {
            let corr: f64 = (0..15).map(|i| a.get(i, j) * residual[i]).sum();
            assert!(corr.abs() <= lambda + 1e-6, "column {j}: |corr| = {}", corr.abs());
            if fit.coefficients[j] != 0.0 {
                let want = lambda * fit.coefficients[j].signum();
                assert!((corr - want).abs() < 1e-6, "active column {j}: {corr} vs {want}");
            }
        }
        // Objective history is non-increasing.
        for w in fit.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn lasso_skips_zero_columns() {
        let a = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let fit = lasso_cd(&a, &[5.0, 1.0], 0.5, 1e-12, 50).unwrap();
        assert_eq!(fit.coefficients[1], 0.0);
        assert!((fit.coefficients[0] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn universal_lambda_formula() {
        let a = DenseMatrix::diagonal(&[1.0, 3.0]).unwrap();
        let want = 2.0 * 0.5 * (2.0 * 2.0f64.ln()).sqrt() * 3.0;
        assert!((universal_lambda(&a, 0.5) - want).abs() < 1e-12);
    }

    #[test]
    fn mc_risk_zero_estimator_is_exact() {
        let a = random_design(6, 12, 5);
        let x = SparseVector::new(12, vec![1, 7], vec![2.0, -1.0]).unwrap();
        let est = mc_risk(&a, &x, &Estimator::Zero, 1.0, 50, 9).unwrap();
        assert!((est.mean_risk - 5.0 / 12.0).abs() < 1e-14);
        assert!(est.std_error < 1e-14);
        assert_eq!(est.trials, 50);
        assert_eq!(est.failures, 0);
        assert_eq!(est.estimator, "zero");
        assert_eq!(est.seed, 9);
    }

    #[test]
    fn mc_risk_is_deterministic_in_seed() {
        let a = random_design(10, 16, 2);
        let x = SparseVector::new(16, vec![3, 8], vec![1.0, 1.0]).unwrap();
        let est = Estimator::OracleLs { support: None };
        let r1 = mc_risk(&a, &x, &est, 1.0, 200, 4).unwrap();
        let r2 = mc_risk(&a, &x, &est, 1.0, 200, 4).unwrap();
        let r3 = mc_risk(&a, &x, &est, 1.0, 200, 5).unwrap();
        assert_eq!(r1.mean_risk, r2.mean_risk);
        assert_ne!(r1.mean_risk, r3.mean_risk);
    }

    #[test]
    fn mc_risk_oracle_matches_closed_form_loosely() {
        let a = random_design(12, 24, 7);
        let support = vec![0, 5, 17];
        let x = SparseVector::new(24, support.clone(), vec![1.0, 1.0, 1.0]).unwrap();
        let est = Estimator::OracleLs { support: Some(support.clone()) };
        let r = mc_risk(&a, &x, &est, 1.0, 4000, 11).unwrap();
        let closed = crate::bounds::oracle_support_risk(&a, &support, 1.0)
            .unwrap()
            .finite()
            .unwrap();
        assert!(
            (r.mean_risk - closed).abs() <= 4.0 * r.std_error,
            "mc {} vs closed {closed} (se {})",
            r.mean_risk,
            r.std_error
        );
    }

    #[test]
    fn mc_risk_too_many_failures_errors() {
        let a = random_design(10, 16, 2);
        let x = SparseVector::new(16, vec![3, 8], vec![5.0, 5.0]).unwrap();
        // One cycle with an impossible tolerance: every fit fails to converge.
        let est = Estimator::Lasso { lambda: LambdaRule::Universal, tol: 1e-300, max_cycles: 1 };
        assert!(matches!(
            mc_risk(&a, &x, &est, 1.0, 10, 0),
            Err(Error::TooManyFailures { .. })
        ));
    }

    #[test]
    fn packing_bayes_zero_estimator_sees_sixteen_m() {
        let (p, _) = build_packing(32, 4, 8, 1, None).unwrap();
        let a = DenseMatrix::identity(32).unwrap();
        let level = 2.5e-3;
        let r = packing_bayes_risk(&a, &p, level, &Estimator::Zero, 1.0, 64, 3).unwrap();
        assert!((r.mean_risk - 16.0 * level).abs() < 1e-15, "{} vs {}", r.mean_risk, 16.0 * level);
        assert!(r.std_error < 1e-15);
    }

    #[test]
    fn packing_bayes_noiseless_oracle_is_exact() {
        let (p, _) = build_packing(32, 4, 8, 2, None).unwrap();
        let a = random_design(16, 32, 9);
        let est = Estimator::OracleLs { support: None };
        let r = packing_bayes_risk(&a, &p, 1.0, &est, 0.0, 32, 5).unwrap();
        assert!(r.mean_risk < 1e-18, "noiseless oracle risk {}", r.mean_risk);
        assert_eq!(r.failures, 0);
    }

    #[test]
    fn packing_bayes_rejects_scaled_packing() {
        let (p, _) = build_packing(32, 4, 8, 2, None).unwrap();
        let a = DenseMatrix::identity(32).unwrap();
        let scaled = p.rescaled(2.0).unwrap();
        assert!(packing_bayes_risk(&a, &scaled, 1.0, &Estimator::Zero, 1.0, 10, 0).is_err());
    }

    #[test]
    fn random_sparse_signal_shape() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = random_sparse_signal(20, 3, 6.0, &mut rng).unwrap();
        assert_eq!(x.support().len(), 3);
        assert!((x.norm_sq() - 36.0).abs() < 1e-12);
        assert!(random_sparse_signal(20, 0, 1.0, &mut rng).is_err());
        assert!(random_sparse_signal(20, 21, 1.0, &mut rng).is_err());
    }

    #[test]
    fn risk_estimate_serializes_expected_keys() {
        let est = RiskEstimate {
            estimator: "zero".into(),
            mean_risk: 0.5,
            std_error: 0.01,
            trials: 100,
            seed: 7,
            failures: 0,
        };
        let json: serde_json::Value = serde_json::from_str(&est.to_json_string().unwrap()).unwrap();
        for key in ["estimator", "mean_risk", "std_error", "trials", "seed", "failures"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["estimator"], "zero");
        assert_eq!(json["trials"], 100);
    }
}
