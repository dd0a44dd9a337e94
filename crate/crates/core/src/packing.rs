//! Random packing sets of sparse sign vectors.
//!
//! The universe for parameters (n, k) is the set of vectors with exactly k
//! nonzero coordinates, each equal to +sqrt(1/k) or -sqrt(1/k); every element
//! has unit norm. A packing set is a list of universe points with pairwise
//! squared distances at least 1/2, built by rejection sampling: draw
//! uniformly, keep the draw if it clears the distance floor against
//! everything kept so far, otherwise throw it away and redraw.
//!
//! The module also carries the probabilistic tools used to reason about such
//! packings: second-moment diagnostics (how close the empirical second moment
//! is to I/n, summarized by beta), the birthday-style bound P1 on a distance
//! violation among uniform draws, the matrix Bernstein tail bound and its
//! empirical check, and the beta threshold that makes the spectral failure
//! probability P2 small.

use crate::eigen::operator_norm_sym;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A vector in R^n with few nonzero coordinates, stored as parallel
/// (support, values) lists with the support strictly ascending. An empty
/// support encodes the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::Shape("support and values have different lengths".into()));
        }
        for w in support.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Precondition(format!(
                    "support must be strictly ascending, saw {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = support.last() {
            if last >= n {
                return Err(Error::ColumnOutOfRange { index: last, cols: n });
            }
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { n, support, values })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, support: vec![], values: vec![] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            out[j] = v;
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            n: self.n,
            support: self.support.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        })
    }

    /// x - y as a sparse vector; exact zeros in the merged support are dropped.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Shape(format!(
                "cannot subtract vectors of lengths {} and {}",
                self.n, other.n
            )));
        }
        let mut support = Vec::new();
        let mut values = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.support.len() || j < other.support.len() {
            let si = self.support.get(i).copied();
            let sj = other.support.get(j).copied();
            let (idx, v) = match (si, sj) {
                (Some(a), Some(b)) if a == b => {
                    let v = self.values[i] - other.values[j];
                    i += 1;
                    j += 1;
                    (a, v)
                }
                (Some(a), Some(b)) if a < b => {
                    let v = self.values[i];
                    i += 1;
                    (a, v)
                }
                (Some(_), Some(b)) => {
                    let v = -other.values[j];
                    j += 1;
                    (b, v)
                }
                (Some(a), None) => {
                    let v = self.values[i];
                    i += 1;
                    (a, v)
                }
                (None, Some(b)) => {
                    let v = -other.values[j];
                    j += 1;
                    (b, v)
                }
                (None, None) => unreachable!(),
            };
            if v != 0.0 {
                support.push(idx);
                values.push(v);
            }
        }
        Ok(Self { n: self.n, support, values })
    }

    pub fn dist_sq(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm_sq())
    }

    /// A x for this sparse x.
    pub fn image(&self, a: &DenseMatrix) -> Result<Vec<f64>> {
        if a.cols() != self.n {
            return Err(Error::Shape(format!(
                "matrix has {} columns but vector lives in R^{}",
                a.cols(),
                self.n
            )));
        }
        if self.support.is_empty() {
            return Ok(vec![0.0; a.rows()]);
        }
        a.apply_support(&self.support, &self.values)
    }
}

/// One uniform draw from the (n, k) universe: a uniformly random size-k
/// support, then an independent uniform sign for each coordinate. Requires k
/// even, k >= 2, and 2k <= n.
pub fn universe_sample<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SparseVector> {
    check_universe_params(n, k)?;
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut support: Vec<usize> = pool[..k].to_vec();
    support.sort_unstable();
    let mag = (1.0 / k as f64).sqrt();
    let values = (0..k)
        .map(|_| if rng.random::<bool>() { mag } else { -mag })
        .collect();
    SparseVector::new(n, support, values)
}

/// The full (n, k) universe in deterministic order: supports lexicographic,
/// then sign patterns in binary counting order (bit i flips coordinate i of
/// the support to negative). Errors if the universe exceeds 2^20 points.
pub fn universe_enumerate(n: usize, k: usize) -> Result<Vec<SparseVector>> {
    check_universe_params(n, k)?;
    let count = binomial(n, k).saturating_mul(1u128 << k);
    const CAP: u64 = 1 << 20;
    if count > CAP as u128 {
        return Err(Error::EnumerationCap { count, cap: CAP });
    }
    let mag = (1.0 / k as f64).sqrt();
    let mut out = Vec::with_capacity(count as usize);
    let mut support: Vec<usize> = (0..k).collect();
    loop {
        for mask in 0u32..(1u32 << k) {
            let values: Vec<f64> = (0..k)
                .map(|i| if mask >> i & 1 == 1 { -mag } else { mag })
                .collect();
            out.push(SparseVector::new(n, support.clone(), values)?);
        }
        if !next_combination(&mut support, n) {
            break;
        }
    }
    Ok(out)
}

/// Packing size (n/k)^(k/4), rounded up. Values within 1e-9 relative of an
/// integer snap to it before the ceiling, so exact powers are not bumped by
/// floating point noise. Requires k even, k >= 2, and 2k < n.
pub fn lemma_size(n: usize, k: usize) -> Result<usize> {
    check_packing_params(n, k)?;
    let exact = ((k as f64 / 4.0) * (n as f64 / k as f64).ln()).exp();
    if exact >= 9.0e15 {
        return Err(Error::Precondition(format!(
            "packing size (n/k)^(k/4) = {exact:e} is far beyond anything constructible"
        )));
    }
    let nearest = exact.round();
    let snapped = if (exact - nearest).abs() <= 1e-9 * exact.max(1.0) { nearest } else { exact.ceil() };
    Ok(snapped as usize)
}

/// A packing: universe points rescaled by `scale`, with the measured pairwise
/// distance floor and measured beta cached. Distances are measured in the
/// scaled coordinates; beta is scale-free.
#[derive(Debug, Clone)]
pub struct PackingSet {
    n: usize,
    k: usize,
    scale: f64,
    seed: u64,
    points: Vec<SparseVector>,
    measured_min_dist_sq: f64,
    measured_beta: f64,
}

impl PackingSet {
    /// Wraps an explicit point list, validating shapes and magnitudes and
    /// measuring the distance floor and beta. Duplicate or close points are
    /// not rejected here; the measured floor exposes them and the operations
    /// that need a genuine packing check it.
    pub fn from_points(
        n: usize,
        k: usize,
        scale: f64,
        seed: u64,
        points: Vec<SparseVector>,
    ) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::Precondition("n and k must be positive".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Precondition(format!("scale must be positive, got {scale}")));
        }
        if points.len() < 2 {
            return Err(Error::Precondition("a packing needs at least two points".into()));
        }
        let mag = scale * (1.0 / k as f64).sqrt();
        for (idx, p) in points.iter().enumerate() {
            if p.n() != n {
                return Err(Error::Shape(format!("point {idx} lives in R^{}, expected R^{n}", p.n())));
            }
            if p.support().len() != k {
                return Err(Error::Precondition(format!(
                    "point {idx} has {} nonzeros, expected exactly {k}",
                    p.support().len()
                )));
            }
            for &v in p.values() {
                if (v.abs() - mag).abs() > 1e-9 * scale {
                    return Err(Error::Precondition(format!(
                        "point {idx} has coordinate magnitude {}, expected {mag}",
                        v.abs()
                    )));
                }
            }
        }
        let measured_min_dist_sq = min_pairwise_dist_sq(&points)?;
        let measured_beta = sample_moments(n, scale, &points)?.beta;
        Ok(Self { n, k, scale, seed, points, measured_min_dist_sq, measured_beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SparseVector] {
        &self.points
    }

    pub fn measured_min_dist_sq(&self) -> f64 {
        self.measured_min_dist_sq
    }

    pub fn measured_beta(&self) -> f64 {
        self.measured_beta
    }

    /// Same packing with every point multiplied by c > 0. Distances pick up
    /// a factor c^2; beta does not change.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Precondition(format!("rescale factor must be positive, got {c}")));
        }
        let points = self
            .points
            .iter()
            .map(|p| p.scaled(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: self.n,
            k: self.k,
            scale: self.scale * c,
            seed: self.seed,
            points,
            measured_min_dist_sq: self.measured_min_dist_sq * c * c,
            measured_beta: self.measured_beta,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        let dto = PackingDto {
            n: self.n,
            k: self.k,
            scale: self.scale,
            seed: self.seed,
            points: self
                .points
                .iter()
                .map(|p| PointDto { support: p.support().to_vec(), values: p.values().to_vec() })
                .collect(),
            measured_min_dist_sq: self.measured_min_dist_sq,
            measured_beta: self.measured_beta,
        };
        let mut s = serde_json::to_string_pretty(&dto).map_err(|e| Error::Json(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Parses the JSON form, revalidates every point, and recomputes the
    /// measured statistics: stored values that disagree with recomputation
    /// beyond 1e-9 relative are an error, not silently accepted.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let dto: PackingDto = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        let points = dto
            .points
            .into_iter()
            .map(|p| SparseVector::new(dto.n, p.support, p.values))
            .collect::<Result<Vec<_>>>()?;
        let set = Self::from_points(dto.n, dto.k, dto.scale, dto.seed, points)?;
        let dist_ok = close_rel(set.measured_min_dist_sq, dto.measured_min_dist_sq, 1e-9);
        let beta_ok = close_rel(set.measured_beta, dto.measured_beta, 1e-9);
        if !dist_ok || !beta_ok {
            return Err(Error::Precondition(
                "stored packing statistics disagree with recomputation".into(),
            ));
        }
        Ok(set)
    }
}

#[derive(Serialize, Deserialize)]
struct PackingDto {
    n: usize,
    k: usize,
    scale: f64,
    seed: u64,
    points: Vec<PointDto>,
    measured_min_dist_sq: f64,
    measured_beta: f64,
}

#[derive(Serialize, Deserialize)]
struct PointDto {
    support: Vec<usize>,
    values: Vec<f64>,
}

fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Builds a packing of `size` unit-scale points by rejection sampling with
/// distance floor 1/2. Every draw, kept or not, counts against the attempt
/// budget (default 100 * size). Returns the packing and the number of
/// rejected draws.
pub fn build_packing(
    n: usize,
    k: usize,
    size: usize,
    seed: u64,
    max_attempts: Option<usize>,
) -> Result<(PackingSet, usize)> {
    check_packing_params(n, k)?;
    if size < 2 {
        return Err(Error::Precondition(format!("packing size must be at least 2, got {size}")));
    }
    let budget = max_attempts.unwrap_or(100 * size);
    let mut rng = rng::master(seed);
    let mut accepted: Vec<SparseVector> = Vec::with_capacity(size);
    let mut draws = 0usize;
    while accepted.len() < size {
        if draws >= budget {
            return Err(Error::AttemptsExhausted {
                attempts: draws,
                placed: accepted.len(),
                target: size,
            });
        }
        let candidate = universe_sample(n, k, &mut rng)?;
        draws += 1;
        let mut ok = true;
        for p in &accepted {
            if candidate.dist_sq(p)? < 0.5 - 1e-12 {
                ok = false;
                break;
            }
        }
        if ok {
            accepted.push(candidate);
        }
    }
    let redraws = draws - size;
    let set = PackingSet::from_points(n, k, 1.0, seed, accepted)?;
    Ok((set, redraws))
}

/// Smallest pairwise squared distance, rescanning all pairs (rather than
/// trusting the cached measurement).
pub fn verify_min_distance(p: &PackingSet) -> Result<f64> {
    min_pairwise_dist_sq(p.points())
}

fn min_pairwise_dist_sq(points: &[SparseVector]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.min(points[i].dist_sq(&points[j])?);
        }
    }
    Ok(best)
}

/// First and second empirical moments of a point cloud, plus
/// beta = n * ||Q - scale^2 I / n|| / scale^2.
#[derive(Debug, Clone)]
pub struct MomentSummary {
    pub mu: Vec<f64>,
    pub q: DenseMatrix,
    pub beta: f64,
}

/// Moments of an arbitrary list of points whose universe scale is `scale`;
/// works on raw draws as well as finished packings.
pub fn sample_moments(n: usize, scale: f64, points: &[SparseVector]) -> Result<MomentSummary> {
    if points.is_empty() {
        return Err(Error::Precondition("moments of an empty point list".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Precondition(format!("scale must be positive, got {scale}")));
    }
    let count = points.len() as f64;
    let mut mu = vec![0.0; n];
    let mut q = DenseMatrix::zeros(n, n)?;
    for p in points {
        if p.n() != n {
            return Err(Error::Shape(format!("point lives in R^{}, expected R^{n}", p.n())));
        }
        for (&a, &va) in p.support().iter().zip(p.values()) {
            mu[a] += va;
            for (&b, &vb) in p.support().iter().zip(p.values()) {
                q.set(a, b, q.get(a, b) + va * vb);
            }
        }
    }
    for v in &mut mu {
        *v /= count;
    }
    let mut centered = q.clone();
    let s2 = scale * scale;
    for i in 0..n {
        for j in 0..n {
            let avg = q.get(i, j) / count;
            centered.set(i, j, avg - if i == j { s2 / n as f64 } else { 0.0 });
            q.set(i, j, avg);
        }
    }
    let beta = n as f64 * operator_norm_sym(&centered)? / s2;
    Ok(MomentSummary { mu, q, beta })
}

pub fn empirical_moments(p: &PackingSet) -> Result<MomentSummary> {
    sample_moments(p.n(), p.scale(), p.points())
}

/// Checks the scatter identity
/// (1/|P|^2) sum_{i,j} (x_i - x_j)(x_i - x_j)^T = 2 (Q - mu mu^T)
/// over all ordered pairs, returning the largest entrywise deviation.
pub fn scatter_identity_check(p: &PackingSet) -> Result<f64> {
    let n = p.n();
    let count = p.len() as f64;
    let mut lhs = DenseMatrix::zeros(n, n)?;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let d = p.points()[i].sub(&p.points()[j])?;
            // Ordered pairs (i,j) and (j,i) contribute the same outer product.
            for (&a, &va) in d.support().iter().zip(d.values()) {
                for (&b, &vb) in d.support().iter().zip(d.values()) {
                    lhs.set(a, b, lhs.get(a, b) + 2.0 * va * vb);
                }
            }
        }
    }
    let moments = empirical_moments(p)?;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let l = lhs.get(i, j) / (count * count);
            let r = 2.0 * (moments.q.get(i, j) - moments.mu[i] * moments.mu[j]);
            worst = worst.max((l - r).abs());
        }
    }
    Ok(worst)
}

/// Bound on the probability that `size` uniform universe draws contain a pair
/// closer than the packing floor:
/// P1 <= (size^2 / 2) * C(n, k/2) / C(n, k) * (sqrt(3)/2)^k,
/// evaluated in the log domain. Requires k even, 2k < n.
pub fn p1_bound(n: usize, k: usize, size: usize) -> Result<f64> {
    check_packing_params(n, k)?;
    if size < 2 {
        return Err(Error::Precondition(format!("need at least 2 draws, got {size}")));
    }
    let ln_p1 = 2.0 * (size as f64).ln() - std::f64::consts::LN_2 + ln_binomial(n, k / 2)
        - ln_binomial(n, k)
        + k as f64 * (3.0f64.sqrt() / 2.0).ln();
    Ok(ln_p1.exp())
}

/// Bound on the probability that the empirical second moment of `size`
/// uniform draws deviates from I/n by more than beta/n in operator norm:
/// P2 = 2n exp(-beta^2 size / (4n)). Requires beta > 0.
pub fn p2_bound(n: usize, size: usize, beta: f64) -> Result<f64> {
    if n == 0 || size == 0 {
        return Err(Error::Precondition("n and size must be positive".into()));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Precondition(format!("beta must be positive, got {beta}")));
    }
    Ok(2.0 * n as f64 * (-beta * beta * size as f64 / (4.0 * n as f64)).exp())
}

/// The beta at which P2 equals 1/2: sqrt(4 n ln(4n) / size). Deviations
/// beyond this are already unlikely at the given sample size.
pub fn beta_min(n: usize, size: usize) -> Result<f64> {
    if n == 0 || size == 0 {
        return Err(Error::Precondition("n and size must be positive".into()));
    }
    Ok((4.0 * n as f64 * (4.0 * n as f64).ln() / size as f64).sqrt())
}

/// Matrix Bernstein tail for a sum of centered, norm-bounded, i.i.d. matrix
/// samples with total variance rho_sq: P(||S|| >= t) <= 2n exp(-t^2 / (4 rho_sq))
/// for t in [0, 2 rho_sq].
pub fn bernstein_tail(n: usize, rho_sq: f64, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    if !(rho_sq.is_finite() && rho_sq > 0.0) {
        return Err(Error::Precondition(format!("rho_sq must be positive, got {rho_sq}")));
    }
    if !(t.is_finite() && t >= 0.0 && t <= 2.0 * rho_sq * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "t must lie in [0, 2 rho_sq] = [0, {}], got {t}",
            2.0 * rho_sq
        )));
    }
    Ok(2.0 * n as f64 * (-t * t / (4.0 * rho_sq)).exp())
}

/// One grid row of the empirical Bernstein check.
#[derive(Debug, Clone, Serialize)]
pub struct BernsteinRow {
    pub t: f64,
    pub empirical: f64,
    pub analytic: f64,
}

/// Empirical check of the Bernstein tail for S = sum of `size` independent
/// samples of X = x x^T - I/n, x uniform on the universe.
#[derive(Debug, Clone)]
pub struct BernsteinReport {
    pub n: usize,
    pub k: usize,
    pub size: usize,
    pub reps: usize,
    pub seed: u64,
    /// size * (n-1) / n^2, the variance proxy for the sum.
    pub rho_sq: f64,
    /// Largest single-sample operator norm seen; always 1 - 1/n here.
    pub max_sample_norm: f64,
    /// Tail frequencies at t = i/5 * 2 rho_sq against the analytic bound.
    pub rows: Vec<BernsteinRow>,
    /// Entrywise mean of X over all draws (should vanish), with std errors.
    pub mean_x: DenseMatrix,
    pub stderr_x: DenseMatrix,
    /// Entrywise mean of X^2 (should be ((n-1)/n^2) I), with std errors.
    pub mean_xsq: DenseMatrix,
    pub stderr_xsq: DenseMatrix,
}

impl BernsteinReport {
    /// max over entries of |mean| / stderr, treating a zero stderr with a
    /// nonzero mean as infinite.
    pub fn worst_mean_x_z(&self) -> f64 {
        worst_z(&self.mean_x, None, &self.stderr_x)
    }

    /// Same for the X^2 mean against its target ((n-1)/n^2) I.
    pub fn worst_mean_xsq_z(&self) -> f64 {
        let n = self.n;
        let target = DenseMatrix::diagonal(&vec![(n as f64 - 1.0) / (n as f64 * n as f64); n])
            .expect("diagonal target");
        worst_z(&self.mean_xsq, Some(&target), &self.stderr_xsq)
    }
}

fn worst_z(mean: &DenseMatrix, target: Option<&DenseMatrix>, stderr: &DenseMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..mean.rows() {
        for j in 0..mean.cols() {
            let dev = (mean.get(i, j) - target.map_or(0.0, |t| t.get(i, j))).abs();
            let se = stderr.get(i, j);
            let z = if se > 0.0 {
                dev / se
            } else if dev > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(z);
        }
    }
    worst
}

/// Runs `reps` independent repetitions, each summing `size` samples of
/// X = x x^T - I/n, and tabulates tail frequencies of ||S|| on the grid
/// t = (1..=5)/5 * 2 rho_sq against the analytic bound. Repetition r uses
/// substream r of `seed`, so any repetition can be reproduced alone.
///
/// Kept to desk scale: n <= 64, reps <= 10^4, and size * reps <= 2^20.
pub fn bernstein_empirical(
    n: usize,
    k: usize,
    size: usize,
    reps: usize,
    seed: u64,
) -> Result<BernsteinReport> {
    check_universe_params(n, k)?;
    if n > 64 || !(2..=10_000).contains(&reps) || size == 0 || size * reps > (1 << 20) {
        return Err(Error::Precondition(format!(
            "need n <= 64, 2 <= reps <= 10000, size >= 1, size * reps <= {}; \
             got n = {n}, size = {size}, reps = {reps}",
            1 << 20
        )));
    }
    let nf = n as f64;
    let rho_sq = size as f64 * (nf - 1.0) / (nf * nf);
    let draws = (size * reps) as f64;

    let mut sum_x = vec![0.0; n * n];
    let mut sumsq_x = vec![0.0; n * n];
    let mut sum_xsq = vec![0.0; n * n];
    let mut sumsq_xsq = vec![0.0; n * n];
    let mut norms = Vec::with_capacity(reps);
    let mut max_sample_norm = 0.0f64;

    for rep in 0..reps {
        let mut rng = rng::stream(seed, rep as u64);
        let mut s = vec![0.0; n * n];
        for _ in 0..size {
            let x = universe_sample(n, k, &mut rng)?;
            // ||X|| for rank-one-minus-identity: max(|x^T x - 1/n|, 1/n).
            let sample_norm = (x.norm_sq() - 1.0 / nf).abs().max(1.0 / nf);
            max_sample_norm = max_sample_norm.max(sample_norm);

            // X = x x^T - I/n is dense only on the diagonal; X^2 collapses to
            // (||x||^2 - 2/n) x x^T + I/n^2, so both moments accumulate in
            // O(k^2 + n) per draw.
            let xsq_coeff = x.norm_sq() - 2.0 / nf;
            for d in 0..n {
                let v = -1.0 / nf;
                sum_x[d * n + d] += v;
                sumsq_x[d * n + d] += v * v;
                let w = 1.0 / (nf * nf);
                sum_xsq[d * n + d] += w;
                sumsq_xsq[d * n + d] += w * w;
                s[d * n + d] += v;
            }
            for (&a, &va) in x.support().iter().zip(x.values()) {
                for (&b, &vb) in x.support().iter().zip(x.values()) {
                    let outer = va * vb;
                    s[a * n + b] += outer;
                    // Correct the diagonal pre-add: the true entry of X here is
                    // outer - 1/n (diag) or outer (off-diag).
                    let x_entry = outer - if a == b { 1.0 / nf } else { 0.0 };
                    sum_x[a * n + b] += outer;
                    sumsq_x[a * n + b] += x_entry * x_entry - if a == b { 1.0 / (nf * nf) } else { 0.0 };
                    let xsq_entry = xsq_coeff * outer + if a == b { 1.0 / (nf * nf) } else { 0.0 };
                    sum_xsq[a * n + b] += xsq_coeff * outer;
                    sumsq_xsq[a * n + b] +=
                        xsq_entry * xsq_entry - if a == b { 1.0 / (nf * nf * nf * nf) } else { 0.0 };
                }
            }
        }
        let s_mat = DenseMatrix::new(n, n, s)?;
        norms.push(operator_norm_sym(&s_mat)?);
    }

    let to_mean_and_stderr = |sum: &[f64], sumsq: &[f64]| -> Result<(DenseMatrix, DenseMatrix)> {
        let mut mean = vec![0.0; n * n];
        let mut se = vec![0.0; n * n];
        for i in 0..n * n {
            let m = sum[i] / draws;
            mean[i] = m;
            let var = ((sumsq[i] / draws) - m * m).max(0.0) * draws / (draws - 1.0);
            se[i] = (var / draws).sqrt();
        }
        Ok((DenseMatrix::new(n, n, mean)?, DenseMatrix::new(n, n, se)?))
    };
    let (mean_x, stderr_x) = to_mean_and_stderr(&sum_x, &sumsq_x)?;
    let (mean_xsq, stderr_xsq) = to_mean_and_stderr(&sum_xsq, &sumsq_xsq)?;

    let rows = (1..=5)
        .map(|i| {
            let t = i as f64 / 5.0 * 2.0 * rho_sq;
            let hits = norms.iter().filter(|&&v| v >= t).count();
            Ok(BernsteinRow {
                t,
                empirical: hits as f64 / reps as f64,
                analytic: bernstein_tail(n, rho_sq, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BernsteinReport {
        n,
        k,
        size,
        reps,
        seed,
        rho_sq,
        max_sample_norm,
        rows,
        mean_x,
        stderr_x,
        mean_xsq,
        stderr_xsq,
    })
}

fn check_universe_params(n: usize, k: usize) -> Result<()> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::Precondition(format!("k must be even and at least 2, got {k}")));
    }
    if 2 * k > n {
        return Err(Error::Precondition(format!("need 2k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn check_packing_params(n: usize, k: usize) -> Result<()> {
    check_universe_params(n, k)?;
    if 2 * k >= n {
        return Err(Error::Precondition(format!("need k < n/2, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// Advances a strictly ascending k-subset of 0..n to its lexicographic
/// successor; false once the last subset has been visited.
pub(crate) fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - (k - i) {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn sparse_vector_validation_and_sub() {
        assert!(SparseVector::new(4, vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseVector::new(4, vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseVector::new(4, vec![4], vec![1.0]).is_err());
        let x = SparseVector::new(6, vec![0, 3], vec![1.0, 2.0]).unwrap();
        let y = SparseVector::new(6, vec![3, 5], vec![2.0, -1.0]).unwrap();
        let d = x.sub(&y).unwrap();
        assert_eq!(d.support(), &[0, 5]);
        assert_eq!(d.values(), &[1.0, 1.0]);
        assert_eq!(x.sub(&x).unwrap(), SparseVector::zero(6));
        assert_eq!(x.dist_sq(&y).unwrap(), 2.0);
    }

    #[test]
    fn universe_sample_shape() {
        let mut rng = rng::master(1);
        for _ in 0..100 {
            let x = universe_sample(12, 4, &mut rng).unwrap();
            assert_eq!(x.support().len(), 4);
            assert!((x.norm_sq() - 1.0).abs() < 1e-12);
            for &v in x.values() {
                assert!((v.abs() - 0.5).abs() < 1e-15);
            }
        }
        assert!(universe_sample(12, 3, &mut rng).is_err());
        assert!(universe_sample(6, 4, &mut rng).is_err());
        // k = n/2 is allowed for sampling.
        assert!(universe_sample(8, 4, &mut rng).is_ok());
    }

    #[test]
    fn universe_enumerate_tiny() {
        let u = universe_enumerate(4, 2).unwrap();
        // C(4,2) * 2^2 = 24 points, all distinct, all unit norm.
        assert_eq!(u.len(), 24);
        let mut seen = std::collections::HashSet::new();
        for x in &u {
            assert!((x.norm_sq() - 1.0).abs() < 1e-12);
            let key: Vec<(usize, bool)> = x
                .support()
                .iter()
                .zip(x.values())
                .map(|(&j, &v)| (j, v > 0.0))
                .collect();
            assert!(seen.insert(key));
        }
    }

    #[test]
    fn universe_enumerate_caps() {
        assert!(matches!(universe_enumerate(64, 8), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn universe_sample_is_uniform() {
        // Chi-square over all 24 outcomes of the (4, 2) universe.
        let mut rng = rng::master(20260822);
        let trials = 100_000usize;
        let mut counts: HashMap<Vec<(usize, bool)>, usize> = HashMap::new();
        for _ in 0..trials {
            let x = universe_sample(4, 2, &mut rng).unwrap();
            let key = x
                .support()
                .iter()
                .zip(x.values())
                .map(|(&j, &v)| (j, v > 0.0))
                .collect();
            *counts.entry(key).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = trials as f64 / 24.0;
        let chi_sq: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 1% critical value for 23 degrees of freedom.
        assert!(chi_sq < 41.638, "chi_sq = {chi_sq}");
    }

    #[test]
    fn lemma_size_values() {
        assert_eq!(lemma_size(64, 4).unwrap(), 16);
        assert_eq!(lemma_size(96, 4).unwrap(), 24);
        assert_eq!(lemma_size(256, 4).unwrap(), 64);
        assert_eq!(lemma_size(256, 8).unwrap(), 1024);
        // (9/2)^(1/2) = 2.12..., ceiling 3.
        assert_eq!(lemma_size(9, 2).unwrap(), 3);
        assert!(lemma_size(8, 4).is_err());
        assert!(lemma_size(64, 3).is_err());
    }

    #[test]
    fn build_packing_meets_distance_floor() {
        let (p, redraws) = build_packing(64, 4, 16, 7, None).unwrap();
        assert_eq!(p.len(), 16);
        assert!(p.measured_min_dist_sq() >= 0.5 - 1e-12);
        assert_eq!(p.scale(), 1.0);
        assert_eq!(p.seed(), 7);
        assert!(redraws < 100 * 16);
        // Determinism.
        let (q, redraws2) = build_packing(64, 4, 16, 7, None).unwrap();
        assert_eq!(redraws, redraws2);
        assert_eq!(p.points(), q.points());
    }

    #[test]
    fn build_packing_exhaustion_reports() {
        // A budget smaller than the target size cannot succeed.
        let err = build_packing(10, 4, 10, 1, Some(5)).unwrap_err();
        match err {
            Error::AttemptsExhausted { attempts, placed, target } => {
                assert_eq!(attempts, 5);
                assert!(placed <= 5);
                assert_eq!(target, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn moments_of_single_point() {
        let x = SparseVector::new(4, vec![0, 2], vec![0.5f64.sqrt(), -(0.5f64.sqrt())]).unwrap();
        let m = sample_moments(4, 1.0, std::slice::from_ref(&x)).unwrap();
        assert_eq!(m.mu, x.to_dense());
        for i in 0..4 {
            for j in 0..4 {
                let want = x.to_dense()[i] * x.to_dense()[j];
                assert!((m.q.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn full_tiny_universe_has_beta_zero() {
        // Over the whole (4, 2) universe the second moment is exactly I/4.
        let u = universe_enumerate(4, 2).unwrap();
        let m = sample_moments(4, 1.0, &u).unwrap();
        assert!(m.beta < 1e-12, "beta = {}", m.beta);
        for v in &m.mu {
            assert!(v.abs() < 1e-15);
        }
        // It is also a valid packing with min squared distance 1.
        let p = PackingSet::from_points(4, 2, 1.0, 0, u).unwrap();
        assert!((p.measured_min_dist_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_shrinks_with_more_draws() {
        let mut rng = rng::master(33);
        let few: Vec<SparseVector> =
            (0..64).map(|_| universe_sample(32, 4, &mut rng).unwrap()).collect();
        let many: Vec<SparseVector> =
            (0..4096).map(|_| universe_sample(32, 4, &mut rng).unwrap()).collect();
        let beta_few = sample_moments(32, 1.0, &few).unwrap().beta;
        let beta_many = sample_moments(32, 1.0, &many).unwrap().beta;
        assert!(beta_many < beta_few, "beta {beta_few} -> {beta_many}");
    }

    #[test]
    fn scatter_identity_holds() {
        let (p, _) = build_packing(32, 4, 8, 3, None).unwrap();
        assert!(scatter_identity_check(&p).unwrap() < 1e-12);
    }

    #[test]
    fn rescaled_packing_scales_distances_not_beta() {
        let (p, _) = build_packing(32, 4, 8, 5, None).unwrap();
        let q = p.rescaled(3.0).unwrap();
        assert!((q.measured_min_dist_sq() - 9.0 * p.measured_min_dist_sq()).abs() < 1e-12);
        assert_eq!(q.measured_beta(), p.measured_beta());
        assert_eq!(q.scale(), 3.0);
        // Recomputation agrees with the cached rescale.
        let m = empirical_moments(&q).unwrap();
        assert!((m.beta - q.measured_beta()).abs() < 1e-9);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let (p, _) = build_packing(64, 4, 16, 11, None).unwrap();
        let text = p.to_json_string().unwrap();
        let q = PackingSet::from_json_str(&text).unwrap();
        assert_eq!(p.points(), q.points());
        assert_eq!(p.measured_beta(), q.measured_beta());
        assert_eq!(text, q.to_json_string().unwrap());
        // Tampered statistics are rejected.
        let bad = text.replace(
            &format!("\"measured_beta\": {}", p.measured_beta()),
            "\"measured_beta\": 0.0",
        );
        assert_ne!(bad, text);
        assert!(PackingSet::from_json_str(&bad).is_err());
    }

    #[test]
    fn p1_bound_value() {
        // size^2/2 * C(64,2)/C(64,4) * (3/4)^2 at (64, 4, 16).
        let v = p1_bound(64, 4, 16).unwrap();
        let want = 128.0 * 2016.0 / 635376.0 * 0.5625;
        assert!((v - want).abs() < 1e-12 * want, "{v} vs {want}");
    }

    #[test]
    fn p2_at_beta_min_is_half() {
        let beta = beta_min(64, 16).unwrap();
        assert!((beta - (16.0 * (256.0f64).ln()).sqrt()).abs() < 1e-12);
        let p2 = p2_bound(64, 16, beta).unwrap();
        assert!((p2 - 0.5).abs() < 1e-12, "p2 = {p2}");
    }

    #[test]
    fn bernstein_tail_examples() {
        let v = bernstein_tail(4, 1.0, 1.0).unwrap();
        assert!((v - 8.0 * (-0.25f64).exp()).abs() < 1e-12);
        assert!(bernstein_tail(4, 1.0, 2.0).is_ok());
        assert!(bernstein_tail(4, 1.0, 2.1).is_err());
        assert!(bernstein_tail(4, 1.0, -0.1).is_err());
    }

    #[test]
    fn bernstein_empirical_runs_small() {
        let r = bernstein_empirical(8, 2, 16, 50, 4).unwrap();
        assert!((r.rho_sq - 16.0 * 7.0 / 64.0).abs() < 1e-12);
        assert!((r.max_sample_norm - (1.0 - 1.0 / 8.0)).abs() < 1e-12);
        assert_eq!(r.rows.len(), 5);
        for row in &r.rows {
            assert!(row.empirical >= 0.0 && row.empirical <= 1.0);
            assert!(row.analytic > 0.0);
        }
        // Determinism across calls.
        let r2 = bernstein_empirical(8, 2, 16, 50, 4).unwrap();
        assert_eq!(r.mean_x, r2.mean_x);
    }

    #[test]
    fn bernstein_empirical_rejects_overscale() {
        assert!(bernstein_empirical(128, 2, 16, 50, 0).is_err());
        assert!(bernstein_empirical(16, 2, 1 << 16, 100, 0).is_err());
    }
}
