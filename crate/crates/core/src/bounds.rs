//! Minimax risk lower bounds for k-sparse estimation from y = A x + z.
//!
//! Throughout, risk means E ||xhat - x||^2 / n with expectation over
//! z ~ N(0, sigma^2 I), and the minimax risk takes the worst case over
//! k-sparse signals. Logarithms are natural everywhere.
//!
//! Three lower bounds on that risk appear here, in increasing sharpness:
//! the single-number bound k sigma^2 / ||A||_F^2, the closed-form Fano bound
//! sigma^2 ((k/4) ln(n/k) - 2) / (32 (1 + beta) ||A||_F^2), and the exact
//! supremum over known-support subproblems found by enumeration. The
//! signal-noise variant (noise on x instead of y) reduces to the same
//! machinery after whitening by the design's reduced SVD.

use crate::eigen::sym_eigen;
use crate::error::{Error, Result};
use crate::fano::{self, FanoCertificate};
use crate::matrix::DenseMatrix;
use crate::packing::{self, PackingSet};
use crate::svd::reduced_svd;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Eigenvalues of a Gram matrix at or below this fraction of the largest are
/// treated as zero, making the subproblem unidentifiable.
pub(crate) const GRAM_RANK_TOL: f64 = 1e-12;

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// A risk value: finite, or unbounded when some direction of the signal is
/// invisible to the design. Serializes as a JSON number or the string
/// "unbounded"; never as an IEEE infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Risk {
    Finite(f64),
    Unbounded,
}

impl Risk {
    pub fn finite(self) -> Option<f64> {
        match self {
            Risk::Finite(v) => Some(v),
            Risk::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Risk::Unbounded)
    }

    /// Strict "sharper lower bound than" ordering: unbounded beats finite,
    /// finite values compare numerically.
    pub fn sharper_than(self, other: Risk) -> bool {
        match (self, other) {
            (Risk::Unbounded, Risk::Unbounded) => false,
            (Risk::Unbounded, Risk::Finite(_)) => true,
            (Risk::Finite(_), Risk::Unbounded) => false,
            (Risk::Finite(a), Risk::Finite(b)) => a > b,
        }
    }
}

impl Serialize for Risk {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Risk::Finite(v) => serializer.serialize_f64(*v),
            Risk::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Risk {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(Risk::Finite(v)),
            Raw::Text(s) if s == "unbounded" => Ok(Risk::Unbounded),
            Raw::Text(s) => Err(D::Error::custom(format!("expected a number or \"unbounded\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// y = A x + z, noise added to the measurements.
    Measurement,
    /// y = A (x + z), noise folded into the signal.
    Signal,
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Precondition(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { kind, sigma })
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Precondition(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// k sigma^2 / ||A||_F^2; unbounded for the zero design.
pub fn bound_simple(a: &DenseMatrix, k: usize, sigma: f64) -> Result<Risk> {
    check_k(k, a.cols())?;
    check_sigma(sigma)?;
    let f2 = a.frobenius_norm_sq();
    if f2 == 0.0 {
        return Ok(Risk::Unbounded);
    }
    Ok(Risk::Finite(k as f64 * sigma * sigma / f2))
}

/// The closed-form Fano bound with its vacuousness flag. A vacuous bound has
/// value 0: the numerator (k/4) ln(n/k) - 2 went nonpositive, so the bound
/// says nothing at these parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFanoBound {
    pub value: f64,
    pub vacuous: bool,
}

/// sigma^2 ((k/4) ln(n/k) - 2) / (32 (1 + beta) ||A||_F^2), clamped to 0 and
/// flagged when the numerator is nonpositive. Requires k even, k < n/2,
/// beta >= 0, and a nonzero design.
pub fn bound_fano_closed(
    frobenius_sq: f64,
    n: usize,
    k: usize,
    sigma: f64,
    beta: f64,
) -> Result<ClosedFanoBound> {
    check_sigma(sigma)?;
    if k < 2 || !k.is_multiple_of(2) || 2 * k >= n {
        return Err(Error::Precondition(format!(
            "closed-form bound needs k even and k < n/2, got k = {k}, n = {n}"
        )));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Precondition(format!("beta must be nonnegative, got {beta}")));
    }
    if !(frobenius_sq.is_finite() && frobenius_sq > 0.0) {
        return Err(Error::Precondition(format!(
            "squared Frobenius norm must be positive, got {frobenius_sq}"
        )));
    }
    let numerator = k as f64 / 4.0 * (n as f64 / k as f64).ln() - 2.0;
    if numerator <= 0.0 {
        return Ok(ClosedFanoBound { value: 0.0, vacuous: true });
    }
    let value = sigma * sigma * numerator / (32.0 * (1.0 + beta) * frobenius_sq);
    Ok(ClosedFanoBound { value, vacuous: false })
}

/// Exact Bayes risk of the subproblem where the support T is known:
/// (sigma^2 / n) * sum_i 1 / lambda_i(A_T^T A_T). Unbounded when the Gram
/// matrix is numerically singular (any eigenvalue <= 1e-12 of the largest).
pub fn oracle_support_risk(a: &DenseMatrix, support: &[usize], sigma: f64) -> Result<Risk> {
    check_sigma(sigma)?;
    let sub = a.column_submatrix(support)?;
    let gram = sub.gram_columns();
    let eig = sym_eigen(&gram)?;
    Ok(spectrum_risk(&eig.eigenvalues, a.cols(), sigma))
}

fn spectrum_risk(eigenvalues: &[f64], n: usize, sigma: f64) -> Risk {
    let lambda_max = eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    if lambda_max <= 0.0 {
        return Risk::Unbounded;
    }
    let mut inv_sum = 0.0;
    for &l in eigenvalues {
        if l <= GRAM_RANK_TOL * lambda_max {
            return Risk::Unbounded;
        }
        inv_sum += 1.0 / l;
    }
    Risk::Finite(sigma * sigma / n as f64 * inv_sum)
}

/// Supremum of [`oracle_support_risk`] over every size-k support, by direct
/// enumeration in lexicographic order. Ties keep the lexicographically
/// smallest support; any unidentifiable support makes the supremum unbounded.
/// Errors without enumerating if C(n, k) exceeds `cap`.
pub fn minimax_supports_bruteforce(
    a: &DenseMatrix,
    k: usize,
    sigma: f64,
    cap: u64,
) -> Result<(Risk, Vec<usize>)> {
    let n = a.cols();
    check_k(k, n)?;
    check_sigma(sigma)?;
    let count = packing::binomial(n, k);
    if count > cap as u128 {
        return Err(Error::EnumerationCap { count, cap });
    }
    let mut support: Vec<usize> = (0..k).collect();
    let mut best: Option<(Risk, Vec<usize>)> = None;
    loop {
        let risk = oracle_support_risk(a, &support, sigma)?;
        let improves = match &best {
            None => true,
            Some((incumbent, _)) => risk.sharper_than(*incumbent),
        };
        if improves {
            best = Some((risk, support.clone()));
        }
        if risk.is_unbounded() {
            // Nothing can beat unbounded, and later ties would lose anyway.
            break;
        }
        if !packing::next_combination(&mut support, n) {
            break;
        }
    }
    Ok(best.expect("enumeration visits at least one support"))
}

/// Closed-form stand-in for the bruteforce supremum: picks the k columns of
/// smallest total squared norm (ties by index) and returns
/// k^2 sigma^2 / (n ||A_{T0}||_F^2), which the convexity of 1/x places
/// between the simple bound and the true supremum. Unbounded when those
/// columns are all zero.
pub fn worst_columns_bound(a: &DenseMatrix, k: usize, sigma: f64) -> Result<(Risk, Vec<usize>)> {
    let n = a.cols();
    check_k(k, n)?;
    check_sigma(sigma)?;
    let mut norms: Vec<(f64, usize)> = (0..n).map(|j| (a.column_norm_sq(j), j)).collect();
    norms.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut support: Vec<usize> = norms[..k].iter().map(|&(_, j)| j).collect();
    support.sort_unstable();
    let total: f64 = support.iter().map(|&j| a.column_norm_sq(j)).sum();
    if total == 0.0 {
        return Ok((Risk::Unbounded, support));
    }
    let value = (k * k) as f64 * sigma * sigma / (n as f64 * total);
    Ok((Risk::Finite(value), support))
}

/// Exact risk of the averaging oracle design: m/k repeated rows per support
/// coordinate give (k sigma^2 / m) * (k / n). Requires k | m.
pub fn averaging_oracle_risk(n: usize, k: usize, m: usize, sigma: f64) -> Result<f64> {
    check_k(k, n)?;
    check_sigma(sigma)?;
    if m == 0 || !m.is_multiple_of(k) {
        return Err(Error::Precondition(format!(
            "averaging design needs k to divide m, got k = {k}, m = {m}"
        )));
    }
    Ok(k as f64 * sigma * sigma / m as f64 * (k as f64 / n as f64))
}

/// Reference rate c0 * k sigma^2 ln(n) / m for convex-relaxation recovery
/// from well-conditioned designs. A curve to plot against, not a bound.
pub fn dantzig_reference_rate(n: usize, k: usize, m: usize, sigma: f64, c0: f64) -> f64 {
    debug_assert!(n > 1 && k >= 1 && m >= 1);
    debug_assert!(sigma > 0.0 && c0 > 0.0);
    c0 * k as f64 * sigma * sigma * (n as f64).ln() / m as f64
}

/// The measurement-noise design equivalent to signal noise on `a`: the
/// transposed right factor of the reduced SVD. Its rows are orthonormal, so
/// the whitened design has ||V^T||_F^2 = m' <= m. `v_t` is `None` exactly
/// when the design is zero (m' = 0), in which case every k-sparse direction
/// is invisible.
#[derive(Debug, Clone)]
pub struct WhitenedDesign {
    pub v_t: Option<DenseMatrix>,
    pub m_prime: usize,
}

pub fn whiten_signal_noise(a: &DenseMatrix) -> Result<WhitenedDesign> {
    let svd = reduced_svd(a)?;
    Ok(WhitenedDesign { v_t: svd.v.map(|v| v.transpose()), m_prime: svd.rank })
}

/// How to treat the enumeration step inside [`full_report`].
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    /// Override for beta in the closed-form bound. Default: the measured
    /// beta of the supplied packing, or 0 without one.
    pub beta: Option<f64>,
    /// Constant for the reference recovery rate.
    pub c0: f64,
    /// Run the bruteforce supremum when C(n, k) is at most this; `None`
    /// (or a cap that is exceeded) leaves it out of the report.
    pub bruteforce_cap: Option<u64>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { beta: None, c0: 1.0, bruteforce_cap: Some(DEFAULT_ENUMERATION_CAP) }
    }
}

/// Everything the bound subcommand reports for one design.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub sigma: f64,
    pub noise_model: NoiseKind,
    /// Rank of the design; present only under signal noise.
    pub m_prime: Option<usize>,
    pub bound_simple: Risk,
    pub bound_fano_closed: f64,
    pub fano_vacuous: bool,
    pub beta_used: f64,
    pub bruteforce_value: Option<Risk>,
    pub bruteforce_support: Option<Vec<usize>>,
    pub certificate: Option<FanoCertificate>,
    pub best_lower_bound: Risk,
    pub reference_ds_rate: f64,
    pub reference_oracle_rate: f64,
}

/// Assembles the full lower-bound report for one design.
///
/// Under signal noise the design is first whitened and every bound is
/// computed on the equivalent measurement-noise problem. The closed-form
/// Fano entry is marked vacuous (value 0) rather than erroring when its
/// preconditions cannot hold at these parameters (odd k, k >= n/2, or a
/// zero design); a supplied packing that fails the certificate
/// preconditions is still an error.
pub fn full_report(
    a: &DenseMatrix,
    k: usize,
    noise: &NoiseModel,
    packing: Option<&PackingSet>,
    opts: &ReportOptions,
) -> Result<BoundReport> {
    let (n, m) = (a.cols(), a.rows());
    check_k(k, n)?;
    let sigma = noise.sigma;

    let whitened;
    let (effective, m_prime): (Option<&DenseMatrix>, Option<usize>) = match noise.kind {
        NoiseKind::Measurement => (Some(a), None),
        NoiseKind::Signal => {
            whitened = whiten_signal_noise(a)?;
            (whitened.v_t.as_ref(), Some(whitened.m_prime))
        }
    };

    let beta_used = match opts.beta {
        Some(b) => {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Precondition(format!("beta must be nonnegative, got {b}")));
            }
            b
        }
        None => packing.map_or(0.0, |p| p.measured_beta()),
    };

    let mut report = BoundReport {
        n,
        m,
        k,
        sigma,
        noise_model: noise.kind,
        m_prime,
        bound_simple: Risk::Unbounded,
        bound_fano_closed: 0.0,
        fano_vacuous: true,
        beta_used,
        bruteforce_value: None,
        bruteforce_support: None,
        certificate: None,
        best_lower_bound: Risk::Unbounded,
        reference_ds_rate: dantzig_reference_rate(n, k, m, sigma, opts.c0),
        reference_oracle_rate: (k * k) as f64 * sigma * sigma / (m as f64 * n as f64),
    };

    let design = match effective {
        Some(d) => d,
        // Zero design under signal noise: nothing is observable.
        None => return Ok(report),
    };

    report.bound_simple = bound_simple(design, k, sigma)?;
    let f2 = design.frobenius_norm_sq();
    let closed_applicable = k >= 2 && k.is_multiple_of(2) && 2 * k < n && f2 > 0.0;
    if closed_applicable {
        let closed = bound_fano_closed(f2, n, k, sigma, beta_used)?;
        report.bound_fano_closed = closed.value;
        report.fano_vacuous = closed.vacuous;
    }

    if let Some(cap) = opts.bruteforce_cap {
        if packing::binomial(n, k) <= cap as u128 {
            let (value, support) = minimax_supports_bruteforce(design, k, sigma, cap)?;
            report.bruteforce_value = Some(value);
            report.bruteforce_support = Some(support);
        }
    }

    if let Some(p) = packing {
        report.certificate = Some(fano::certificate(design, p, sigma)?);
    }

    let mut best = report.bound_simple;
    if !report.fano_vacuous && Risk::Finite(report.bound_fano_closed).sharper_than(best) {
        best = Risk::Finite(report.bound_fano_closed);
    }
    if let Some(v) = report.bruteforce_value {
        if v.sharper_than(best) {
            best = v;
        }
    }
    if let Some(cert) = &report.certificate {
        if !cert.vacuous && Risk::Finite(cert.m_cert).sharper_than(best) {
            best = Risk::Finite(cert.m_cert);
        }
    }
    report.best_lower_bound = best;
    Ok(report)
}

impl BoundReport {
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        let num = |v: f64| serde_json::json!(v);
        obj.insert("n".into(), serde_json::json!(self.n));
        obj.insert("m".into(), serde_json::json!(self.m));
        obj.insert("k".into(), serde_json::json!(self.k));
        obj.insert("sigma".into(), num(self.sigma));
        obj.insert("log_base".into(), serde_json::json!("natural"));
        obj.insert("noise_model".into(), serde_json::to_value(self.noise_model).expect("enum"));
        if let Some(mp) = self.m_prime {
            obj.insert("m_prime".into(), serde_json::json!(mp));
        }
        obj.insert("bound_simple".into(), serde_json::to_value(self.bound_simple).expect("risk"));
        obj.insert("bound_fano_closed".into(), num(self.bound_fano_closed));
        obj.insert("fano_vacuous".into(), serde_json::json!(self.fano_vacuous));
        obj.insert("beta_used".into(), num(self.beta_used));
        obj.insert(
            "bruteforce_value".into(),
            match self.bruteforce_value {
                Some(v) => serde_json::to_value(v).expect("risk"),
                None => serde_json::Value::Null,
            },
        );
        obj.insert(
            "bruteforce_support".into(),
            match &self.bruteforce_support {
                Some(s) => serde_json::json!(s),
                None => serde_json::Value::Null,
            },
        );
        if let Some(cert) = &self.certificate {
            obj.insert("certificate".into(), cert.to_json());
        }
        obj.insert(
            "best_lower_bound".into(),
            serde_json::to_value(self.best_lower_bound).expect("risk"),
        );
        obj.insert("reference_ds_rate".into(), num(self.reference_ds_rate));
        obj.insert("reference_oracle_rate".into(), num(self.reference_oracle_rate));
        serde_json::Value::Object(obj)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_json()).map_err(|e| Error::Json(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}
