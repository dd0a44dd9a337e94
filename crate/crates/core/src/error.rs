use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Variants split into two families: bad inputs (shape mismatches, domain
/// violations, unparsable files) and numerical failures (non-convergence,
/// exhausted rejection sampling, internal cross-checks that disagree).
/// [`Error::is_numerical`] tells the two apart for process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("column index {index} out of range for {cols} columns")]
    ColumnOutOfRange { index: usize, cols: usize },
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("CSV parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error("JSON error: {0}")]
    Json(String),
    #[error("Jacobi eigensolver failed to converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error(
        "support enumeration would visit {count} subsets, above the cap of {cap}; \
         raise the cap or use the column-norm bound"
    )]
    EnumerationCap { count: u128, cap: u64 },
    #[error(
        "packing construction gave up after {attempts} draws with {placed} of {target} \
         points placed; lower the target size or change the seed"
    )]
    AttemptsExhausted { attempts: usize, placed: usize, target: usize },
    #[error("pairwise energy routes disagree: direct {direct:e} vs moment {moment:e}")]
    EnergyMismatch { direct: f64, moment: f64 },
    #[error("certificate {certificate:e} fell below the closed-form bound {closed_form:e}")]
    CertificateOrdering { certificate: f64, closed_form: f64 },
    #[error("{failed} of {trials} trials failed, above the 1% failure budget")]
    TooManyFailures { failed: usize, trials: usize },
}

impl Error {
    /// True for failures of the computation itself, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::AttemptsExhausted { .. }
                | Error::EnergyMismatch { .. }
                | Error::CertificateOrdering { .. }
                | Error::TooManyFailures { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
