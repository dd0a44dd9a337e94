//! Lower bounds for sparse estimation, with the constructions needed to
//! certify them: packing sets, Fano-style certificates, and Monte Carlo
//! harnesses for reference estimators.

pub mod bounds;
pub mod eigen;
pub mod error;
pub mod estimators;
pub mod fano;
pub mod matrix;
pub mod packing;
pub mod rng;
pub mod svd;

pub use bounds::{BoundReport, NoiseKind, NoiseModel, Risk};
pub use error::{Error, Result};
pub use estimators::{Estimator, RiskEstimate};
pub use matrix::DenseMatrix;
pub use packing::{PackingSet, SparseVector};
