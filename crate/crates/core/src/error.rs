use thiserror::Error;

use crate::series::NonConvergence;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("algebra descriptor mismatch: {left} vs {right}")]
    DescriptorMismatch { left: String, right: String },

    #[error("invalid algebra descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point at modulus {modulus} is outside the convergence radius {radius}")]
    RadiusViolation { modulus: f64, radius: f64 },

    #[error("series did not converge: tail bound {} after {} terms", .0.tail_bound, .0.terms)]
    NonConvergence(Box<NonConvergence>),

    #[error("sequence of pairings is not square summable (tuple {index})")]
    NotSquareSummable { index: usize },

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("no admissible scale M: radius margin {m0} does not exceed 1")]
    NoAdmissibleScale { m0: f64 },

    #[error("scale M = {m} is not below the admissible radius M0 = {m0}")]
    ScaleOutOfRange { m: f64, m0: f64 },

    #[error("matrix is not Hermitian: defect {defect} exceeds {tolerance}")]
    NonHermitian { defect: f64, tolerance: f64 },

    #[error("index ({n}, {m}) out of range for block size {size}")]
    IndexOutOfRange { n: usize, m: usize, size: usize },

    #[error("nonzero body {body} in a soul argument")]
    NonzeroBody { body: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures where the numerics refused a certificate, as opposed to bad input.
    pub fn is_certification_failure(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::NotSquareSummable { .. }
                | Error::NoAdmissibleScale { .. }
                | Error::ScaleOutOfRange { .. }
                | Error::RadiusViolation { .. }
        )
    }
}
