use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by origin. [`Error::is_input_error`] separates
/// user-input problems from numerical failures, which the CLI maps to
/// different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid system specification: {0}")]
    InvalidSpec(String),
    #[error("index {index} out of range for local dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("multi-index has length {got}, expected {expected}")]
    IndexLength { got: usize, expected: usize },
    #[error("fermionic multi-index repeats index {0}")]
    RepeatedFermionIndex(usize),
    #[error("tensor has no nonzero entry")]
    AllZero,
    #[error("mode set must be a nonempty proper subset of the factors")]
    EmptyOrFullModeSet,
    #[error("system specifications differ: {0}")]
    SpecMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("injection {0} is not of full column rank")]
    RankDeficientInjection(usize),
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("label '{label}' has length {got}, expected {expected}")]
    LabelLengthMismatch { label: String, got: usize, expected: usize },
    #[error("digit {digit} in label '{label}' exceeds local dimension {dim}")]
    DigitOutOfRange { label: String, digit: usize, dim: usize },
    #[error("fermionic label '{0}' repeats a digit")]
    FermionRepeatedDigit(String),
    #[error("fermionic local vectors are linearly dependent")]
    DependentFermionVectors,
    #[error("monomial has no positive exponent")]
    ZeroMonomial,
    #[error("monomials {0} and {1} share a variable")]
    NotCoprime(usize, usize),
    #[error("monomial degrees differ: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("bad curve parameters: {0}")]
    BadParams(String),
    #[error("curve parameter must be nonzero")]
    ZeroParameter,
    #[error("malformed tensor document: {0}")]
    Format(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
