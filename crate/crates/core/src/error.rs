use thiserror::Error;

use crate::objects::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure carries the violated condition and the measured magnitude.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian (max |A - A^dag| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive (eigenvalue {eigenvalue:.3e})")]
    NegativeEigenvalue { eigenvalue: f64 },

    #[error("columns are not orthonormal (max |V^dag V - I| = {deviation:.3e})")]
    NotIsometry { deviation: f64 },

    #[error("matrix is not unitary (max |U^dag U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("exponent {0} outside the allowed range")]
    InvalidExponent(f64),

    #[error("invalid state: {0}")]
    InvalidState(ValidationReport),

    #[error("invalid POVM: {0}")]
    InvalidPovm(ValidationReport),

    #[error("invalid instrument: {0}")]
    InvalidInstrument(ValidationReport),

    #[error("invalid probability distribution: {reason} (magnitude {magnitude:.3e})")]
    InvalidDistribution { reason: String, magnitude: f64 },

    #[error("observable is not sharp (max |E_x E_y - delta E_x| = {deviation:.3e})")]
    NotSharp { deviation: f64 },

    #[error("effect {index} has rank {rank}, expected {expected}")]
    EffectRank {
        index: usize,
        rank: usize,
        expected: usize,
    },

    #[error("channel is not trace preserving (max |sum K^dag K - I| = {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("pointer instrument is not repeatable (max violation {max_violation:.3e})")]
    NotRepeatable { max_violation: f64 },

    #[error("pointer instrument is incompatible with the pointer observable (deviation {deviation:.3e})")]
    Incompatible { deviation: f64 },

    #[error("outcome {outcome} has negligible probability {probability:.3e}")]
    NegligibleProbability { outcome: String, probability: f64 },

    #[error("Yanase condition violated (max commutator norm {norm:.3e})")]
    YanaseViolated { norm: f64 },

    #[error("evolution times for outcomes {first} and {second} coincide")]
    DuplicateTimes { first: usize, second: usize },

    #[error("Hamiltonian is not diagonal in the memory basis (max off-diagonal {magnitude:.3e})")]
    NotDiagonal { magnitude: f64 },

    #[error("outcome count mismatch: expected {expected}, found {found}")]
    OutcomeMismatch { expected: usize, found: usize },

    #[error("unknown outcome {0}")]
    UnknownOutcome(String),

    #[error("Hermitian eigendecomposition did not converge")]
    EigenFailure,
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
