use thiserror::Error;

/// Errors raised by the simulator and the measurement post-processing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("device config: {0}")]
    Config(String),

    #[error("{field} = {value} is out of range ({expected})")]
    Range {
        field: String,
        value: f64,
        expected: &'static str,
    },

    #[error("qubit count {0} outside [1, {max}]", max = crate::device::MAX_QUBITS)]
    QubitCount(usize),

    #[error("detuning must be nonzero")]
    ZeroDetuning,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("state is not permutation symmetric (residual {0:.3e})")]
    NotSymmetric(f64),

    #[error("operator size budget exceeded: {0}")]
    Budget(String),

    #[error("propagation did not converge: {0}")]
    NonConvergence(String),

    #[error("singular confusion matrix for qubit {0} (F0 + F1 = 1)")]
    SingularConfusion(usize),

    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
