use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),

    #[error("subspace of dimension {requested} exceeds the configured cap of {cap}")]
    CapacityExceeded { requested: u128, cap: usize },

    #[error("bit strings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("state {0} is not a member of the basis")]
    NotInBasis(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected {expected} marked sites, got {found}")]
    WrongMarkCount { expected: usize, found: usize },

    #[error("states are at Hamming distance {0}, not an edge of the state graph")]
    NotAnEdge(u32),

    #[error("reduced engine requires all-to-all coupling")]
    EngineMismatch,

    #[error("Krylov propagation failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("maximum at tau = {tau} sits on the boundary of the search window [0, {window}]")]
    WindowTooSmall { tau: f64, window: f64 },

    #[error("repetition count exceeds cap of {cap} (fidelity {fidelity} too small)")]
    Diverges { fidelity: f64, cap: u64 },
}
