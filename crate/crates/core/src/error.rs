use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cutoff: dimension {dim} with {modes} mode(s) (need dim >= 2, modes in {{1, 2}})")]
    InvalidCutoff { dim: usize, modes: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not anti-Hermitian (max |M + M^dagger| = {deviation:e})")]
    NotAntiHermitian { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cutoff {dim} cannot hold {what}")]
    InsufficientCutoff { dim: usize, what: String },

    #[error(
        "cutoff {dim} leaks target norm (retained {retained:.6}, need >= {required:.6}); \
         smallest passing cutoff is {smallest}"
    )]
    LeakyCutoff {
        dim: usize,
        retained: f64,
        required: f64,
        smallest: usize,
    },

    #[error("lattice sum did not converge within radius {radius} (tail {tail:e})")]
    NonConvergent { radius: usize, tail: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
