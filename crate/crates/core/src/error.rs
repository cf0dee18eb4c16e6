use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cutoff {0}: need at least 2 Fock levels per mode")]
    InvalidCutoff(usize),

    #[error("invalid mode count {0}")]
    InvalidModeCount(usize),

    #[error("mode index {mode} out of range for {num_modes} modes")]
    ModeOutOfRange { mode: usize, num_modes: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.1e}")]
    Leakage { leakage: f64, tolerance: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unsupported observable order {0} (expected 1..=4)")]
    UnsupportedOrder(u8),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed state file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
