use std::path::PathBuf;

/// Errors raised anywhere in the workbench.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ||M - M^dagger||_F = {defect:e} exceeds {tolerance:e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("action index {index} out of range for an action set of size {size}")]
    ActionOutOfRange { index: usize, size: usize },

    #[error("invalid action {index} at protocol position {position} (action set size {size})")]
    InvalidProtocolAction {
        position: usize,
        index: usize,
        size: usize,
    },

    #[error("protocol of length {actual} exceeds the horizon of {horizon} steps")]
    ProtocolTooLong { actual: usize, horizon: usize },

    #[error("fidelity {0} lies outside [0, 1]")]
    FidelityOutOfRange(f64),

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("episode already finished after {0} steps; call reset first")]
    EpisodeFinished(usize),

    #[error("network architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("replay buffer holds {available} experiences, {requested} requested")]
    ReplayUnderfilled { available: usize, requested: usize },

    #[error("search space of {required} protocols exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("training diverged at episode {episode}: {reason}")]
    Diverged { episode: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
