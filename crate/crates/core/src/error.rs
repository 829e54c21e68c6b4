use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalabiError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice mismatch between operands")]
    LatticeMismatch,

    #[error("unsupported derivative order {0} (at most 4)")]
    UnsupportedOrder(usize),

    #[error("index {index} out of range for complex dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("metric is not positive definite (min eigenvalue {min_eig:e})")]
    InvalidMetric { min_eig: f64 },

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("ratio undefined for the zero field")]
    UndefinedRatio,

    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("value {value} at position {index} must be positive")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CalabiError> = std::result::Result<T, E>;
