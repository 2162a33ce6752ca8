use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid quantum number: {0}")]
    InvalidQuantumNumber(String),
    #[error("invalid state (n={n}, kappa={kappa}): {reason}")]
    InvalidState { n: u32, kappa: i32, reason: String },
    #[error("subcritical coupling required: gamma={gamma} must be below |kappa|={kappa}")]
    Subcritical { gamma: f64, kappa: i32 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("potential evaluation failed at r={r}: {detail}")]
    PotentialEvaluation { r: f64, detail: String },
    #[error("eigensolver failed for {size}x{size} matrix: {detail}")]
    Solver { size: usize, detail: String },
    #[error("degenerate discretization: {0}")]
    DegenerateDiscretization(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("coupling too large: {0}")]
    CouplingTooLarge(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("internal consistency violated: {0}")]
    Consistency(String),
    #[error("domain too small: {0}")]
    DomainTooSmall(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("cache format error: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
