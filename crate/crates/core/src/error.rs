use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, LtrcError>;

/// Errors across sample validation, estimation, simulation and the Monte
/// Carlo harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LtrcError {
    #[error("empty sample")]
    EmptySample,

    #[error("invalid record at index {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("risk set is empty at y = {0}")]
    ZeroRiskSet(f64),

    #[error("truncation-probability evaluations disagree (max spread {max_spread:e}); this indicates an implementation bug or tied lifetimes")]
    InvarianceViolation { max_spread: f64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("no observation carries admissible weight at this evaluation point")]
    NoEffectiveData,

    #[error("root bracket failed to capture a sign change after {0} expansions")]
    BracketFailure(usize),

    #[error("plug-in score derivative is zero; variance estimate undefined")]
    DegenerateDerivative,

    #[error("fewer than {needed} effective observations ({got}); point not estimable")]
    NotEstimable { needed: usize, got: usize },

    #[error("acceptance probability too low: {accepted} of {drawn} latent draws accepted")]
    AcceptanceTooLow { accepted: usize, drawn: usize },

    #[error("rate calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("all replications failed")]
    AllReplicationsFailed,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LtrcError {
    fn from(e: std::io::Error) -> Self {
        LtrcError::Io(e.to_string())
    }
}
