use thiserror::Error;

/// Library-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The state magnitude exceeded the blow-up guard during time integration.
    #[error("blow-up at t = {t:.6e}: state magnitude exceeded {limit:.1e}")]
    BlowUp { t: f64, limit: f64 },

    /// A model-specific state validity check failed during time integration
    /// (for example a water depth dropping to zero or below).
    #[error("invalid state at t = {t:.6e}: {message}")]
    InvalidState { t: f64, message: String },

    /// An operation that requires output samples received an empty series.
    #[error("empty output series: {0}")]
    EmptyOutput(String),

    /// Two objects that must agree in shape or sample times do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A dense linear-algebra routine failed (non-SPD matrix, no convergence,
    /// or a residual check violation).
    #[error("linear algebra failure: {0}")]
    Linalg(String),

    /// A perturbation run along a named basis direction failed.
    #[error("perturbation run along '{label}' failed: {source}")]
    Perturbation {
        label: String,
        #[source]
        source: Box<Error>,
    },

    /// Every start of the direct minimization failed to produce a finite value.
    #[error("direct minimization failed: {0}")]
    Optim(String),

    /// A ratio or normalization had an identically zero denominator.
    #[error("zero data: {0}")]
    ZeroData(String),

    /// The requested operation is not defined for this model.
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
