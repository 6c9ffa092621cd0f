use thiserror::Error;

/// Errors surfaced by the solvers, diagnostics and harness.
#[derive(Debug, Error)]
pub enum HydroError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gevrey multiplier overflow: tau*<k_max>^sigma = {exponent:.3} exceeds {limit}")]
    MultiplierOverflow { exponent: f64, limit: f64 },

    #[error("CFL violation: number {cfl:.3e} exceeds limit {limit:.3e}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("singular per-mode system at wavenumber {k}: {what}")]
    Singular { k: i64, what: String },

    #[error("iteration failed to converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("convexity margin lost: min d_yy u = {min:.6e} < required {required:.6e}")]
    ConvexityLost { min: f64, required: f64 },

    #[error("boundary-layer truncation: {0}")]
    Truncation(String),

    #[error("instability detected at t = {t:.6}: {what}")]
    Instability { t: f64, what: String },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<HydroError>,
    },
}

impl HydroError {
    /// Process exit code: 2 for usage/config problems, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HydroError::Config(_) | HydroError::InvalidParameter(_) | HydroError::Insufficient(_) => 2,
            HydroError::Context { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        HydroError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, HydroError>;
