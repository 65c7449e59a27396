use thiserror::Error;

/// Errors raised by model construction, evolution and the audits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MkgError {
    #[error("|phi| = {r} exceeds the validity radius {r_max}")]
    RadiusExceeded { r: f64, r_max: f64 },

    #[error("metric is degenerate at |phi| = {r}")]
    DegenerateMetric { r: f64 },

    #[error("radial hypothesis fails at r = {r}: |Q'/2r| = {lhs} > {rhs}")]
    HypothesisViolated { r: f64, lhs: f64, rhs: f64 },

    #[error("coupling is not positive definite: lambda_min(base) = {lambda_min}, |amplitude|*||mod|| = {mod_norm}")]
    IndefiniteCoupling { lambda_min: f64, mod_norm: f64 },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("non-finite value at step {step}")]
    NonFinite { step: u64 },

    #[error("trace has {rows} rows, at least 3 are needed")]
    TraceTooShort { rows: usize },

    #[error("trace sampling is not uniform at row {row}")]
    NonUniformSampling { row: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { message: String, line: usize, column: usize },

    #[error("invalid config value `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("{0}")]
    Io(String),
}

impl MkgError {
    /// CLI exit code: 2 for configuration problems, 3 for numerical aborts,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            MkgError::Parse { .. } | MkgError::Validation { .. } => 2,
            MkgError::NonFinite { .. } | MkgError::RadiusExceeded { .. } | MkgError::DegenerateMetric { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, MkgError>;

impl From<std::io::Error> for MkgError {
    fn from(e: std::io::Error) -> Self {
        MkgError::Io(e.to_string())
    }
}
