use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("enumeration of {count} terms exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("observed sequence has zero likelihood under the model")]
    ZeroLikelihood,

    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("degenerate digamma system: coefficient {index} is {value}, not below -{guard}")]
    DegenerateSystem { index: usize, value: f64, guard: f64 },

    #[error("digamma system did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("collapsed posterior in {row}: variance of component 1 is {variance}")]
    CollapsedComponent { row: String, variance: f64 },

    #[error("invalid configuration for `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
}
