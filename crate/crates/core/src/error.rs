use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("sigma must be a positive finite real, got {0}")]
    InvalidSigma(f64),

    #[error("point ({x}, {y}) lies in the excluded disk of radius {sigma}")]
    DomainViolation { x: f64, y: f64, sigma: f64 },

    #[error("non-finite field value at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("unknown field `{name}`; available: {}", available.join(", "))]
    UnknownField { name: String, available: Vec<String> },

    #[error("family mode requires an expression free of `mu` (field `{0}`)")]
    FamilyUsesMu(String),

    #[error("quadrature did not converge at r = {radius}: estimate {estimate}, error {error}")]
    QuadratureNonConvergence { radius: f64, estimate: f64, error: f64 },

    #[error("field vanishes on the circle r = {radius} near ({x}, {y}); winding number undefined")]
    ZeroSpeed { radius: f64, x: f64, y: f64 },

    #[error("scale factor vanishes or changes sign at ({x}, {y}), mu = {mu}")]
    DegenerateScale { x: f64, y: f64, mu: f64 },

    #[error("bracket endpoints not opposite: {0}")]
    Bracket(String),

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field file: {0}")]
    FieldFile(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
