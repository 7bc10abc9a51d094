use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("derivative of `{generator}` in direction {direction} is not defined by the table")]
    UndefinedDerivative { generator: String, direction: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),
    #[error("symbol rank is not constant over the field: forced pivot `{pivot}`")]
    RankDrop { pivot: String },
    #[error("system is not involutive: {0}")]
    NotInvolutive(String),
    #[error("metric is singular")]
    SingularMetric,
    #[error("metric must have constant coefficients")]
    NonConstantMetric,
    #[error("reduced operator is no longer a parametrization: {0}")]
    NotAParametrizationAfterDrop(String),
    #[error("operator is not formally surjective: {0}")]
    NotSurjective(String),
    #[error("substitution does not close: {0}")]
    NonClosedSubstitution(String),
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, line: usize, col: usize },
    #[error("inconsistent derivation table: {0}")]
    InconsistentTable(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
