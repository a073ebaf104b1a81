use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("weight {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("non-convex cost parameters: {0}")]
    NonConvex(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("vector is not majorized by the target")]
    NotMajorized,

    #[error("measure is not dominated in the convex order: {0}")]
    NotDominated(String),

    #[error("point is not in the permutahedron")]
    NotInPolytope,

    #[error("degenerate measure: {0}")]
    Degenerate(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("iteration budget exhausted after {iterations} iterations (gap {gap:e})")]
    BudgetExhausted { iterations: usize, gap: f64 },

    #[error("input: {0}")]
    Input(String),
}

impl Error {
    /// Short machine-readable kind, used by the command-line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Empty(_) => "empty",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NonPositiveWeight { .. } => "non_positive_weight",
            Error::NonFinite(_) => "non_finite",
            Error::Domain(_) => "domain",
            Error::NonConvex(_) => "non_convex",
            Error::Parse { .. } => "parse",
            Error::NotMajorized => "not_majorized",
            Error::NotDominated(_) => "not_dominated",
            Error::NotInPolytope => "not_in_polytope",
            Error::Degenerate(_) => "degenerate",
            Error::Hypothesis(_) => "hypothesis",
            Error::TooLarge(_) => "too_large",
            Error::BudgetExhausted { .. } => "budget_exhausted",
            Error::Input(_) => "input",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
