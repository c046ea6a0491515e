use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("conditioning event {0} has probability zero and no conditional charge was supplied")]
    NullConditioningEvent(String),
    #[error("result is not structured: {0}")]
    UnstructuredResult(String),
    #[error("series does not converge: {0}")]
    DivergentCombination(String),
    #[error("degenerate interval ({0}, {0})")]
    DegenerateInterval(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("forecast system has no entries")]
    EmptySystem,
    #[error("rule is not a positive multiple of the Brier score: {0}")]
    UnsupportedRule(String),
    #[error("conditional previsions are conglomerable; no inf-side or sup-side gap")]
    NotNonconglomerable,
    #[error("rules fail the uniform similarity condition: {0}")]
    SimilarityViolated(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unresolved {kind} reference `{id}`")]
    Unresolved { kind: &'static str, id: String },
    #[error("symbolic horizon {0} exceeds the evaluation limit")]
    HorizonTooLarge(u64),
}

impl Error {
    /// Short machine-readable name, used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NullConditioningEvent(_) => "null_conditioning_event",
            Error::UnstructuredResult(_) => "unstructured_result",
            Error::DivergentCombination(_) => "divergent_combination",
            Error::DegenerateInterval(_) => "degenerate_interval",
            Error::OutOfRange(_) => "out_of_range",
            Error::EmptySystem => "empty_system",
            Error::UnsupportedRule(_) => "unsupported_rule",
            Error::NotNonconglomerable => "not_nonconglomerable",
            Error::SimilarityViolated(_) => "similarity_violated",
            Error::PreconditionFailed(_) => "precondition_failed",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::DivisionByZero => "division_by_zero",
            Error::Invalid(_) => "invalid",
            Error::Unresolved { .. } => "unresolved",
            Error::HorizonTooLarge(_) => "horizon_too_large",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
