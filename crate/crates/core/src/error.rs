use alloc::string::String;

/// Errors raised by the protocol library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Operands or matrices belong to different prime fields.
    #[error("field mismatch: modulus {left} vs {right}")]
    FieldMismatch { left: u64, right: u64 },

    #[error("modulus {0} is not prime")]
    NotPrime(u64),

    #[error("division by zero")]
    DivisionByZero,

    /// Evaluation points are not pairwise distinct, or collide across sets.
    #[error("invalid evaluation set: {0}")]
    InvalidEvaluationSet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Parameters cannot be satisfied (too few workers, field too small, ...).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// Not enough evaluations to interpolate yet.
    #[error("not ready: have {have} evaluations, need {need}")]
    NotReady { have: usize, need: usize },

    /// The coefficient system is rank deficient; more symbols are needed.
    #[error("rank deficient: rank {rank} of {needed}")]
    NeedMoreSymbols { rank: usize, needed: usize },

    #[error("incomplete decode: block ({0}, {1}) missing")]
    IncompleteDecode(usize, usize),

    /// A product symbol contradicts what the decoder already resolved.
    #[error("decoder corruption: {0}")]
    Corruption(String),

    #[error("invalid state: {0}")]
    State(String),

    /// Internal invariant of the protocol violated; indicates a bug.
    #[error("protocol invariant violated: {0}")]
    Protocol(String),

    /// A closed-form rate was requested outside the assumptions it holds under.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// The exact audit would have to enumerate too many cases.
    #[error("instance too large to enumerate: {0}")]
    TooLarge(String),
}

pub type Result<T> = core::result::Result<T, Error>;
