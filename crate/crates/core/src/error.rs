use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("argument slot {slot} out of range for arity {arity}")]
    SlotOutOfRange { slot: usize, arity: usize },

    #[error("guard violated: {guard} at value {value}")]
    GuardViolation { guard: String, value: f64 },

    #[error("derivative order too high for quadrature node")]
    DerivativeOrder,

    #[error("point variant does not match carrier: {0}")]
    VariantMismatch(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid carrier: {0}")]
    InvalidCarrier(String),

    #[error("sampling budget exceeded after {attempts} attempts for sample {index}")]
    SamplingBudget { index: usize, attempts: usize },

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("point is outside the carrier")]
    NotInCarrier,

    #[error("no atlas piece covers the point")]
    Uncovered,

    #[error("atlas pieces {first} and {second} disagree by {gap} at a sampled point")]
    AtlasDisagreement { first: usize, second: usize, gap: f64 },

    #[error("sampled point not covered by any atlas piece; {hint}")]
    AtlasCoverage { hint: String },

    #[error("subcarrier is not contained in the parent carrier")]
    NotSubset,

    #[error("local element `{0}` cannot be extended from generator values; classify the assignment first")]
    LocalUnderAssignment(String),

    #[error("generator `{0}` has no assigned value")]
    Unassigned(String),

    #[error("missing projection generator for coordinate {0}")]
    MissingProjection(usize),

    #[error("no carrier sample matches the assignment")]
    FiberNotFound,

    #[error("idempotent values ({left}, {right}) are not a partition of unity")]
    IdempotentViolation { left: f64, right: f64 },

    #[error("operation needs a union space")]
    NotUnion,

    #[error("sum diverges at the zero sequence")]
    DivergentAtZero,

    #[error("truncation budget exceeded: more than {0} terms")]
    TruncationBudget(usize),

    #[error("density search exhausted after {samples} samples (best gap {best})")]
    DensityBudget { samples: usize, best: f64 },

    #[error("empty witness set")]
    EmptyWitnesses,

    #[error("probe does not converge to the candidate: {0}")]
    ProbeNotConverging(String),

    #[error("mixed pair and non-pair inputs in a superposition")]
    MixedPair,

    #[error("invalid argument: {0}")]
    Invalid(String),
}
