use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A word-space point ran out of sampled symbols under iteration.
    #[error("shift buffer exhausted: {steps} steps requested, {available} available")]
    BufferExhausted { steps: usize, available: usize },

    /// The adic rewrite does not resolve within the truncated word; the
    /// point sits in (or too close to) the excluded null set at this depth.
    #[error("adic rewrite does not resolve within depth {depth}")]
    DomainOverflow { depth: usize },

    /// Word metrics require operands of equal length.
    #[error("word length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A metric was evaluated on points from a different space.
    #[error("point kind mismatch: {metric} cannot compare {left} and {right}")]
    PointKindMismatch {
        metric: String,
        left: &'static str,
        right: &'static str,
    },

    /// Instance exceeds a configured size cap.
    #[error("size cap exceeded: {actual} > {cap} ({what})")]
    SizeCap {
        what: &'static str,
        actual: usize,
        cap: usize,
    },

    /// Weights are negative or do not sum to one.
    #[error("invalid measure: {reason}")]
    InvalidMeasure { reason: String },

    /// ε must lie strictly between 0 and 1.
    #[error("invalid eps {eps}: must satisfy 0 < eps < 1")]
    InvalidEps { eps: f64 },

    /// The supplied net covers too little mass for the transport bound.
    #[error("not a cover: net covers {covered:.6} < required {required:.6} mass")]
    NotACover { covered: f64, required: f64 },

    /// Growth classification needs a longer schedule.
    #[error("too few points: {points} (need at least {min})")]
    TooFewPoints { points: usize, min: usize },

    /// No input verdicts / empty collection where at least one is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// The transport solver failed to terminate cleanly.
    #[error("transport solver: {0}")]
    Solver(String),

    /// Catch-all for invalid arguments.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
