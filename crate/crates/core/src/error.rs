use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input is rank-deficient or otherwise degenerate where the
    /// construction needs full rank.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Triangular factor with a nonpositive (or non-real) diagonal entry.
    #[error("invalid factor: {0}")]
    InvalidFactor(String),

    /// A caller-checked precondition does not hold on the given data.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// Data that should describe a valid instance fails a consistency gate.
    #[error("inconsistent instance: {0}")]
    InconsistentInstance(String),

    /// The angle invariant |delta| is too close to 1; the frame formulas
    /// divide by delta' and would blow up.
    #[error("near-degenerate frame angle: {0}")]
    NearDegenerate(String),

    /// A right-hand side is not in the range of the operator it must be
    /// solved against (Kählerization hypothesis violation).
    #[error("range consistency failure: {0}")]
    RangeConsistency(String),

    /// The seeded generator exhausted its retry budget.
    #[error("generation failed (seed {seed}): {reason}")]
    GenerationFailed { seed: u64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
