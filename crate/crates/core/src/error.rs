use thiserror::Error;

/// Errors and signals raised by the estimators and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tail index a = {0} gives an infinite mean (need a > 1)")]
    InfiniteMean(f64),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("the number of walks must be at least 2, got {0}")]
    InvalidN(usize),

    #[error("support exhausted above level {level}")]
    ExhaustedSupport { level: f64 },

    #[error("probability is zero")]
    DegenerateProbability,

    #[error("{requested} events requested but only {available} are available")]
    InsufficientDepth { requested: usize, available: usize },

    #[error("level {level} lies beyond the simulated frontier {frontier}; the count {lower_bound} is only a lower bound")]
    BeyondFrontier {
        level: f64,
        frontier: f64,
        lower_bound: usize,
    },

    #[error("survival is zero at level {0}, the Poisson time is infinite")]
    InfiniteTime(f64),

    #[error("invalid randomization scheme: {0}")]
    InvalidScheme(String),

    #[error("budget {budget} cannot pay for a single replica costing {needed}")]
    BudgetExhausted { budget: u64, needed: u64 },

    #[error("stopping rule did not fire within {0} iterations")]
    CapReached(u64),

    #[error("quadrature for q_{index} reached relative error {achieved:e}, above tolerance {tol:e}")]
    ToleranceNotMet {
        index: usize,
        tol: f64,
        achieved: f64,
        partial: Vec<f64>,
    },

    #[error("q-sequence is not decreasing at index {0}")]
    NonMonotoneQ(usize),

    #[error("i0 not found below index {0}; extend the q-sequence")]
    ExtendQSequence(usize),

    #[error("variance is infinite")]
    InfiniteVariance,

    #[error("no feasible N in the search range")]
    NoSolution,

    #[error("cannot seed a Markov chain from an empty population")]
    NoSeed,

    #[error("invalid specification `{0}`")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidN(n))
    } else {
        Ok(())
    }
}
