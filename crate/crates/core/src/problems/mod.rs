//! Problem definitions: OneMax and the Set Union Knapsack Problem.

mod onemax;
mod sukp;

pub use onemax::OneMaxInstance;
pub use sukp::{generate_sukp, parse_sukp, SukpInstance};

use crate::bits::BinaryVector;

/// Non-negative, finite objective value. Larger is better.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fitness(f64);

impl Fitness {
    pub fn new(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0, "fitness must be a non-negative real");
        Fitness(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Fitness> for f64 {
    fn from(f: Fitness) -> f64 {
        f.0
    }
}

/// A binary maximisation problem the colony can run against.
pub trait Problem: Send + Sync {
    /// Stable identifier used in result tables and model provenance.
    fn id(&self) -> &str;

    /// Number of decision bits.
    fn dimension(&self) -> usize;

    /// Evaluates a candidate. Implementations may repair the candidate first;
    /// the returned vector is the one that was actually scored.
    fn evaluate(&self, candidate: BinaryVector) -> (BinaryVector, Fitness);

    /// Known optimum or best-known objective value, when available. Used to
    /// scale rewards.
    fn reference_fitness(&self) -> Option<f64> {
        None
    }

    /// Colony size convention for this problem family.
    fn default_population(&self) -> usize;
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("candidate has {got} bits but the instance has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Checked Hamming distance between two candidates.
pub fn hamming(a: &BinaryVector, b: &BinaryVector) -> Result<usize, ProblemError> {
    crate::bits::try_hamming(a, b).map_err(|e| ProblemError::DimensionMismatch {
        expected: e.left,
        got: e.right,
    })
}
