//! OneMax: maximise the number of ones. Optimum is the all-ones vector.

use super::{Fitness, Problem, ProblemError};
use crate::bits::BinaryVector;

#[derive(Debug, Clone)]
pub struct OneMaxInstance {
    id: String,
    dimension: usize,
}

impl OneMaxInstance {
    pub fn new(dimension: usize) -> Result<Self, ProblemError> {
        if dimension == 0 {
            return Err(ProblemError::InvalidParameter(
                "onemax dimension must be at least 1".into(),
            ));
        }
        Ok(OneMaxInstance {
            id: format!("onemax_{dimension}"),
            dimension,
        })
    }
}

impl Problem for OneMaxInstance {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, candidate: BinaryVector) -> (BinaryVector, Fitness) {
        assert_eq!(candidate.len(), self.dimension, "candidate dimension mismatch");
        let f = candidate.count_ones() as f64;
        (candidate, Fitness::new(f))
    }

    fn reference_fitness(&self) -> Option<f64> {
        Some(self.dimension as f64)
    }

    fn default_population(&self) -> usize {
        20
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_ones() {
        let p = OneMaxInstance::new(6).unwrap();
        let (_, f) = p.evaluate(BinaryVector::from_bitstring("101101").unwrap());
        assert_eq!(f.value(), 4.0);
        let (_, z) = p.evaluate(BinaryVector::zeros(6));
        assert_eq!(z.value(), 0.0);
        let (_, o) = p.evaluate(BinaryVector::ones(6));
        assert_eq!(o.value(), 6.0);
    }

    #[test]
    fn optimum_matches_dimension() {
        let p = OneMaxInstance::new(500).unwrap();
        assert_eq!(p.reference_fitness(), Some(500.0));
        assert_eq!(p.id(), "onemax_500");
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(OneMaxInstance::new(0).is_err());
    }
}
