//! Adaptive operator selection.
//!
//! Each base operator is split into one proxy per run section (early/late
//! phases of the iteration budget), giving `4 * sections` selectable entries.
//! An entry carries a Q value — a temporal-difference estimate of the reward
//! an application earns under current conditions — and a cluster centre, the
//! running mean of the states in which the entry previously produced an
//! improvement. Selection is epsilon-greedy on the Q values of the four
//! entries active in the current section; equal Q values (notably in a cold
//! model) are resolved towards the entry whose centre sits nearest the
//! current state, then towards the lower pool index.

use crate::features::{StateFeatures, FEATURE_DIM};
use crate::operators::BaseOp;
use rand::Rng;

/// Selection and learning constants.
#[derive(Debug, Clone, PartialEq)]
pub struct RlParams {
    /// Exploration probability.
    pub epsilon: f64,
    /// TD step size.
    pub learning_rate: f64,
    /// Discount factor.
    pub discount: f64,
    /// Number of run sections (proxy sets).
    pub sections: usize,
    /// When false, selection still works but no counter, centre or Q value
    /// changes; the model is frozen.
    pub training: bool,
}

impl Default for RlParams {
    fn default() -> Self {
        RlParams {
            epsilon: 0.2,
            learning_rate: 0.1,
            discount: 0.9,
            sections: 5,
            training: true,
        }
    }
}

impl RlParams {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(SelectorError::InvalidParameter(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(SelectorError::InvalidParameter(format!(
                "learning rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(SelectorError::InvalidParameter(format!(
                "discount must lie in [0, 1], got {}",
                self.discount
            )));
        }
        if self.sections == 0 {
            return Err(SelectorError::InvalidParameter(
                "section count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SelectorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// One selectable proxy: a base operator restricted to one run section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorId {
    pub base: BaseOp,
    pub section: usize,
}

impl OperatorId {
    pub fn flat(&self, sections: usize) -> usize {
        self.base.index() * sections + self.section
    }
}

/// Learned state of one proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct CentreEntry {
    /// Running mean of the states in which this proxy earned a positive
    /// reward.
    pub centre: Vec<f64>,
    /// Number of positive-reward applications (the centre averages these).
    pub successes: u64,
    /// Total number of times the proxy was selected while training.
    pub usage: u64,
    pub q: f64,
    /// Cumulative reward.
    pub credit: f64,
}

impl CentreEntry {
    fn zero(feature_dim: usize) -> Self {
        CentreEntry {
            centre: vec![0.0; feature_dim],
            successes: 0,
            usage: 0,
            q: 0.0,
            credit: 0.0,
        }
    }
}

/// The outcome of one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub chosen: OperatorId,
    /// True when the epsilon branch picked uniformly instead of the argmax.
    pub was_random: bool,
    /// Q values of the four base operators in the active section, pool order.
    pub scores: [f64; 4],
}

/// Aggregated view of one base operator across all sections.
#[derive(Debug, Clone, PartialEq)]
pub struct OpCredit {
    pub op: BaseOp,
    pub usage: u64,
    pub successes: u64,
    pub credit: f64,
    pub mean_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorModel {
    feature_dim: usize,
    sections: usize,
    entries: Vec<CentreEntry>,
}

/// Maps an iteration to its run section: section `s` covers iterations
/// `[s*T/M, (s+1)*T/M)`.
pub fn subspace_index(iteration: usize, max_iterations: usize, sections: usize) -> usize {
    debug_assert!(sections >= 1 && max_iterations >= 1);
    (iteration * sections / max_iterations).min(sections - 1)
}

impl SelectorModel {
    pub fn new(feature_dim: usize, sections: usize) -> Self {
        SelectorModel {
            feature_dim,
            sections,
            entries: (0..BaseOp::ALL.len() * sections)
                .map(|_| CentreEntry::zero(feature_dim))
                .collect(),
        }
    }

    /// Fresh model with the crate's feature dimension.
    pub fn fresh(sections: usize) -> Self {
        SelectorModel::new(FEATURE_DIM, sections)
    }

    pub fn from_entries(
        feature_dim: usize,
        sections: usize,
        entries: Vec<CentreEntry>,
    ) -> Result<Self, SelectorError> {
        if sections == 0 {
            return Err(SelectorError::ShapeMismatch("section count must be at least 1".into()));
        }
        if entries.len() != BaseOp::ALL.len() * sections {
            return Err(SelectorError::ShapeMismatch(format!(
                "expected {} entries, got {}",
                BaseOp::ALL.len() * sections,
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| e.centre.len() != feature_dim) {
            return Err(SelectorError::ShapeMismatch(format!(
                "centre has {} components, expected {feature_dim}",
                e.centre.len()
            )));
        }
        Ok(SelectorModel {
            feature_dim,
            sections,
            entries,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn sections(&self) -> usize {
        self.sections
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, flat: usize) -> &CentreEntry {
        &self.entries[flat]
    }

    pub fn entries(&self) -> &[CentreEntry] {
        &self.entries
    }

    /// Selection score of an entry: its Q value, the learned estimate of the
    /// reward one application earns. The state argument participates only in
    /// tie-breaking (see [`SelectorModel::select`]) but is kept in the
    /// signature so callers always pair a score with the state it was asked
    /// for.
    pub fn score(&self, _state: &StateFeatures, id: OperatorId) -> f64 {
        self.entries[id.flat(self.sections)].q
    }

    fn distance_flat(&self, flat: usize, state: &[f64]) -> f64 {
        assert_eq!(state.len(), self.feature_dim, "state dimension mismatch");
        let centre = &self.entries[flat].centre;
        let dist2: f64 = state
            .iter()
            .zip(centre)
            .map(|(x, c)| (x - c) * (x - c))
            .sum();
        dist2.sqrt()
    }

    /// Epsilon-greedy selection among the four base operators of the current
    /// section. Draws one uniform number; on exploration it draws one more to
    /// pick the operator. Greedy ties prefer the entry whose centre lies
    /// nearest the current state (the best-fitting success history), then the
    /// lower pool index.
    pub fn select(
        &mut self,
        state: &StateFeatures,
        iteration: usize,
        max_iterations: usize,
        params: &RlParams,
        rng: &mut impl Rng,
    ) -> Decision {
        let section = subspace_index(iteration, max_iterations, self.sections);
        let mut scores = [0.0f64; 4];
        for (b, score) in scores.iter_mut().enumerate() {
            *score = self.entries[b * self.sections + section].q;
        }
        let draw = rng.random::<f64>();
        let (base_index, was_random) = if draw >= params.epsilon {
            let mut best = 0usize;
            for b in 1..4 {
                let better = scores[b] > scores[best]
                    || (scores[b] == scores[best]
                        && self.distance_flat(b * self.sections + section, state.as_slice())
                            < self.distance_flat(best * self.sections + section, state.as_slice()));
                if better {
                    best = b;
                }
            }
            (best, false)
        } else {
            (rng.random_range(0..4), true)
        };
        let chosen = OperatorId {
            base: BaseOp::from_index(base_index).unwrap(),
            section,
        };
        if params.training {
            self.entries[chosen.flat(self.sections)].usage += 1;
        }
        Decision {
            chosen,
            was_random,
            scores,
        }
    }

    /// One TD update for the chosen proxy, plus centre/credit bookkeeping.
    /// No-op when training is disabled. The follow-up state is accepted so
    /// call sites always report the full transition; the bootstrap itself
    /// needs only the section, which within one event is the chosen entry's
    /// own.
    pub fn learn(
        &mut self,
        chosen: OperatorId,
        state: &StateFeatures,
        reward: f64,
        _next_state: &StateFeatures,
        params: &RlParams,
    ) {
        if !params.training {
            return;
        }
        // Standard Q-learning bootstrap: the best Q among the actions that
        // will be available at the next decision, i.e. the same section's
        // four entries.
        let bootstrap = (0..4)
            .map(|b| self.entries[b * self.sections + chosen.section].q)
            .fold(f64::MIN, f64::max);
        let flat = chosen.flat(self.sections);
        let entry = &mut self.entries[flat];
        entry.q += params.learning_rate * (reward + params.discount * bootstrap - entry.q);
        entry.credit += reward;
        if reward > 0.0 {
            entry.successes += 1;
            let n = entry.successes as f64;
            for (c, x) in entry.centre.iter_mut().zip(state.as_slice()) {
                *c += (x - *c) / n;
            }
        }
    }

    /// (successes, uses) of a base operator summed over sections.
    pub fn base_stats(&self, op: BaseOp) -> (u64, u64) {
        let mut successes = 0;
        let mut uses = 0;
        for s in 0..self.sections {
            let e = &self.entries[op.index() * self.sections + s];
            successes += e.successes;
            uses += e.usage;
        }
        (successes, uses)
    }

    /// Per-base-operator usage, success, credit and mean Q, pool order.
    pub fn snapshot_credit(&self) -> Vec<OpCredit> {
        BaseOp::ALL
            .iter()
            .map(|&op| {
                let (successes, usage) = self.base_stats(op);
                let (credit, q_sum) = (0..self.sections)
                    .map(|s| &self.entries[op.index() * self.sections + s])
                    .fold((0.0, 0.0), |(c, q), e| (c + e.credit, q + e.q));
                OpCredit {
                    op,
                    usage,
                    successes,
                    credit,
                    mean_q: q_sum / self.sections as f64,
                }
            })
            .collect()
    }
}

/// Improvement reward scaled by how far the reference optimum sits above the
/// candidate: `(child - parent) * reference / child`, 0 for a zero-fitness
/// child.
pub fn reward(parent_fitness: f64, child_fitness: f64, reference_fitness: f64) -> f64 {
    if child_fitness == 0.0 {
        0.0
    } else {
        (child_fitness - parent_fitness) * reference_fitness / child_fitness
    }
}
