//! State features describing a search situation.
//!
//! A state is a 19-component real vector. Components 1-11 describe the
//! population as a whole (diversity, improvement rates, stagnation);
//! components 12-19 describe one parent/candidate event. Every component is
//! normalised and clamped so the vector stays in a fixed box regardless of
//! problem scale: proportion- and distance-like components lie in `[0, 1]`,
//! ratio-like components in `[-1, 1]`.

use crate::bits::BinaryVector;

pub const FEATURE_DIM: usize = 19;

/// Components clamped to `[-1, 1]`; all others are clamped to `[0, 1]`.
/// (1-based component numbers.)
const SYMMETRIC: [usize; 8] = [2, 5, 6, 7, 8, 9, 14, 15];

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("population features need at least 2 individuals, got {0}")]
    PopulationTooSmall(usize),
    #[error("inconsistent snapshot: {0}")]
    Misaligned(String),
}

/// A consistent view of the population taken once per iteration, after the
/// employed phase: pre-event parents, their candidates, and the bests frozen
/// at the start of that iteration.
pub struct PopulationSnapshot {
    pub parents: Vec<BinaryVector>,
    pub children: Vec<BinaryVector>,
    pub parent_fitness: Vec<f64>,
    pub child_fitness: Vec<f64>,
    /// Global best solution at the start of the snapshot's iteration.
    pub global_best: BinaryVector,
    pub global_best_fitness: f64,
    /// Best and worst members of the population, ties to the lowest index.
    pub population_best: BinaryVector,
    pub population_worst: BinaryVector,
    pub trials: Vec<u32>,
    /// Saturation value of the trial counters (limit + 1).
    pub trial_max: u32,
    pub dimension: usize,
}

impl PopulationSnapshot {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let n = self.parents.len();
        if n < 2 {
            return Err(FeatureError::PopulationTooSmall(n));
        }
        let aligned = self.children.len() == n
            && self.parent_fitness.len() == n
            && self.child_fitness.len() == n
            && self.trials.len() == n;
        if !aligned {
            return Err(FeatureError::Misaligned(
                "parents, children, fitness and trial arrays must have equal length".into(),
            ));
        }
        let d = self.dimension;
        let dims_ok = self
            .parents
            .iter()
            .chain(&self.children)
            .chain([&self.global_best, &self.population_best, &self.population_worst])
            .all(|v| v.len() == d);
        if !dims_ok {
            return Err(FeatureError::Misaligned(format!(
                "every solution in the snapshot must have dimension {d}"
            )));
        }
        if self.trial_max == 0 {
            return Err(FeatureError::Misaligned("trial_max must be at least 1".into()));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.parents.len()
    }
}

/// The per-event half of the state: one parent, the candidate derived from it,
/// and the usage record of the operator that produced the candidate.
pub struct IndividualContext<'a> {
    pub parent: &'a BinaryVector,
    pub child: &'a BinaryVector,
    pub parent_fitness: f64,
    pub child_fitness: f64,
    pub trial: u32,
    /// Successful applications so far of the operator that produced the child.
    pub op_successes: u64,
    /// Total applications so far of that operator.
    pub op_uses: u64,
}

/// A complete 19-component state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFeatures([f64; FEATURE_DIM]);

impl StateFeatures {
    pub fn from_array(values: [f64; FEATURE_DIM]) -> Self {
        StateFeatures(values)
    }

    pub fn as_array(&self) -> &[f64; FEATURE_DIM] {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// 1-based component access.
    pub fn phi(&self, i: usize) -> f64 {
        assert!((1..=FEATURE_DIM).contains(&i));
        self.0[i - 1]
    }

    /// Documented range of a component (1-based).
    pub fn range(i: usize) -> (f64, f64) {
        if SYMMETRIC.contains(&i) {
            (-1.0, 1.0)
        } else {
            (0.0, 1.0)
        }
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn clamp_sym(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Components 1-11. `phi[0]` is component 1.
pub fn population_features(snap: &PopulationSnapshot) -> Result<[f64; 11], FeatureError> {
    snap.validate()?;
    let n = snap.len();
    let d = snap.dimension as f64;
    let pairs = (n * (n - 1) / 2) as f64;

    let mut hamming_sum = 0usize;
    let mut fitness_diff_sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            hamming_sum += snap.parents[i].hamming(&snap.parents[j]);
            fitness_diff_sum += (snap.parent_fitness[i] - snap.parent_fitness[j]).abs();
        }
    }
    let phi1 = hamming_sum as f64 / (d * pairs);

    let parent_max = snap.parent_fitness.iter().cloned().fold(f64::MIN, f64::max);
    let phi2 = ratio(fitness_diff_sum / pairs, parent_max);

    let mut improved = 0usize;
    let mut above_best = 0usize;
    let mut gain_sum = 0.0;
    for i in 0..n {
        let fp = snap.parent_fitness[i];
        let fc = snap.child_fitness[i];
        if fc > fp {
            improved += 1;
            // fc > fp >= 0, so the denominator is positive.
            gain_sum += (fc - fp) / fc;
        }
        if fc > snap.global_best_fitness {
            above_best += 1;
        }
    }
    let phi3 = improved as f64 / n as f64;
    let phi4 = above_best as f64 / n as f64;
    let phi5 = gain_sum / n as f64;

    let child_max = snap.child_fitness.iter().cloned().fold(f64::MIN, f64::max);
    let phi6 = ratio(child_max - parent_max, parent_max);

    let mut approach = 0i64;
    for i in 0..n {
        let before = snap.global_best.hamming(&snap.parents[i]) as i64;
        let after = snap.global_best.hamming(&snap.children[i]) as i64;
        approach += before - after;
    }
    let phi7 = approach as f64 / (n as f64 * d);

    let mean = snap.parent_fitness.iter().sum::<f64>() / n as f64;
    let variance = snap
        .parent_fitness
        .iter()
        .map(|f| (f - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    let std = variance.sqrt();
    let gap = snap
        .child_fitness
        .iter()
        .map(|fc| (snap.global_best_fitness - fc).abs())
        .sum::<f64>()
        / n as f64;
    let phi8 = ratio(gap, std);

    let phi10 = snap.trials.iter().map(|&t| t as f64).sum::<f64>()
        / (n as f64 * snap.trial_max as f64);

    let mut max_pair = 0usize;
    let all: Vec<&BinaryVector> = snap.parents.iter().chain(&snap.children).collect();
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            max_pair = max_pair.max(all[i].hamming(all[j]));
        }
    }
    let phi11 = max_pair as f64 / d;

    let phi4 = clamp01(phi4);
    let phi8 = clamp_sym(phi8);
    Ok([
        clamp01(phi1),
        clamp_sym(phi2),
        clamp01(phi3),
        phi4,
        clamp_sym(phi5),
        clamp_sym(phi6),
        clamp_sym(phi7),
        phi8,
        phi4 * phi8,
        clamp01(phi10),
        clamp01(phi11),
    ])
}

/// Components 12-19. `phi[0]` is component 12.
pub fn individual_features(
    snap: &PopulationSnapshot,
    ctx: &IndividualContext,
) -> Result<[f64; 8], FeatureError> {
    snap.validate()?;
    let d = snap.dimension;
    if ctx.parent.len() != d || ctx.child.len() != d {
        return Err(FeatureError::Misaligned(format!(
            "individual context must have dimension {d}"
        )));
    }
    let df = d as f64;
    let phi12 = snap.global_best.hamming(ctx.child) as f64 / df;
    let phi13 = ctx.parent.hamming(ctx.child) as f64 / df;
    let delta = ctx.child_fitness - ctx.parent_fitness;
    let phi14 = ratio(delta, snap.global_best_fitness.max(0.0));
    let phi15 = ratio(delta, ctx.child_fitness);
    let phi16 = ctx.trial as f64 / snap.trial_max as f64;
    let phi17 = ctx.child.hamming(&snap.population_worst) as f64 / df;
    let phi18 = ctx.child.hamming(&snap.population_best) as f64 / df;
    let phi19 = if ctx.op_uses == 0 {
        0.0
    } else {
        ctx.op_successes as f64 / ctx.op_uses as f64
    };
    Ok([
        clamp01(phi12),
        clamp01(phi13),
        clamp_sym(phi14),
        clamp_sym(phi15),
        clamp01(phi16),
        clamp01(phi17),
        clamp01(phi18),
        clamp01(phi19),
    ])
}

/// Concatenates the two halves into the full 19-component state.
pub fn assemble_state(
    snap: &PopulationSnapshot,
    ctx: &IndividualContext,
) -> Result<StateFeatures, FeatureError> {
    let pop = population_features(snap)?;
    let ind = individual_features(snap, ctx)?;
    Ok(combine(&pop, &ind))
}

/// Fast path when the population half has already been computed for this
/// snapshot.
pub fn combine(pop: &[f64; 11], ind: &[f64; 8]) -> StateFeatures {
    let mut out = [0.0; FEATURE_DIM];
    out[..11].copy_from_slice(pop);
    out[11..].copy_from_slice(ind);
    StateFeatures(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BinaryVector {
        BinaryVector::from_bitstring(s).unwrap()
    }

    /// N = 2, D = 4 snapshot small enough to check every component by hand.
    fn sample_snapshot() -> PopulationSnapshot {
        PopulationSnapshot {
            parents: vec![bv("1100"), bv("1110")],
            children: vec![bv("1101"), bv("0110")],
            parent_fitness: vec![2.0, 3.0],
            child_fitness: vec![3.0, 2.0],
            global_best: bv("1110"),
            global_best_fitness: 3.0,
            population_best: bv("1110"),
            population_worst: bv("1100"),
            trials: vec![1, 3],
            trial_max: 10,
            dimension: 4,
        }
    }

    #[test]
    fn population_components_match_hand_computation() {
        let phi = population_features(&sample_snapshot()).unwrap();
        let expect = [
            0.25,        // mean pairwise parent distance / D
            1.0 / 3.0,   // mean pairwise fitness gap / max parent fitness
            0.5,         // one of two children improved
            0.0,         // no child beat the global best
            1.0 / 6.0,   // relative gain of the improving child / N
            0.0,         // best child equals best parent
            -0.25,       // both children drifted away from the global best
            1.0,         // mean child gap (0.5) / parent fitness std (0.5)
            0.0,         // phi4 * phi8
            0.2,         // mean trial (2) / trial_max (10)
            0.75,        // max pairwise distance 3 / D
        ];
        for (i, (got, want)) in phi.iter().zip(expect).enumerate() {
            assert!((got - want).abs() < 1e-12, "component {} got {got} want {want}", i + 1);
        }
    }

    #[test]
    fn individual_components_match_hand_computation() {
        let snap = sample_snapshot();
        let parent = bv("1100");
        let child = bv("1101");
        let ctx = IndividualContext {
            parent: &parent,
            child: &child,
            parent_fitness: 2.0,
            child_fitness: 3.0,
            trial: 1,
            op_successes: 3,
            op_uses: 4,
        };
        let phi = individual_features(&snap, &ctx).unwrap();
        let expect = [
            0.5,       // child distance to global best
            0.25,      // parent-child distance
            1.0 / 3.0, // fitness delta / global best fitness
            1.0 / 3.0, // fitness delta / child fitness
            0.1,       // trial / trial_max
            0.25,      // child distance to population worst
            0.5,       // child distance to population best
            0.75,      // operator success share
        ];
        for (i, (got, want)) in phi.iter().zip(expect).enumerate() {
            assert!((got - want).abs() < 1e-12, "component {} got {got} want {want}", i + 12);
        }
    }

    #[test]
    fn assemble_matches_the_two_halves() {
        let snap = sample_snapshot();
        let parent = bv("1100");
        let child = bv("1101");
        let ctx = IndividualContext {
            parent: &parent,
            child: &child,
            parent_fitness: 2.0,
            child_fitness: 3.0,
            trial: 1,
            op_successes: 3,
            op_uses: 4,
        };
        let full = assemble_state(&snap, &ctx).unwrap();
        let pop = population_features(&snap).unwrap();
        let ind = individual_features(&snap, &ctx).unwrap();
        assert_eq!(full, combine(&pop, &ind));
        assert_eq!(full.phi(1), pop[0]);
        assert_eq!(full.phi(11), pop[10]);
        assert_eq!(full.phi(12), ind[0]);
        assert_eq!(full.phi(19), ind[7]);
    }

    #[test]
    fn degenerate_population_yields_finite_zeros() {
        // Identical individuals with zero fitness: every guarded ratio is 0.
        let snap = PopulationSnapshot {
            parents: vec![bv("0000"); 3],
            children: vec![bv("0000"); 3],
            parent_fitness: vec![0.0; 3],
            child_fitness: vec![0.0; 3],
            global_best: bv("0000"),
            global_best_fitness: 0.0,
            population_best: bv("0000"),
            population_worst: bv("0000"),
            trials: vec![0; 3],
            trial_max: 1,
            dimension: 4,
        };
        let phi = population_features(&snap).unwrap();
        assert!(phi.iter().all(|x| x.is_finite()));
        assert_eq!(phi, [0.0; 11]);
        let parent = bv("0000");
        let child = bv("0000");
        let ctx = IndividualContext {
            parent: &parent,
            child: &child,
            parent_fitness: 0.0,
            child_fitness: 0.0,
            trial: 0,
            op_successes: 0,
            op_uses: 0,
        };
        let ind = individual_features(&snap, &ctx).unwrap();
        assert!(ind.iter().all(|x| x.is_finite()));
        assert_eq!(ind, [0.0; 8]);
    }

    #[test]
    fn rejects_single_individual() {
        let snap = PopulationSnapshot {
            parents: vec![bv("0000")],
            children: vec![bv("0000")],
            parent_fitness: vec![0.0],
            child_fitness: vec![0.0],
            global_best: bv("0000"),
            global_best_fitness: 0.0,
            population_best: bv("0000"),
            population_worst: bv("0000"),
            trials: vec![0],
            trial_max: 1,
            dimension: 4,
        };
        assert!(matches!(
            population_features(&snap),
            Err(FeatureError::PopulationTooSmall(1))
        ));
    }

    #[test]
    fn rejects_misaligned_arrays() {
        let mut snap = sample_snapshot();
        snap.child_fitness.pop();
        assert!(matches!(
            population_features(&snap),
            Err(FeatureError::Misaligned(_))
        ));
        let mut snap = sample_snapshot();
        snap.children[0] = bv("110");
        assert!(population_features(&snap).is_err());
    }

    #[test]
    fn event_order_does_not_change_population_components() {
        let mut snap = sample_snapshot();
        let base = population_features(&snap).unwrap();
        // Swap the two (parent, child) events wholesale.
        snap.parents.swap(0, 1);
        snap.children.swap(0, 1);
        snap.parent_fitness.swap(0, 1);
        snap.child_fitness.swap(0, 1);
        snap.trials.swap(0, 1);
        let swapped = population_features(&snap).unwrap();
        for (a, b) in base.iter().zip(swapped) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn components_stay_in_documented_ranges() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = 5;
            let d = 16;
            let rand_vecs = |rng: &mut rand_chacha::ChaCha8Rng| {
                (0..n).map(|_| BinaryVector::random(d, rng)).collect::<Vec<_>>()
            };
            let parents = rand_vecs(&mut rng);
            let children = rand_vecs(&mut rng);
            let fit = |rng: &mut rand_chacha::ChaCha8Rng| {
                (0..n).map(|_| rand::Rng::random_range(rng, 0.0..50.0)).collect::<Vec<f64>>()
            };
            let snap = PopulationSnapshot {
                parents: parents.clone(),
                children: children.clone(),
                parent_fitness: fit(&mut rng),
                child_fitness: fit(&mut rng),
                global_best: BinaryVector::random(d, &mut rng),
                global_best_fitness: 55.0,
                population_best: parents[0].clone(),
                population_worst: parents[1].clone(),
                trials: vec![0, 1, 2, 3, 50],
                trial_max: 21,
                dimension: d,
            };
            let ctx = IndividualContext {
                parent: &parents[2],
                child: &children[2],
                parent_fitness: 10.0,
                child_fitness: 60.0,
                trial: 50,
                op_successes: 5,
                op_uses: 9,
            };
            let state = assemble_state(&snap, &ctx).unwrap();
            for i in 1..=FEATURE_DIM {
                let (lo, hi) = StateFeatures::range(i);
                let v = state.phi(i);
                assert!(v.is_finite() && v >= lo && v <= hi, "component {i} = {v}");
            }
        }
    }
}
