//! The bee colony main loop.
//!
//! Each iteration runs an employed phase (one operator event per bee), an
//! onlooker phase (events on fitness-proportionally chosen bees) and a scout
//! phase (at most one exhausted bee is re-seeded). Operator events consult the
//! selector with the current state, apply the chosen operator against a random
//! neighbour, replace greedily and feed the observed reward back.

use crate::bits::BinaryVector;
use crate::features::{self, IndividualContext, PopulationSnapshot, StateFeatures, FEATURE_DIM};
use crate::operators::{self, BaseOp, OperatorContext, OperatorParams};
use crate::problems::Problem;
use crate::selector::{reward, RlParams, SelectorModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum ColonyError {
    #[error("invalid colony configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColonyConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    /// A bee whose trial counter exceeds this limit becomes a scout.
    pub trial_limit: u32,
    pub seed: u64,
}

impl ColonyConfig {
    pub fn new(
        population_size: usize,
        max_iterations: usize,
        trial_limit: u32,
        seed: u64,
    ) -> Result<Self, ColonyError> {
        let config = ColonyConfig {
            population_size,
            max_iterations,
            trial_limit,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ColonyError> {
        if self.population_size < 2 {
            return Err(ColonyError::InvalidConfig(format!(
                "population size must be at least 2, got {}",
                self.population_size
            )));
        }
        if self.max_iterations == 0 {
            return Err(ColonyError::InvalidConfig("iteration budget must be at least 1".into()));
        }
        if self.trial_limit == 0 {
            return Err(ColonyError::InvalidConfig("trial limit must be at least 1".into()));
        }
        Ok(())
    }

    /// Default limit scaling: `N * D / 10`, kept within `[10, 200]`.
    pub fn default_trial_limit(population_size: usize, dimension: usize) -> u32 {
        ((population_size * dimension / 10).min(200) as u32).max(10)
    }
}

/// One food source and the memory of its most recent operator event.
#[derive(Debug, Clone)]
pub struct Bee {
    pub solution: BinaryVector,
    pub fitness: f64,
    /// Consecutive failed improvement attempts, saturating at `limit + 1`.
    pub trial: u32,
    pub last_child: BinaryVector,
    pub last_child_fitness: f64,
    pub last_op: Option<BaseOp>,
}

impl Bee {
    fn fresh(solution: BinaryVector, fitness: f64) -> Self {
        Bee {
            last_child: solution.clone(),
            last_child_fitness: fitness,
            solution,
            fitness,
            trial: 0,
            last_op: None,
        }
    }
}

/// Per-base-operator counters for one trace row. `usage`, `successes` and
/// `credit` are cumulative over the run; `reward` is the sum collected during
/// the row's iteration alone.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OpTraceRow {
    pub usage: u64,
    pub successes: u64,
    pub credit: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    pub best_fitness: f64,
    /// Pool order: flip, n, ibin, nb.
    pub ops: [OpTraceRow; 4],
    /// Last state assembled during the iteration, when feature tracing is on.
    pub state: Option<[f64; FEATURE_DIM]>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub instance_id: String,
    pub variant: String,
    pub seed: u64,
    pub best_fitness: f64,
    pub best_solution: BinaryVector,
    pub trace: Vec<IterationTrace>,
    pub wall_time: Duration,
}

/// Fitness-proportional onlooker distribution; uniform when the population
/// fitness sums to zero.
pub fn onlooker_probabilities(fitness: &[f64]) -> Vec<f64> {
    let total: f64 = fitness.iter().sum();
    if total <= 0.0 {
        vec![1.0 / fitness.len() as f64; fitness.len()]
    } else {
        fitness.iter().map(|f| f / total).collect()
    }
}

fn roulette(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Re-seeds the first bee whose trial counter exceeded the limit, if any.
/// At most one bee is replaced per call.
pub fn scout_phase(
    bees: &mut [Bee],
    trial_limit: u32,
    problem: &dyn Problem,
    global_best: &mut (BinaryVector, f64),
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    let i = bees.iter().position(|b| b.trial > trial_limit)?;
    let (x, f) = problem.evaluate(BinaryVector::random(problem.dimension(), rng));
    bees[i] = Bee::fresh(x, f.value());
    if bees[i].fitness > global_best.1 {
        global_best.0 = bees[i].solution.clone();
        global_best.1 = bees[i].fitness;
    }
    Some(i)
}

fn best_worst_indices(bees: &[Bee]) -> (usize, usize) {
    let mut best = 0;
    let mut worst = 0;
    for (i, b) in bees.iter().enumerate() {
        if b.fitness > bees[best].fitness {
            best = i;
        }
        if b.fitness < bees[worst].fitness {
            worst = i;
        }
    }
    (best, worst)
}

#[allow(clippy::too_many_arguments)]
fn build_snapshot(
    bees: &[Bee],
    parents: Vec<BinaryVector>,
    parent_fitness: Vec<f64>,
    children: Vec<BinaryVector>,
    child_fitness: Vec<f64>,
    frozen_best: &(BinaryVector, f64),
    trial_max: u32,
    dimension: usize,
) -> PopulationSnapshot {
    let (bi, wi) = best_worst_indices(bees);
    PopulationSnapshot {
        parents,
        children,
        parent_fitness,
        child_fitness,
        global_best: frozen_best.0.clone(),
        global_best_fitness: frozen_best.1,
        population_best: bees[bi].solution.clone(),
        population_worst: bees[wi].solution.clone(),
        trials: bees.iter().map(|b| b.trial).collect(),
        trial_max,
        dimension,
    }
}

struct EventOutput {
    child: BinaryVector,
    child_fitness: f64,
}

#[allow(clippy::too_many_arguments)]
fn operator_event(
    i: usize,
    bees: &mut [Bee],
    problem: &dyn Problem,
    snap: &PopulationSnapshot,
    pop_phi: &[f64; 11],
    model: &mut SelectorModel,
    rl: &RlParams,
    op_params: &OperatorParams,
    global_best: &mut (BinaryVector, f64),
    iteration: usize,
    max_iterations: usize,
    trial_limit: u32,
    rng: &mut ChaCha8Rng,
    totals: &mut [OpTraceRow; 4],
    iter_reward: &mut [f64; 4],
    last_state: &mut Option<StateFeatures>,
) -> Result<EventOutput, ColonyError> {
    // State before the move, individual part taken from the bee's last event.
    let (sc, tc) = bees[i]
        .last_op
        .map(|op| model.base_stats(op))
        .unwrap_or((0, 0));
    let state = {
        let bee = &bees[i];
        let ctx = IndividualContext {
            parent: &bee.solution,
            child: &bee.last_child,
            parent_fitness: bee.fitness,
            child_fitness: bee.last_child_fitness,
            trial: bee.trial,
            op_successes: sc,
            op_uses: tc,
        };
        features::combine(pop_phi, &features::individual_features(snap, &ctx)?)
    };
    let decision = model.select(&state, iteration, max_iterations, rl, rng);
    let base = decision.chosen.base;

    let mut j = rng.random_range(0..bees.len() - 1);
    if j >= i {
        j += 1;
    }
    let parent = bees[i].solution.clone();
    let parent_fitness = bees[i].fitness;
    let candidate = {
        let ctx = OperatorContext {
            current: &bees[i].solution,
            neighbor: &bees[j].solution,
            global_best: &global_best.0,
            iteration,
            max_iterations,
        };
        operators::apply(base, &ctx, op_params, rng)
    };
    let (child, fitness) = problem.evaluate(candidate);
    let child_fitness = fitness.value();
    let reference = problem
        .reference_fitness()
        .unwrap_or_else(|| global_best.1.max(1.0));
    let r = reward(parent_fitness, child_fitness, reference);

    let b = base.index();
    totals[b].usage += 1;
    if r > 0.0 {
        totals[b].successes += 1;
    }
    totals[b].credit += r;
    iter_reward[b] += r;

    let bee = &mut bees[i];
    if child_fitness > bee.fitness {
        bee.solution = child.clone();
        bee.fitness = child_fitness;
        bee.trial = 0;
    } else {
        bee.trial = (bee.trial + 1).min(trial_limit + 1);
    }
    bee.last_child = child.clone();
    bee.last_child_fitness = child_fitness;
    bee.last_op = Some(base);
    let trial_after = bee.trial;
    if child_fitness > global_best.1 {
        global_best.0 = child.clone();
        global_best.1 = child_fitness;
    }

    let (sc_after, tc_after) = model.base_stats(base);
    let next_state = {
        let ctx = IndividualContext {
            parent: &parent,
            child: &child,
            parent_fitness,
            child_fitness,
            trial: trial_after,
            op_successes: sc_after,
            op_uses: tc_after,
        };
        features::combine(pop_phi, &features::individual_features(snap, &ctx)?)
    };
    model.learn(decision.chosen, &state, r, &next_state, rl);
    *last_state = Some(state);
    Ok(EventOutput {
        child,
        child_fitness,
    })
}

/// Runs the colony to completion. The model is consulted for every operator
/// event and, when training is enabled in `rl`, updated in place.
#[allow(clippy::too_many_arguments)]
pub fn run_colony(
    problem: &dyn Problem,
    config: &ColonyConfig,
    op_params: &OperatorParams,
    model: &mut SelectorModel,
    rl: &RlParams,
    variant_label: &str,
    trace_features: bool,
) -> Result<RunRecord, ColonyError> {
    config.validate()?;
    rl.validate()
        .map_err(|e| ColonyError::InvalidConfig(e.to_string()))?;
    if model.feature_dim() != FEATURE_DIM {
        return Err(ColonyError::InvalidConfig(format!(
            "model feature dimension {} does not match the {FEATURE_DIM}-component state",
            model.feature_dim()
        )));
    }
    if model.sections() != rl.sections {
        return Err(ColonyError::InvalidConfig(format!(
            "model has {} sections but the run is configured for {}",
            model.sections(),
            rl.sections
        )));
    }

    let start = Instant::now();
    let d = problem.dimension();
    let n = config.population_size;
    let t_max = config.max_iterations;
    let trial_max = config.trial_limit + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut bees: Vec<Bee> = (0..n)
        .map(|_| {
            let (x, f) = problem.evaluate(BinaryVector::random(d, &mut rng));
            Bee::fresh(x, f.value())
        })
        .collect();
    let best0 = best_worst_indices(&bees).0;
    let mut global_best = (bees[best0].solution.clone(), bees[best0].fitness);

    // Until the first employed phase completes, the snapshot pairs every
    // parent with itself.
    let solutions: Vec<BinaryVector> = bees.iter().map(|b| b.solution.clone()).collect();
    let fitnesses: Vec<f64> = bees.iter().map(|b| b.fitness).collect();
    let frozen = (global_best.0.clone(), global_best.1);
    let mut snap = build_snapshot(
        &bees,
        solutions.clone(),
        fitnesses.clone(),
        solutions,
        fitnesses,
        &frozen,
        trial_max,
        d,
    );
    let mut pop_phi = features::population_features(&snap)?;

    let mut totals = [OpTraceRow::default(); 4];
    let mut trace = Vec::with_capacity(t_max);
    let mut last_state: Option<StateFeatures> = None;

    for t in 0..t_max {
        let mut iter_reward = [0.0f64; 4];
        let frozen = (global_best.0.clone(), global_best.1);

        let mut parents = Vec::with_capacity(n);
        let mut parent_fitness = Vec::with_capacity(n);
        let mut children = Vec::with_capacity(n);
        let mut child_fitness = Vec::with_capacity(n);
        for i in 0..n {
            parents.push(bees[i].solution.clone());
            parent_fitness.push(bees[i].fitness);
            let out = operator_event(
                i, &mut bees, problem, &snap, &pop_phi, model, rl, op_params,
                &mut global_best, t, t_max, config.trial_limit, &mut rng,
                &mut totals, &mut iter_reward, &mut last_state,
            )?;
            children.push(out.child);
            child_fitness.push(out.child_fitness);
        }

        snap = build_snapshot(
            &bees, parents, parent_fitness, children, child_fitness, &frozen, trial_max, d,
        );
        pop_phi = features::population_features(&snap)?;

        let probs = onlooker_probabilities(&bees.iter().map(|b| b.fitness).collect::<Vec<_>>());
        for _ in 0..n {
            let i = roulette(&probs, &mut rng);
            operator_event(
                i, &mut bees, problem, &snap, &pop_phi, model, rl, op_params,
                &mut global_best, t, t_max, config.trial_limit, &mut rng,
                &mut totals, &mut iter_reward, &mut last_state,
            )?;
        }

        scout_phase(&mut bees, config.trial_limit, problem, &mut global_best, &mut rng);

        let mut ops = totals;
        for (row, r) in ops.iter_mut().zip(iter_reward) {
            row.reward = r;
        }
        trace.push(IterationTrace {
            iteration: t,
            best_fitness: global_best.1,
            ops,
            state: if trace_features {
                last_state.as_ref().map(|s| *s.as_array())
            } else {
                None
            },
        });
    }

    Ok(RunRecord {
        instance_id: problem.id().to_string(),
        variant: variant_label.to_string(),
        seed: config.seed,
        best_fitness: global_best.1,
        best_solution: global_best.0,
        trace,
        wall_time: start.elapsed(),
    })
}
