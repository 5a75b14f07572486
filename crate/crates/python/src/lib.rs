//! Python bindings. Built as an extension module; see python/smoke_test.py.
//!
//! Solutions cross the boundary as bit strings (`"0101..."`), models as the
//! [`Model`] class, and SUKP instances as [`SukpInstance`]. The two solve
//! functions run the full colony and return a [`RunResult`].

use aosabc::colony::{run_colony, ColonyConfig};
use aosabc::problems::{generate_sukp, parse_sukp, OneMaxInstance, Problem};
use aosabc::selector::{RlParams, SelectorModel};
use aosabc::stats::wilcoxon_signed_rank as wilcoxon_rs;
use aosabc::transfer::{blend as blend_rs, ModelArchive, Provenance};
use aosabc::{BaseOp, BinaryVector, OperatorParams, FEATURE_DIM};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use std::collections::HashMap;
use std::path::PathBuf;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_bits(s: &str) -> PyResult<BinaryVector> {
    BinaryVector::from_bitstring(s)
        .ok_or_else(|| value_err("bit strings may contain only '0' and '1'"))
}

// ------------------------------------------------------------------ instances

/// A Set Union Knapsack instance: `m` items, each covering a subset of `n`
/// weighted elements; selected items pay the weight of the union of their
/// elements against the knapsack capacity.
#[pyclass(name = "SukpInstance")]
struct PySukpInstance {
    inner: aosabc::SukpInstance,
}

#[pymethods]
impl PySukpInstance {
    /// Draws a random instance: incidence density `density`, capacity at
    /// `rate` times the total element weight, integer profits and weights.
    #[staticmethod]
    fn generate(m: usize, n: usize, density: f64, rate: f64, seed: u64) -> PyResult<Self> {
        let inner = generate_sukp(m, n, density, rate, seed).map_err(value_err)?;
        Ok(PySukpInstance { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = parse_sukp(text).map_err(value_err)?;
        Ok(PySukpInstance { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, self.inner.to_text())
            .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
    }

    #[getter]
    fn id(&self) -> String {
        Problem::id(&self.inner).to_string()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.inner.capacity()
    }

    /// Total profit of the selected items (no feasibility check).
    fn profit(&self, bits: &str) -> PyResult<f64> {
        Ok(self.inner.profit(&parse_bits(bits)?))
    }

    /// Weight of the union of elements covered by the selected items.
    fn union_weight(&self, bits: &str) -> PyResult<f64> {
        self.inner
            .union_weight(&parse_bits(bits)?)
            .map_err(value_err)
    }

    /// Drops and refills items until the selection fits the capacity.
    fn repair(&self, bits: &str) -> PyResult<String> {
        Ok(self.inner.repair(parse_bits(bits)?).to_bitstring())
    }

    /// Repairs the candidate, then returns `(repaired_bits, profit)`.
    fn evaluate(&self, bits: &str) -> PyResult<(String, f64)> {
        let (repaired, fitness) = self.inner.evaluate(parse_bits(bits)?);
        Ok((repaired.to_bitstring(), fitness.value()))
    }

    /// Exhaustive optimum `(bits, profit)`; refuses instances with more than
    /// 25 items.
    fn enumerate_optimum(&self) -> PyResult<(String, f64)> {
        if self.inner.m() > 25 {
            return Err(value_err(format!(
                "enumeration is limited to 25 items, instance has {}",
                self.inner.m()
            )));
        }
        let (bits, profit) = self.inner.enumerate_optimum();
        Ok((bits.to_bitstring(), profit))
    }

    fn __repr__(&self) -> String {
        format!(
            "SukpInstance(id={:?}, m={}, n={}, capacity={})",
            Problem::id(&self.inner),
            self.inner.m(),
            self.inner.n(),
            self.inner.capacity()
        )
    }
}

// --------------------------------------------------------------------- models

/// An operator-selection model: per (operator, section) entries holding a Q
/// value, a success-state centre and usage counters, plus the provenance of
/// the archive it was loaded from (empty for a fresh model).
#[pyclass(name = "Model")]
struct PyModel {
    inner: SelectorModel,
    trained_on: String,
    episodes: u64,
    seeds: Vec<u64>,
}

impl PyModel {
    fn fresh_with(inner: SelectorModel) -> Self {
        PyModel {
            inner,
            trained_on: String::new(),
            episodes: 0,
            seeds: Vec::new(),
        }
    }
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (sections = 5))]
    fn new(sections: usize) -> PyResult<Self> {
        if sections == 0 {
            return Err(value_err("section count must be at least 1"));
        }
        Ok(PyModel::fresh_with(SelectorModel::new(FEATURE_DIM, sections)))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let archive = ModelArchive::load_from(&path)
            .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Ok(PyModel {
            inner: archive.model,
            trained_on: archive.provenance.instance_id,
            episodes: archive.provenance.episodes,
            seeds: archive.provenance.seeds,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        let provenance = Provenance {
            instance_id: if self.trained_on.is_empty() {
                "untrained".to_string()
            } else {
                self.trained_on.clone()
            },
            episodes: self.episodes,
            seeds: self.seeds.clone(),
        };
        ModelArchive::new(self.inner.clone(), provenance)
            .save_to(&path)
            .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
    }

    /// Componentwise mix: `self + delta * (other - self)`; counters round.
    fn blend(&self, other: &PyModel, delta: f64) -> PyResult<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(value_err(format!("delta must lie in [0, 1], got {delta}")));
        }
        let mixed = blend_rs(&self.inner, &other.inner, delta).map_err(value_err)?;
        Ok(PyModel::fresh_with(mixed))
    }

    #[getter]
    fn sections(&self) -> usize {
        self.inner.sections()
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    #[getter]
    fn entry_count(&self) -> usize {
        self.inner.entry_count()
    }

    #[getter]
    fn trained_on(&self) -> String {
        self.trained_on.clone()
    }

    #[getter]
    fn episodes(&self) -> u64 {
        self.episodes
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.seeds.clone()
    }

    /// Per-operator `(usage, successes, credit, mean_q)` summed over sections.
    fn op_stats(&self) -> HashMap<String, (u64, u64, f64, f64)> {
        self.inner
            .snapshot_credit()
            .into_iter()
            .map(|c| (c.op.to_string(), (c.usage, c.successes, c.credit, c.mean_q)))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(sections={}, entries={}, trained_on={:?}, episodes={})",
            self.inner.sections(),
            self.inner.entry_count(),
            self.trained_on,
            self.episodes
        )
    }
}

// ----------------------------------------------------------------------- runs

/// Outcome of one colony run.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    #[pyo3(get)]
    instance_id: String,
    #[pyo3(get)]
    seed: u64,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    best_fitness: f64,
    /// Best solution found, as a bit string.
    #[pyo3(get)]
    best_solution: String,
    #[pyo3(get)]
    wall_time: f64,
    curve: Vec<f64>,
    usage: HashMap<String, u64>,
}

#[pymethods]
impl PyRunResult {
    /// Global best fitness after each iteration.
    fn best_curve(&self) -> Vec<f64> {
        self.curve.clone()
    }

    /// Selections per operator over the whole run.
    fn op_usage(&self) -> HashMap<String, u64> {
        self.usage.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(instance_id={:?}, seed={}, best_fitness={})",
            self.instance_id, self.seed, self.best_fitness
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    problem: &dyn Problem,
    seed: u64,
    population: Option<usize>,
    iterations: usize,
    trial_limit: Option<u32>,
    epsilon: f64,
    learning_rate: f64,
    discount: f64,
    sections: Option<usize>,
    training: bool,
    model: Option<&Bound<'_, PyModel>>,
) -> PyResult<PyRunResult> {
    let population = population.unwrap_or_else(|| problem.default_population()).max(2);
    let limit = trial_limit
        .unwrap_or_else(|| ColonyConfig::default_trial_limit(population, problem.dimension()));
    let rl = RlParams {
        epsilon,
        learning_rate,
        discount,
        sections: match (&model, sections) {
            (Some(m), None) => m.borrow().inner.sections(),
            (_, Some(s)) => s,
            (None, None) => 5,
        },
        training,
    };
    rl.validate().map_err(value_err)?;

    let config = ColonyConfig::new(population, iterations, limit, seed).map_err(value_err)?;
    let mut scratch;
    let mut borrowed;
    let working: &mut SelectorModel = match model {
        Some(m) => {
            borrowed = m.borrow_mut();
            &mut borrowed.inner
        }
        None => {
            scratch = SelectorModel::new(FEATURE_DIM, rl.sections);
            &mut scratch
        }
    };
    let record = run_colony(
        problem,
        &config,
        &OperatorParams::default(),
        working,
        &rl,
        "python",
        false,
    )
    .map_err(value_err)?;

    let mut usage = HashMap::new();
    if let Some(last) = record.trace.last() {
        for (op, row) in BaseOp::ALL.iter().zip(&last.ops) {
            usage.insert(op.to_string(), row.usage);
        }
    }
    Ok(PyRunResult {
        instance_id: record.instance_id,
        seed: record.seed,
        iterations,
        best_fitness: record.best_fitness,
        best_solution: record.best_solution.to_bitstring(),
        wall_time: record.wall_time.as_secs_f64(),
        curve: record.trace.iter().map(|t| t.best_fitness).collect(),
        usage,
    })
}

/// Runs the colony on OneMax. Pass a [`Model`] to reuse or train it in place
/// (`training=False` freezes it).
#[pyfunction]
#[pyo3(signature = (dimension, *, seed = 1, population = None, iterations = 250,
    trial_limit = None, epsilon = 0.2, learning_rate = 0.1, discount = 0.9,
    sections = None, training = true, model = None))]
#[allow(clippy::too_many_arguments)]
fn solve_onemax(
    dimension: usize,
    seed: u64,
    population: Option<usize>,
    iterations: usize,
    trial_limit: Option<u32>,
    epsilon: f64,
    learning_rate: f64,
    discount: f64,
    sections: Option<usize>,
    training: bool,
    model: Option<&Bound<'_, PyModel>>,
) -> PyResult<PyRunResult> {
    let problem = OneMaxInstance::new(dimension).map_err(value_err)?;
    solve(
        &problem, seed, population, iterations, trial_limit, epsilon, learning_rate, discount,
        sections, training, model,
    )
}

/// Runs the colony on a SUKP instance; the population defaults to
/// `max(m, n)`.
#[pyfunction]
#[pyo3(signature = (instance, *, seed = 1, population = None, iterations = 250,
    trial_limit = None, epsilon = 0.2, learning_rate = 0.1, discount = 0.9,
    sections = None, training = true, model = None))]
#[allow(clippy::too_many_arguments)]
fn solve_sukp(
    instance: &PySukpInstance,
    seed: u64,
    population: Option<usize>,
    iterations: usize,
    trial_limit: Option<u32>,
    epsilon: f64,
    learning_rate: f64,
    discount: f64,
    sections: Option<usize>,
    training: bool,
    model: Option<&Bound<'_, PyModel>>,
) -> PyResult<PyRunResult> {
    solve(
        &instance.inner, seed, population, iterations, trial_limit, epsilon, learning_rate,
        discount, sections, training, model,
    )
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples (exact up to 25
/// non-zero differences, normal approximation beyond).
#[pyfunction]
fn wilcoxon_signed_rank(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    wilcoxon_rs(&a, &b).map_err(value_err)
}

/// Hamming distance between two equal-length bit strings.
#[pyfunction]
fn hamming(a: &str, b: &str) -> PyResult<usize> {
    let a = parse_bits(a)?;
    let b = parse_bits(b)?;
    if a.len() != b.len() {
        return Err(value_err(format!(
            "bit strings have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(a.hamming(&b))
}

#[pymodule]
fn aosabc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySukpInstance>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(solve_onemax, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sukp, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon_signed_rank, m)?)?;
    m.add_function(wrap_pyfunction!(hamming, m)?)?;
    Ok(())
}
