//! Multi-instance, multi-variant benchmark runner.
//!
//! A run matrix is instances x variants x repetitions. Repetition `r` of every
//! variant uses seed `base_seed + r`, so variants face identical random
//! streams and can be compared pairwise. Results aggregate into a summary
//! table with per-instance ranks, Wilcoxon p-values against a baseline
//! variant, and mean ranks across instances.

use crate::colony::{run_colony, ColonyConfig, ColonyError, RunRecord};
use crate::operators::OperatorParams;
use crate::problems::Problem;
use crate::selector::{RlParams, SelectorError, SelectorModel};
use crate::stats::{mean_ranks, ranks_descending, wilcoxon_signed_rank, StatsError};
use crate::transfer::{blend, variant_policy, ArchiveError, ModelArchive, Variant};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Colony(#[from] ColonyError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error("runs file line {line}: {message}")]
    RunsParse { line: usize, message: String },
}

pub struct ExperimentConfig {
    pub problems: Vec<Arc<dyn Problem>>,
    pub variants: Vec<Variant>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// `None` uses each problem's population convention.
    pub population_size: Option<usize>,
    pub max_iterations: usize,
    /// `None` uses the `N * D / 10` default, clamped to `[10, 200]`.
    pub trial_limit: Option<u32>,
    pub rl: RlParams,
    pub op_params: OperatorParams,
    /// Blend weight of a repetition's end model when carrying a model to the
    /// next repetition. 1 carries the end model unchanged, 0 disables carry.
    pub delta: f64,
    pub archive: Option<ModelArchive>,
    pub trace_features: bool,
}

impl ExperimentConfig {
    pub fn new(problems: Vec<Arc<dyn Problem>>, variants: Vec<Variant>) -> Self {
        ExperimentConfig {
            problems,
            variants,
            repetitions: 30,
            base_seed: 1,
            population_size: None,
            max_iterations: 250,
            trial_limit: None,
            rl: RlParams::default(),
            op_params: OperatorParams::default(),
            delta: 1.0,
            archive: None,
            trace_features: false,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.problems.is_empty() {
            return Err(ExperimentError::Config("no instances to run".into()));
        }
        if self.variants.is_empty() {
            return Err(ExperimentError::Config("no variants to run".into()));
        }
        if self.repetitions == 0 {
            return Err(ExperimentError::Config("repetition count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(ExperimentError::Config(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        self.rl
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.archive.is_none() {
            if let Some(v) = self.variants.iter().find(|v| v.needs_archive()) {
                return Err(ExperimentError::Config(format!(
                    "variant {v} needs a model archive (pass --load-model)"
                )));
            }
        }
        Ok(())
    }
}

/// All repetitions of one (instance, variant) cell.
pub struct CellResult {
    pub instance_id: String,
    pub variant: Variant,
    pub records: Vec<RunRecord>,
    /// Model carried out of the last repetition (the trained artefact for
    /// model-carrying variants).
    pub final_model: SelectorModel,
    pub seconds: f64,
}

impl CellResult {
    pub fn bests(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best_fitness).collect()
    }
}

pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
}

/// The part of a cell needed for table building; also what a runs CSV stores.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub instance_id: String,
    pub variant: Variant,
    pub bests: Vec<f64>,
    pub seconds: f64,
}

impl ExperimentResult {
    pub fn summaries(&self) -> Vec<CellSummary> {
        self.cells
            .iter()
            .map(|c| CellSummary {
                instance_id: c.instance_id.clone(),
                variant: c.variant,
                bests: c.bests(),
                seconds: c.seconds,
            })
            .collect()
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    config.validate()?;
    let mut cells = Vec::new();
    for problem in &config.problems {
        for &variant in &config.variants {
            cells.push(run_cell(config, problem.as_ref(), variant)?);
        }
    }
    Ok(ExperimentResult { cells })
}

fn run_cell(
    config: &ExperimentConfig,
    problem: &dyn Problem,
    variant: Variant,
) -> Result<CellResult, ExperimentError> {
    let started = Instant::now();
    let population = config
        .population_size
        .unwrap_or_else(|| problem.default_population())
        .max(2);
    let limit = config
        .trial_limit
        .unwrap_or_else(|| ColonyConfig::default_trial_limit(population, problem.dimension()));
    let mut carried: Option<SelectorModel> = None;
    let mut records = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let (mut model, params) =
            variant_policy(variant, rep, config.archive.as_ref(), carried.take(), &config.rl)?;
        let rep_start = model.clone();
        let colony = ColonyConfig::new(
            population,
            config.max_iterations,
            limit,
            config.base_seed + rep as u64,
        )?;
        let record = run_colony(
            problem,
            &colony,
            &config.op_params,
            &mut model,
            &params,
            variant.label(),
            config.trace_features,
        )?;
        records.push(record);
        carried = Some(blend(&rep_start, &model, config.delta)?);
    }
    Ok(CellResult {
        instance_id: problem.id().to_string(),
        variant,
        records,
        final_model: carried.expect("at least one repetition ran"),
        seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub instance_id: String,
    pub variant: Variant,
    /// Rank of the variant's mean within its instance, 1 = best.
    pub rank: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (0 for a single repetition).
    pub std: f64,
    /// Wilcoxon p-value against the baseline; `None` on the baseline itself.
    pub p_value: Option<f64>,
    pub reps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<TableRow>,
    /// Per-variant mean rank across instances, in variant order.
    pub mean_ranks: Vec<(Variant, f64)>,
}

impl ExperimentTable {
    pub fn row(&self, instance_id: &str, variant: Variant) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.instance_id == instance_id && r.variant == variant)
    }

    pub fn mean_rank(&self, variant: Variant) -> Option<f64> {
        self.mean_ranks.iter().find(|(v, _)| *v == variant).map(|(_, r)| *r)
    }
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Aggregates cell summaries into the reporting table. Every instance must
/// carry the same variants in the same order, including the baseline.
pub fn build_table(cells: &[CellSummary], baseline: Variant) -> Result<ExperimentTable, ExperimentError> {
    let mut instance_order: Vec<&str> = Vec::new();
    for c in cells {
        if !instance_order.contains(&c.instance_id.as_str()) {
            instance_order.push(&c.instance_id);
        }
    }
    let mut variant_order: Vec<Variant> = Vec::new();
    for c in cells {
        if !variant_order.contains(&c.variant) {
            variant_order.push(c.variant);
        }
    }
    if !variant_order.contains(&baseline) {
        return Err(ExperimentError::Config(format!(
            "baseline variant {baseline} does not appear in the results"
        )));
    }

    let mut rows = Vec::new();
    let mut rank_matrix: Vec<Vec<f64>> = Vec::new();
    for instance in &instance_order {
        let group: Vec<&CellSummary> = variant_order
            .iter()
            .map(|v| {
                cells
                    .iter()
                    .find(|c| c.instance_id == *instance && c.variant == *v)
                    .ok_or_else(|| {
                        ExperimentError::Config(format!(
                            "instance {instance} has no results for variant {v}"
                        ))
                    })
            })
            .collect::<Result<_, _>>()?;
        let means: Vec<f64> = group
            .iter()
            .map(|c| c.bests.iter().sum::<f64>() / c.bests.len().max(1) as f64)
            .collect();
        let ranks = ranks_descending(&means);
        rank_matrix.push(means.clone());
        let baseline_bests = &group[variant_order.iter().position(|v| *v == baseline).unwrap()].bests;
        for (i, cell) in group.iter().enumerate() {
            let p_value = if cell.variant == baseline {
                None
            } else {
                Some(wilcoxon_signed_rank(&cell.bests, baseline_bests)?)
            };
            rows.push(TableRow {
                instance_id: cell.instance_id.clone(),
                variant: cell.variant,
                rank: ranks[i],
                max: cell.bests.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                mean: means[i],
                std: sample_std(&cell.bests),
                p_value,
                reps: cell.bests.len(),
                seconds: cell.seconds,
            });
        }
    }
    let averaged = mean_ranks(&rank_matrix)?;
    Ok(ExperimentTable {
        rows,
        mean_ranks: variant_order.into_iter().zip(averaged).collect(),
    })
}

/// Summary table as CSV. With `include_seconds` off the seconds column is
/// written as `0.000` so repeated runs produce byte-identical files.
pub fn summary_csv(table: &ExperimentTable, include_seconds: bool) -> String {
    let mut out = String::from("instance_id,variant,rank,max,mean,std,p_value,reps,seconds\n");
    let secs = |s: f64| {
        if include_seconds {
            format!("{s:.3}")
        } else {
            "0.000".to_string()
        }
    };
    for r in &table.rows {
        let p = r.p_value.map(|p| format!("{p:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{:.4},{:.4},{},{},{}\n",
            r.instance_id,
            r.variant,
            r.rank,
            r.max,
            r.mean,
            r.std,
            p,
            r.reps,
            secs(r.seconds)
        ));
    }
    for (variant, rank) in &table.mean_ranks {
        out.push_str(&format!("mean_rank,{variant},{rank:.4},,,,,,\n"));
    }
    out
}

/// Per-repetition results as CSV (`instance_id,variant,rep,seed,best`).
pub fn runs_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("instance_id,variant,rep,seed,best\n");
    for cell in &result.cells {
        for (rep, record) in cell.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{rep},{},{}\n",
                cell.instance_id, cell.variant, record.seed, record.best_fitness
            ));
        }
    }
    out
}

/// Parses a runs CSV back into cell summaries (used by the `stats`
/// subcommand). Cells keep their first-appearance order; seconds are 0.
pub fn parse_runs_csv(text: &str) -> Result<Vec<CellSummary>, ExperimentError> {
    let mut cells: Vec<CellSummary> = Vec::new();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| ExperimentError::RunsParse {
            line: 1,
            message: "empty file".into(),
        })?;
    if header.trim() != "instance_id,variant,rep,seed,best" {
        return Err(ExperimentError::RunsParse {
            line: 1,
            message: format!("unexpected header `{header}`"),
        });
    }
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(ExperimentError::RunsParse {
                line: line_no,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let variant: Variant = fields[1].parse().map_err(|e: String| ExperimentError::RunsParse {
            line: line_no,
            message: e,
        })?;
        let best: f64 = fields[4].parse().map_err(|_| ExperimentError::RunsParse {
            line: line_no,
            message: format!("invalid best value `{}`", fields[4]),
        })?;
        match cells
            .iter_mut()
            .find(|c| c.instance_id == fields[0] && c.variant == variant)
        {
            Some(cell) => cell.bests.push(best),
            None => cells.push(CellSummary {
                instance_id: fields[0].to_string(),
                variant,
                bests: vec![best],
                seconds: 0.0,
            }),
        }
    }
    if cells.is_empty() {
        return Err(ExperimentError::RunsParse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(cells)
}

/// Per-iteration trace of one run as CSV. Columns per base operator:
/// cumulative usage, cumulative successes, cumulative credit, the iteration's
/// reward sum, and the operator's share of all selections so far (percent).
/// With feature tracing on, the 19 state components are appended.
pub fn trace_csv(record: &RunRecord) -> String {
    let with_state = record.trace.first().is_some_and(|row| row.state.is_some());
    let mut out = String::from("iter,gbest");
    for op in crate::operators::BaseOp::ALL {
        for col in ["usage", "successes", "credit", "reward", "selectable_pct"] {
            out.push_str(&format!(",{op}_{col}"));
        }
    }
    if with_state {
        for i in 1..=crate::features::FEATURE_DIM {
            out.push_str(&format!(",phi_{i}"));
        }
    }
    out.push('\n');
    for row in &record.trace {
        out.push_str(&format!("{},{}", row.iteration, row.best_fitness));
        let total: u64 = row.ops.iter().map(|o| o.usage).sum();
        for op in &row.ops {
            let share = if total == 0 {
                0.0
            } else {
                100.0 * op.usage as f64 / total as f64
            };
            out.push_str(&format!(
                ",{},{},{:.6},{:.6},{:.2}",
                op.usage, op.successes, op.credit, op.reward, share
            ));
        }
        if with_state {
            if let Some(state) = &row.state {
                for v in state {
                    out.push_str(&format!(",{v:.6}"));
                }
            }
        }
        out.push('\n');
    }
    out
}
