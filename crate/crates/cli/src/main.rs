//! Command line front end.
//!
//! Subcommands: `generate` (benchmark instances), `train` (build a model
//! archive), `solve` (single run), `experiment` (full benchmark matrix),
//! `stats` (recompute a summary table from a runs CSV) and `model inspect`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

use anyhow::Context;
use aosabc::colony::{run_colony, ColonyConfig};
use aosabc::experiment::{
    build_table, parse_runs_csv, run_experiment, runs_csv, summary_csv, trace_csv,
    ExperimentConfig, ExperimentError, ExperimentTable,
};
use aosabc::problems::{generate_sukp, parse_sukp, OneMaxInstance, Problem};
use aosabc::selector::RlParams;
use aosabc::transfer::{variant_policy, ModelArchive, Provenance, Variant};
use aosabc::OperatorParams;
use clap::{Args, Parser, Subcommand};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "aosabc", version, about = "Binary bee colony solver with adaptive operator selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark instances
    Generate {
        #[command(subcommand)]
        what: GenerateCommand,
    },
    /// Train a selector model over repeated runs and save the archive
    Train(RunArgs),
    /// Run the solver once on one instance
    Solve(RunArgs),
    /// Run the instances x variants x repetitions benchmark matrix
    Experiment(RunArgs),
    /// Rebuild a summary table from a per-repetition runs CSV
    Stats(StatsArgs),
    /// Model archive utilities
    Model {
        #[command(subcommand)]
        what: ModelCommand,
    },
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Random SUKP instance
    Sukp {
        /// Number of items
        #[arg(long)]
        m: usize,
        /// Number of elements
        #[arg(long)]
        n: usize,
        /// Incidence density in (0, 1]
        #[arg(long)]
        density: f64,
        /// Capacity as a fraction of the total element weight, in (0, 1]
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        seed: u64,
        /// Instance id stored in the file
        #[arg(long)]
        id: Option<String>,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Print the shape, provenance and per-operator statistics of an archive
    Inspect { path: PathBuf },
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    /// Problem family: onemax or sukp (inferred from --dims / --instance)
    #[arg(long)]
    problem: Option<String>,
    /// OneMax dimensions, comma separated
    #[arg(long)]
    dims: Option<String>,
    /// SUKP instance files (repeatable or comma separated)
    #[arg(long, value_delimiter = ',')]
    instance: Vec<PathBuf>,
    /// Variants to run, comma separated: random, one-run, all-run,
    /// one-run-wl, all-run-wl
    #[arg(long)]
    variants: Option<String>,
    /// Single variant (solve)
    #[arg(long)]
    variant: Option<String>,
    /// Repetitions per (instance, variant) cell
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed; repetition r uses seed + r
    #[arg(long)]
    seed: Option<u64>,
    /// Number of run sections in the selector
    #[arg(long)]
    sections: Option<usize>,
    /// Exploration probability
    #[arg(long)]
    epsilon: Option<f64>,
    /// Learning rate
    #[arg(long)]
    beta: Option<f64>,
    /// Discount factor
    #[arg(long)]
    gamma: Option<f64>,
    /// Population size (defaults to the problem convention)
    #[arg(long)]
    pop: Option<usize>,
    /// Iteration budget
    #[arg(long)]
    iters: Option<usize>,
    /// Scout trial limit (defaults to N*D/10 within [10, 200])
    #[arg(long)]
    limit: Option<u32>,
    /// Model archive to start from
    #[arg(long)]
    load_model: Option<PathBuf>,
    /// Where to save the resulting model archive
    #[arg(long)]
    save_model: Option<PathBuf>,
    /// Online learning during runs: on or off
    #[arg(long)]
    train: Option<String>,
    /// Blend weight when carrying a model between repetitions
    #[arg(long)]
    delta: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-repetition results CSV (experiment)
    #[arg(long)]
    runs_out: Option<PathBuf>,
    /// Baseline variant for p-values (defaults to the first variant)
    #[arg(long)]
    baseline: Option<String>,
    /// Trace CSV file (solve) or directory (experiment)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Include the 19 state components in traces
    #[arg(long)]
    trace_features: bool,
    /// Measure wall time (makes the seconds column non-zero)
    #[arg(long)]
    timing: bool,
    /// key=value file supplying defaults for any of the above flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct StatsArgs {
    /// Runs CSV produced by `experiment --runs-out`
    runs: PathBuf,
    /// Baseline variant for p-values (defaults to the first variant found)
    #[arg(long)]
    baseline: Option<String>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

enum AppError {
    Usage(String),
    Runtime(anyhow::Error),
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Runtime(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.into())
    }
}

impl From<ExperimentError> for AppError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(msg) => AppError::Usage(msg),
            other => AppError::Runtime(other.into()),
        }
    }
}

impl From<aosabc::colony::ColonyError> for AppError {
    fn from(e: aosabc::colony::ColonyError) -> Self {
        AppError::Runtime(e.into())
    }
}

impl From<aosabc::transfer::ArchiveError> for AppError {
    fn from(e: aosabc::transfer::ArchiveError) -> Self {
        AppError::Runtime(e.into())
    }
}

impl From<aosabc::problems::ProblemError> for AppError {
    fn from(e: aosabc::problems::ProblemError) -> Self {
        AppError::Runtime(e.into())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Generate { what } => cmd_generate(what),
        Command::Train(args) => cmd_train(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Model { what } => cmd_model(what),
    };
    match result {
        Ok(()) => {}
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `aosabc --help` for usage");
            std::process::exit(1);
        }
        Err(AppError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

// ---------------------------------------------------------------- config file

/// `key=value` per line, `#` comments. Keys are the long flag names.
struct ConfigFile(HashMap<String, String>);

impl ConfigFile {
    fn empty() -> Self {
        ConfigFile(HashMap::new())
    }

    fn load(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut map = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "config file {} line {}: expected key=value, got `{line}`",
                    path.display(),
                    idx + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, AppError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config key {key}: invalid value `{raw}`"))),
        }
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>, AppError> {
        match self.0.get(key).map(|s| s.as_str()) {
            None => Ok(None),
            Some("true") | Some("on") | Some("1") => Ok(Some(true)),
            Some("false") | Some("off") | Some("0") => Ok(Some(false)),
            Some(other) => Err(usage(format!("config key {key}: invalid boolean `{other}`"))),
        }
    }
}

/// Fills unset flags from the config file; explicit flags win.
fn apply_config(mut args: RunArgs) -> Result<RunArgs, AppError> {
    let cfg = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::empty(),
    };
    macro_rules! overlay {
        ($field:ident, $key:literal) => {
            if args.$field.is_none() {
                args.$field = cfg.get($key)?;
            }
        };
    }
    overlay!(problem, "problem");
    overlay!(dims, "dims");
    overlay!(variants, "variants");
    overlay!(variant, "variant");
    overlay!(reps, "reps");
    overlay!(seed, "seed");
    overlay!(sections, "sections");
    overlay!(epsilon, "epsilon");
    overlay!(beta, "beta");
    overlay!(gamma, "gamma");
    overlay!(pop, "pop");
    overlay!(iters, "iters");
    overlay!(limit, "limit");
    overlay!(load_model, "load-model");
    overlay!(save_model, "save-model");
    overlay!(train, "train");
    overlay!(delta, "delta");
    overlay!(out, "out");
    overlay!(runs_out, "runs-out");
    overlay!(baseline, "baseline");
    overlay!(trace, "trace");
    if args.instance.is_empty() {
        if let Some(list) = cfg.0.get("instance") {
            args.instance = list.split(',').map(|s| PathBuf::from(s.trim())).collect();
        }
    }
    if !args.trace_features {
        args.trace_features = cfg.get_bool("trace-features")?.unwrap_or(false);
    }
    if !args.timing {
        args.timing = cfg.get_bool("timing")?.unwrap_or(false);
    }
    Ok(args)
}

// ------------------------------------------------------------------- settings

fn build_problems(args: &RunArgs) -> Result<Vec<Arc<dyn Problem>>, AppError> {
    let family = match (&args.problem, &args.dims, args.instance.is_empty()) {
        (Some(p), _, _) => p.clone(),
        (None, Some(_), true) => "onemax".to_string(),
        (None, None, false) => "sukp".to_string(),
        _ => {
            return Err(usage(
                "specify --problem onemax with --dims, or --problem sukp with --instance",
            ))
        }
    };
    match family.as_str() {
        "onemax" => {
            let dims = args
                .dims
                .as_ref()
                .ok_or_else(|| usage("--problem onemax needs --dims"))?;
            let mut problems: Vec<Arc<dyn Problem>> = Vec::new();
            for tok in dims.split(',') {
                let d: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| usage(format!("invalid dimension `{tok}` in --dims")))?;
                problems.push(Arc::new(OneMaxInstance::new(d)?));
            }
            Ok(problems)
        }
        "sukp" => {
            if args.instance.is_empty() {
                return Err(usage("--problem sukp needs --instance"));
            }
            let mut problems: Vec<Arc<dyn Problem>> = Vec::new();
            for path in &args.instance {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read instance {}", path.display()))?;
                let inst = parse_sukp(&text)
                    .map_err(|e| AppError::Runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
                problems.push(Arc::new(inst));
            }
            Ok(problems)
        }
        other => Err(usage(format!("unknown problem family `{other}`"))),
    }
}

fn rl_params(args: &RunArgs) -> Result<RlParams, AppError> {
    let training = match args.train.as_deref() {
        None | Some("on") | Some("true") => true,
        Some("off") | Some("false") => false,
        Some(other) => return Err(usage(format!("--train expects on or off, got `{other}`"))),
    };
    let params = RlParams {
        epsilon: args.epsilon.unwrap_or(0.2),
        learning_rate: args.beta.unwrap_or(0.1),
        discount: args.gamma.unwrap_or(0.9),
        sections: args.sections.unwrap_or(5),
        training,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    Ok(params)
}

fn parse_variant_list(spec: &str) -> Result<Vec<Variant>, AppError> {
    let mut out = Vec::new();
    for tok in spec.split(',') {
        let v: Variant = tok.trim().parse().map_err(|e: String| usage(e))?;
        if out.contains(&v) {
            return Err(usage(format!("variant `{v}` listed twice")));
        }
        out.push(v);
    }
    Ok(out)
}

fn load_archive(args: &RunArgs) -> Result<Option<ModelArchive>, AppError> {
    match &args.load_model {
        None => Ok(None),
        Some(path) => {
            let archive = ModelArchive::load_from(path).map_err(|e| {
                AppError::Runtime(anyhow::anyhow!("{}: {e}", path.display()))
            })?;
            Ok(Some(archive))
        }
    }
}

fn delta_of(args: &RunArgs) -> Result<f64, AppError> {
    let delta = args.delta.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&delta) {
        return Err(usage(format!("--delta must lie in [0, 1], got {delta}")));
    }
    Ok(delta)
}

fn experiment_config(
    args: &RunArgs,
    problems: Vec<Arc<dyn Problem>>,
    variants: Vec<Variant>,
) -> Result<ExperimentConfig, AppError> {
    let mut config = ExperimentConfig::new(problems, variants);
    config.repetitions = args.reps.unwrap_or(30);
    config.base_seed = args.seed.unwrap_or(1);
    config.population_size = args.pop;
    config.max_iterations = args.iters.unwrap_or(250);
    config.trial_limit = args.limit;
    config.rl = rl_params(args)?;
    config.op_params = OperatorParams::default();
    config.delta = delta_of(args)?;
    config.archive = load_archive(args)?;
    config.trace_features = args.trace_features;
    Ok(config)
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> Result<(), AppError> {
    match out {
        Some(path) => {
            std::fs::write(path, content)
                .with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

// ------------------------------------------------------------------- commands

fn cmd_generate(what: GenerateCommand) -> Result<(), AppError> {
    match what {
        GenerateCommand::Sukp {
            m,
            n,
            density,
            rate,
            seed,
            id,
            out,
        } => {
            let mut inst = generate_sukp(m, n, density, rate, seed).map_err(|e| usage(e.to_string()))?;
            if let Some(id) = id {
                inst = inst.with_id(id);
            }
            write_or_print(&out, &inst.to_text())
        }
    }
}

fn cmd_solve(args: RunArgs) -> Result<(), AppError> {
    let args = apply_config(args)?;
    let problems = build_problems(&args)?;
    if problems.len() != 1 {
        return Err(usage("solve runs exactly one instance; pass a single --dims value or --instance file"));
    }
    let problem = problems.into_iter().next().unwrap();
    let rl = rl_params(&args)?;
    let archive = load_archive(&args)?;
    let variant: Variant = match &args.variant {
        Some(v) => v.parse().map_err(|e: String| usage(e))?,
        // A loaded archive implies the transfer variant.
        None if archive.is_some() => Variant::OneRunWithArchive,
        None => Variant::OneRun,
    };
    let (mut model, params) = variant_policy(variant, 0, archive.as_ref(), None, &rl)?;

    let population = args.pop.unwrap_or_else(|| problem.default_population()).max(2);
    let iterations = args.iters.unwrap_or(250);
    let limit = args
        .limit
        .unwrap_or_else(|| ColonyConfig::default_trial_limit(population, problem.dimension()));
    let seed = args.seed.unwrap_or(1);
    let colony = ColonyConfig::new(population, iterations, limit, seed)?;
    let record = run_colony(
        problem.as_ref(),
        &colony,
        &OperatorParams::default(),
        &mut model,
        &params,
        variant.label(),
        args.trace_features,
    )?;

    if let Some(path) = &args.trace {
        std::fs::write(path, trace_csv(&record))
            .with_context(|| format!("cannot write trace {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = &args.save_model {
        let provenance = Provenance {
            instance_id: record.instance_id.clone(),
            episodes: 1,
            seeds: vec![seed],
        };
        ModelArchive::new(model, provenance).save_to(path)?;
        eprintln!("wrote {}", path.display());
    }
    if args.timing {
        eprintln!("wall time: {:.3}s", record.wall_time.as_secs_f64());
    }
    let summary = format!(
        "instance: {}\nvariant: {}\nseed: {}\niterations: {}\nbest: {}\n",
        record.instance_id, record.variant, record.seed, iterations, record.best_fitness
    );
    write_or_print(&args.out, &summary)
}

fn cmd_train(args: RunArgs) -> Result<(), AppError> {
    let args = apply_config(args)?;
    let problems = build_problems(&args)?;
    if problems.len() != 1 {
        return Err(usage("train uses exactly one instance"));
    }
    let save_path = args
        .save_model
        .clone()
        .ok_or_else(|| usage("train needs --save-model"))?;
    let variant = if args.load_model.is_some() {
        Variant::AllRunWithArchive
    } else {
        Variant::AllRun
    };
    let reps = args.reps.unwrap_or(30);
    let base_seed = args.seed.unwrap_or(1);
    let config = experiment_config(&args, problems, vec![variant])?;
    let result = run_experiment(&config)?;
    let cell = &result.cells[0];
    let provenance = Provenance {
        instance_id: cell.instance_id.clone(),
        episodes: reps as u64,
        seeds: (0..reps as u64).map(|r| base_seed + r).collect(),
    };
    ModelArchive::new(cell.final_model.clone(), provenance).save_to(&save_path)?;
    let bests = cell.bests();
    let mean = bests.iter().sum::<f64>() / bests.len() as f64;
    println!(
        "trained on {} for {} episodes (mean best {:.4}); model saved to {}",
        cell.instance_id,
        reps,
        mean,
        save_path.display()
    );
    if args.timing {
        eprintln!("wall time: {:.3}s", cell.seconds);
    }
    Ok(())
}

fn cmd_experiment(args: RunArgs) -> Result<(), AppError> {
    let args = apply_config(args)?;
    let problems = build_problems(&args)?;
    let variants = match &args.variants {
        Some(spec) => parse_variant_list(spec)?,
        None => vec![Variant::Random, Variant::OneRun, Variant::AllRun],
    };
    let baseline: Variant = match &args.baseline {
        Some(b) => b.parse().map_err(|e: String| usage(e))?,
        None => variants[0],
    };
    if !variants.contains(&baseline) {
        return Err(usage(format!("baseline {baseline} is not among the variants")));
    }
    let config = experiment_config(&args, problems, variants)?;
    let result = run_experiment(&config)?;
    let table = build_table(&result.summaries(), baseline)?;

    if let Some(path) = &args.runs_out {
        std::fs::write(path, runs_csv(&result))
            .with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(dir) = &args.trace {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create trace directory {}", dir.display()))?;
        for cell in &result.cells {
            for (rep, record) in cell.records.iter().enumerate() {
                let name = format!("{}_{}_rep{}.csv", cell.instance_id, cell.variant, rep);
                std::fs::write(dir.join(&name), trace_csv(record))
                    .with_context(|| format!("cannot write trace {name}"))?;
            }
        }
        eprintln!("wrote traces to {}", dir.display());
    }
    if args.timing {
        let total: f64 = result.cells.iter().map(|c| c.seconds).sum();
        eprintln!("wall time: {total:.3}s");
    }
    write_or_print(&args.out, &summary_csv(&table, args.timing))
}

fn cmd_stats(args: StatsArgs) -> Result<(), AppError> {
    let text = std::fs::read_to_string(&args.runs)
        .with_context(|| format!("cannot read {}", args.runs.display()))?;
    let cells = parse_runs_csv(&text)?;
    let baseline: Variant = match &args.baseline {
        Some(b) => b.parse().map_err(|e: String| usage(e))?,
        None => cells[0].variant,
    };
    let table: ExperimentTable = build_table(&cells, baseline)?;
    write_or_print(&args.out, &summary_csv(&table, false))
}

fn cmd_model(what: ModelCommand) -> Result<(), AppError> {
    match what {
        ModelCommand::Inspect { path } => {
            let archive = ModelArchive::load_from(&path)
                .map_err(|e| AppError::Runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
            let model = &archive.model;
            let mut out = String::new();
            out.push_str(&format!("feature_dim: {}\n", model.feature_dim()));
            out.push_str(&format!("sections: {}\n", model.sections()));
            out.push_str(&format!("entries: {}\n", model.entry_count()));
            out.push_str(&format!("trained_on: {}\n", archive.provenance.instance_id));
            out.push_str(&format!("episodes: {}\n", archive.provenance.episodes));
            let seeds: Vec<String> = archive.provenance.seeds.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("seeds: {}\n", seeds.join(",")));
            out.push_str("operator usage successes credit mean_q\n");
            for credit in model.snapshot_credit() {
                out.push_str(&format!(
                    "{} {} {} {:.6} {:.6}\n",
                    credit.op, credit.usage, credit.successes, credit.credit, credit.mean_q
                ));
            }
            print!("{out}");
            Ok(())
        }
    }
}
