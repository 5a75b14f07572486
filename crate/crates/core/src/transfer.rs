//! Model persistence and run-to-run transfer.
//!
//! A trained [`SelectorModel`] can be saved as a plain-text archive and loaded
//! into later runs, either on the same instance or on a different one. The
//! archive format is line oriented:
//!
//! ```text
//! AOSMODEL v1
//! feature_dim 19
//! sections 5
//! operators flip n ibin nb
//! k successes usage q credit c_1 ... c_19     (one line per entry, k ascending)
//! meta: instance=onemax_2500
//! meta: episodes=30
//! meta: seeds=1,2,3
//! ```
//!
//! Floating point values are written in shortest round-trip form, so
//! save -> load -> save is byte-identical and a loaded model is exactly equal
//! to the saved one.

use crate::features::FEATURE_DIM;
use crate::operators::BaseOp;
use crate::selector::{CentreEntry, RlParams, SelectorError, SelectorModel};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("unsupported archive header `{0}` (expected `AOSMODEL v1`)")]
    UnsupportedHeader(String),
    #[error("archive line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("archive is incompatible with this run: {0}")]
    Incompatible(String),
    #[error("{0} needs a model archive (pass --load-model)")]
    MissingArchive(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub instance_id: String,
    /// Number of training runs folded into the model.
    pub episodes: u64,
    pub seeds: Vec<u64>,
}

/// A selector model plus its provenance, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArchive {
    pub model: SelectorModel,
    pub provenance: Provenance,
}

impl ModelArchive {
    pub fn new(model: SelectorModel, provenance: Provenance) -> Self {
        ModelArchive { model, provenance }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("AOSMODEL v1\n");
        out.push_str(&format!("feature_dim {}\n", self.model.feature_dim()));
        out.push_str(&format!("sections {}\n", self.model.sections()));
        let names: Vec<&str> = BaseOp::ALL.iter().map(|op| op.name()).collect();
        out.push_str(&format!("operators {}\n", names.join(" ")));
        for (k, e) in self.model.entries().iter().enumerate() {
            out.push_str(&format!("{k} {} {} {} {}", e.successes, e.usage, e.q, e.credit));
            for c in &e.centre {
                out.push_str(&format!(" {c}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("meta: instance={}\n", self.provenance.instance_id));
        out.push_str(&format!("meta: episodes={}\n", self.provenance.episodes));
        let seeds: Vec<String> = self.provenance.seeds.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("meta: seeds={}\n", seeds.join(",")));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ArchiveError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let corrupt = |line: usize, message: String| ArchiveError::Corrupt { line, message };

        let (_, header) = lines
            .next()
            .ok_or_else(|| ArchiveError::UnsupportedHeader("<empty file>".into()))?;
        if header != "AOSMODEL v1" {
            return Err(ArchiveError::UnsupportedHeader(header.to_string()));
        }

        let mut expect_usize = |key: &str| -> Result<usize, ArchiveError> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| corrupt(0, format!("file ends before `{key}`")))?;
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| corrupt(no, format!("expected `{key} <value>`, got `{line}`")))?;
            let v: usize = rest
                .trim()
                .parse()
                .map_err(|_| corrupt(no, format!("invalid {key} value `{}`", rest.trim())))?;
            if v == 0 {
                return Err(corrupt(no, format!("{key} must be at least 1")));
            }
            Ok(v)
        };
        let feature_dim = expect_usize("feature_dim")?;
        let sections = expect_usize("sections")?;

        let (ops_no, ops_line) = lines
            .next()
            .ok_or_else(|| corrupt(0, "file ends before the operator list".into()))?;
        let expected_ops: Vec<&str> = BaseOp::ALL.iter().map(|op| op.name()).collect();
        let got_ops: Vec<&str> = ops_line
            .strip_prefix("operators")
            .map(|r| r.split_whitespace().collect())
            .unwrap_or_default();
        if got_ops != expected_ops {
            return Err(corrupt(
                ops_no,
                format!("operator pool mismatch: expected `{}`", expected_ops.join(" ")),
            ));
        }

        let entry_count = BaseOp::ALL.len() * sections;
        let mut entries = Vec::with_capacity(entry_count);
        for k in 0..entry_count {
            let (no, line) = lines
                .next()
                .ok_or_else(|| corrupt(0, format!("file ends before entry {k} of {entry_count}")))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 5 + feature_dim {
                return Err(corrupt(
                    no,
                    format!("entry {k} has {} fields, expected {}", tokens.len(), 5 + feature_dim),
                ));
            }
            let field_u64 = |idx: usize, what: &str| -> Result<u64, ArchiveError> {
                tokens[idx]
                    .parse()
                    .map_err(|_| corrupt(no, format!("entry {k} field {what}: invalid `{}`", tokens[idx])))
            };
            let field_f64 = |idx: usize, what: &str| -> Result<f64, ArchiveError> {
                let v: f64 = tokens[idx]
                    .parse()
                    .map_err(|_| corrupt(no, format!("entry {k} field {what}: invalid `{}`", tokens[idx])))?;
                if !v.is_finite() {
                    return Err(corrupt(no, format!("entry {k} field {what}: must be finite")));
                }
                Ok(v)
            };
            let index = field_u64(0, "index")?;
            if index != k as u64 {
                return Err(corrupt(no, format!("expected entry index {k}, got {index}")));
            }
            let successes = field_u64(1, "successes")?;
            let usage = field_u64(2, "usage")?;
            let q = field_f64(3, "q")?;
            let credit = field_f64(4, "credit")?;
            let mut centre = Vec::with_capacity(feature_dim);
            for i in 0..feature_dim {
                centre.push(field_f64(5 + i, &format!("centre[{i}]"))?);
            }
            entries.push(CentreEntry {
                centre,
                successes,
                usage,
                q,
                credit,
            });
        }

        let mut provenance = Provenance::default();
        for (no, line) in lines {
            let Some(meta) = line.strip_prefix("meta:") else {
                return Err(corrupt(no, format!("unexpected content `{line}` after entries")));
            };
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("instance=") {
                provenance.instance_id = v.to_string();
            } else if let Some(v) = meta.strip_prefix("episodes=") {
                provenance.episodes = v
                    .parse()
                    .map_err(|_| corrupt(no, format!("invalid episodes value `{v}`")))?;
            } else if let Some(v) = meta.strip_prefix("seeds=") {
                if !v.is_empty() {
                    provenance.seeds = v
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse()
                                .map_err(|_| corrupt(no, format!("invalid seed `{s}`")))
                        })
                        .collect::<Result<_, _>>()?;
                }
            }
            // Unknown meta keys are ignored so the format can grow.
        }

        let model = SelectorModel::from_entries(feature_dim, sections, entries)
            .map_err(|e| ArchiveError::Incompatible(e.to_string()))?;
        Ok(ModelArchive { model, provenance })
    }

    pub fn save_to(&self, path: impl AsRef<Path>) -> Result<(), ArchiveError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load_from(path: impl AsRef<Path>) -> Result<Self, ArchiveError> {
        let text = std::fs::read_to_string(path)?;
        ModelArchive::from_text(&text)
    }

    /// The archived model, checked against the consuming run's configuration.
    pub fn compatible_model(&self, feature_dim: usize, sections: usize) -> Result<SelectorModel, ArchiveError> {
        if self.model.feature_dim() != feature_dim {
            return Err(ArchiveError::Incompatible(format!(
                "archive has feature_dim {}, run expects {feature_dim}",
                self.model.feature_dim()
            )));
        }
        if self.model.sections() != sections {
            return Err(ArchiveError::Incompatible(format!(
                "archive has {} sections, run expects {sections}",
                self.model.sections()
            )));
        }
        Ok(self.model.clone())
    }
}

/// Convex combination of two models of identical shape:
/// `(1 - delta) * alpha + delta * beta` on q values, credits and centres;
/// counters combine the same way and round half-up. `delta = 0` returns
/// `alpha` exactly, `delta = 1` returns `beta` exactly.
pub fn blend(alpha: &SelectorModel, beta: &SelectorModel, delta: f64) -> Result<SelectorModel, SelectorError> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(SelectorError::InvalidParameter(format!(
            "blend weight must lie in [0, 1], got {delta}"
        )));
    }
    if alpha.feature_dim() != beta.feature_dim() || alpha.sections() != beta.sections() {
        return Err(SelectorError::ShapeMismatch(format!(
            "cannot blend a {}x{} model with a {}x{} model",
            alpha.feature_dim(),
            alpha.sections(),
            beta.feature_dim(),
            beta.sections()
        )));
    }
    if delta == 0.0 {
        return Ok(alpha.clone());
    }
    if delta == 1.0 {
        return Ok(beta.clone());
    }
    // a + d * (b - a) rather than (1 - d) * a + d * b: blending a model with
    // itself then reproduces it bit for bit.
    let mix = |a: f64, b: f64| a + delta * (b - a);
    let mix_count = |a: u64, b: u64| (mix(a as f64, b as f64) + 0.5).floor() as u64;
    let entries = alpha
        .entries()
        .iter()
        .zip(beta.entries())
        .map(|(a, b)| CentreEntry {
            centre: a.centre.iter().zip(&b.centre).map(|(x, y)| mix(*x, *y)).collect(),
            successes: mix_count(a.successes, b.successes),
            usage: mix_count(a.usage, b.usage),
            q: mix(a.q, b.q),
            credit: mix(a.credit, b.credit),
        })
        .collect();
    SelectorModel::from_entries(alpha.feature_dim(), alpha.sections(), entries)
}

/// The five experiment arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Uniform random operator choice, no learning.
    Random,
    /// Fresh model per repetition, online learning only.
    OneRun,
    /// Model carried from repetition to repetition.
    AllRun,
    /// Fresh start from a pre-trained archive every repetition.
    OneRunWithArchive,
    /// Pre-trained archive seeds the first repetition, then carried.
    AllRunWithArchive,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Random,
        Variant::OneRun,
        Variant::AllRun,
        Variant::OneRunWithArchive,
        Variant::AllRunWithArchive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Random => "random",
            Variant::OneRun => "one-run",
            Variant::AllRun => "all-run",
            Variant::OneRunWithArchive => "one-run-wl",
            Variant::AllRunWithArchive => "all-run-wl",
        }
    }

    pub fn needs_archive(self) -> bool {
        matches!(self, Variant::OneRunWithArchive | Variant::AllRunWithArchive)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Variant::ALL.iter().map(|v| v.label()).collect();
                format!("unknown variant `{s}` (expected one of {})", known.join(", "))
            })
    }
}

/// Initial model and effective selection parameters for one repetition of a
/// variant. `carried` is the blended model handed over from the previous
/// repetition, if any.
pub fn variant_policy(
    variant: Variant,
    rep: usize,
    archive: Option<&ModelArchive>,
    carried: Option<SelectorModel>,
    rl: &RlParams,
) -> Result<(SelectorModel, RlParams), ArchiveError> {
    let fresh = || SelectorModel::new(FEATURE_DIM, rl.sections);
    let from_archive = |label: &'static str| -> Result<SelectorModel, ArchiveError> {
        archive
            .ok_or(ArchiveError::MissingArchive(label))?
            .compatible_model(FEATURE_DIM, rl.sections)
    };
    let model = match variant {
        Variant::Random | Variant::OneRun => fresh(),
        Variant::AllRun => carried.unwrap_or_else(fresh),
        Variant::OneRunWithArchive => from_archive("the one-run-wl variant")?,
        Variant::AllRunWithArchive => match carried {
            Some(m) if rep > 0 => m,
            _ => from_archive("the all-run-wl variant")?,
        },
    };
    let params = match variant {
        // Uniform choice, frozen model: explore always, learn never.
        Variant::Random => RlParams {
            epsilon: 1.0,
            training: false,
            ..rl.clone()
        },
        _ => rl.clone(),
    };
    Ok((model, params))
}
