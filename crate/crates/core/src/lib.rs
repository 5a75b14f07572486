//! Binary artificial bee colony solver with an adaptive, reinforcement-learning
//! operator selection layer.
//!
//! The crate is organised bottom-up:
//!
//! * [`bits`] — packed binary vectors and Hamming distance,
//! * [`problems`] — OneMax and the Set Union Knapsack Problem (SUKP),
//! * [`operators`] — the pool of binary perturbation operators,
//! * [`features`] — the 19-component state description of a search situation,
//! * [`selector`] — cluster-centre Q estimation with epsilon-greedy selection,
//! * [`transfer`] — model archives, blending and run-to-run transfer policies,
//! * [`colony`] — the bee colony main loop,
//! * [`stats`] — Wilcoxon signed-rank test and rank aggregation,
//! * [`experiment`] — multi-instance, multi-variant benchmark runner and CSV output.

pub mod bits;
pub mod colony;
pub mod experiment;
pub mod features;
pub mod operators;
pub mod problems;
pub mod selector;
pub mod stats;
pub mod transfer;

pub use bits::BinaryVector;
pub use colony::{ColonyConfig, RunRecord};
pub use features::{IndividualContext, PopulationSnapshot, StateFeatures, FEATURE_DIM};
pub use operators::{BaseOp, OperatorContext, OperatorParams};
pub use problems::{Fitness, OneMaxInstance, Problem, SukpInstance};
pub use selector::{Decision, OperatorId, RlParams, SelectorModel};
pub use transfer::{ModelArchive, Provenance, Variant};
