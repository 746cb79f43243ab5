//! Neural DNF models over binary attributes: semi-symbolic layers, the
//! vanilla and exactly-one constrained architectures, training with a
//! delta schedule, the prune/finetune/threshold pipeline, and extraction
//! of stratified logic programs that reproduce the discretised network.

pub mod data;
pub mod error;
pub mod math;
pub mod metrics;
pub mod models;
pub mod post_training;
pub mod rules;
pub mod semi_symbolic;
pub mod training;

pub use error::{Error, Result};
pub use math::{OptimConfig, RealMatrix};
pub use models::{
    init_eo, init_mlp, init_vanilla, interpret_bipolar, predict_argmax, Checkpoint, MlpBaseline,
    ModelKind, NeuralDnfEoModel, NeuralDnfModel,
};
pub use post_training::{run_pipeline, PipelineReport, PostTrainConfig};
pub use rules::{Literal, Rule, RuleSet};
pub use semi_symbolic::{DeltaSchedule, LayerKind, SemiSymbolicLayer};
pub use training::{EpochRecord, EvalMetric, LossKind, TrainConfig};

/// Default RNG seed used across the experiments.
pub const DEFAULT_SEED: u64 = 73;
