//! Post-training pipeline: greedy weight pruning, masked finetuning,
//! validation-chosen weight thresholding, and extraction of the resulting
//! discretized network as a stratified logic program.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::math::OptimConfig;
use crate::models::{ModelKind, NeuralDnfEoModel, NeuralDnfModel};
use crate::rules::{sanitize_atom, Literal, Rule, RuleSet};
use crate::semi_symbolic::DeltaSchedule;
use crate::training::{
    eval_dnf, outputs_metric, train_eo, train_vanilla, EpochRecord, EvalMetric, LossKind,
    TrainConfig,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostTrainConfig {
    pub prune_epsilon: f64,
    pub metric: EvalMetric,
    pub threshold_step: f64,
    pub finetune_epochs: usize,
    pub finetune_loss: LossKind,
    pub finetune_batch_size: usize,
    pub finetune_optimizer: OptimConfig,
    pub seed: u64,
}

impl Default for PostTrainConfig {
    fn default() -> Self {
        PostTrainConfig {
            prune_epsilon: 0.005,
            metric: EvalMetric::Jaccard,
            threshold_step: 0.01,
            finetune_epochs: 50,
            finetune_loss: LossKind::CrossEntropy,
            finetune_batch_size: 32,
            finetune_optimizer: OptimConfig::default(),
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl PostTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prune_epsilon < 0.0 || !self.prune_epsilon.is_finite() {
            return Err(Error::InvalidArgument(
                "prune epsilon must be nonnegative".into(),
            ));
        }
        if self.threshold_step <= 0.0 || !self.threshold_step.is_finite() {
            return Err(Error::InvalidArgument(
                "threshold grid step must be positive".into(),
            ));
        }
        self.finetune_optimizer.validate()
    }
}

/// Stage-by-stage metric values plus prune accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub metric: EvalMetric,
    pub after_train: f64,
    pub after_prune: f64,
    pub after_finetune: f64,
    pub after_threshold: f64,
    pub rules_metric: f64,
    pub threshold: f64,
    pub pruned_weights: usize,
    pub removed_disjuncts: usize,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(format!("report encode: {e}")))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PruneStats {
    pub pruned_weights: usize,
    pub removed_disjuncts: usize,
}

/// Greedily zero weights whose removal costs at most `epsilon` of the
/// train-set metric: disjunctive layer first, then conjunctive, row-major
/// within each, with the reference metric updated after every accepted
/// prune. Finally, disjunctive weights pointing at all-zero conjunction
/// rows are removed. For EO models pass the plain DNF (C2 stays out).
pub fn prune(
    model: &mut NeuralDnfModel,
    train: &Dataset,
    epsilon: f64,
    metric: EvalMetric,
) -> Result<PruneStats> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(
            "prune epsilon must be nonnegative".into(),
        ));
    }
    let mut stats = PruneStats::default();
    let mut reference = eval_dnf(model, train, metric)?;

    for disjunctive_first in [true, false] {
        let (rows, cols) = {
            let layer = if disjunctive_first {
                &model.disjunctive
            } else {
                &model.conjunctive
            };
            (layer.weights.rows(), layer.weights.cols())
        };
        for r in 0..rows {
            for c in 0..cols {
                let layer = if disjunctive_first {
                    &mut model.disjunctive
                } else {
                    &mut model.conjunctive
                };
                let old = layer.weights.get(r, c);
                if old == 0.0 {
                    continue;
                }
                layer.weights.set(r, c, 0.0);
                let candidate = eval_dnf(model, train, metric)?;
                if reference - candidate <= epsilon {
                    let layer = if disjunctive_first {
                        &mut model.disjunctive
                    } else {
                        &mut model.conjunctive
                    };
                    layer.prune_weight(r, c);
                    reference = candidate;
                    stats.pruned_weights += 1;
                } else {
                    let layer = if disjunctive_first {
                        &mut model.disjunctive
                    } else {
                        &mut model.conjunctive
                    };
                    layer.weights.set(r, c, old);
                }
            }
        }
    }

    // Disjuncts over empty conjunctions can never fire as rules: drop them.
    for j in 0..model.n_conj() {
        let empty = model.conjunctive.weights.row(j).iter().all(|w| *w == 0.0);
        if !empty {
            continue;
        }
        for r in 0..model.n_out() {
            if model.disjunctive.weights.get(r, j) != 0.0 {
                model.disjunctive.prune_weight(r, j);
                stats.removed_disjuncts += 1;
            }
        }
    }
    Ok(stats)
}

/// Finetune config: delta pinned at 1, prune masks enforced by training.
pub fn finetune_config(cfg: &PostTrainConfig) -> TrainConfig {
    TrainConfig {
        loss: cfg.finetune_loss,
        epochs: cfg.finetune_epochs,
        batch_size: cfg.finetune_batch_size,
        seed: cfg.seed,
        optimizer: cfg.finetune_optimizer.clone(),
        delta_schedule: DeltaSchedule::constant_one(),
        l1_weight: 1e-4,
        shuffle: true,
    }
}

/// Retrain without touching pruned weights. Zero epochs is a no-op.
pub fn finetune_vanilla(
    model: &mut NeuralDnfModel,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    if cfg.epochs == 0 {
        return Ok(Vec::new());
    }
    train_vanilla(model, train, val, cfg)
}

/// EO finetuning reattaches the frozen constraint layer for this stage.
pub fn finetune_eo(
    model: &mut NeuralDnfEoModel,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    if cfg.epochs == 0 {
        return Ok(Vec::new());
    }
    train_eo(model, train, val, cfg)
}

/// Snap each weight to sign(w)·6 if |w| > t, else 0, on both DNF layers;
/// delta magnitudes are set to 1 so the result is the discrete semantics.
pub fn apply_threshold(model: &NeuralDnfModel, t: f64) -> Result<NeuralDnfModel> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument("threshold must be >= 0".into()));
    }
    let mut out = model.clone();
    for layer in [&mut out.conjunctive, &mut out.disjunctive] {
        for w in layer.weights.entries_mut() {
            *w = if w.abs() > t { w.signum() * 6.0 } else { 0.0 };
        }
    }
    out.set_delta_magnitude(1.0);
    Ok(out)
}

/// Try every grid point 0, step, 2·step, … up to max |w| and keep the
/// smallest t attaining the best validation metric.
pub fn threshold_search(
    model: &NeuralDnfModel,
    val: &Dataset,
    step: f64,
    metric: EvalMetric,
) -> Result<(f64, NeuralDnfModel)> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidArgument(
            "threshold grid step must be positive".into(),
        ));
    }
    let max_w = model
        .conjunctive
        .weights
        .max_abs()
        .max(model.disjunctive.weights.max_abs());
    let n_points = (max_w / step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n_points).map(|i| i as f64 * step).collect();
    let scored: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| {
            let m = apply_threshold(model, t)?;
            Ok((t, eval_dnf(&m, val, metric)?))
        })
        .collect::<Result<_>>()?;
    let best = scored
        .iter()
        .map(|(_, m)| *m)
        .fold(f64::NEG_INFINITY, f64::max);
    let t_star = scored
        .iter()
        .find(|(_, m)| *m == best)
        .map(|(t, _)| *t)
        .expect("grid is nonempty");
    Ok((t_star, apply_threshold(model, t_star)?))
}

/// Read a discretized model (weights all in {0, ±6}) as a logic program.
/// Positive disjunctive weights inline the conjunction body; negative ones
/// go through a `conj_j` auxiliary predicate under negation-as-failure.
pub fn extract_rules(
    model: &NeuralDnfModel,
    attribute_names: &[String],
    target_names: &[String],
) -> Result<RuleSet> {
    if attribute_names.len() != model.n_in() || target_names.len() != model.n_out() {
        return Err(Error::ShapeMismatch(
            "name lists must match model dimensions".into(),
        ));
    }
    for layer in [&model.conjunctive, &model.disjunctive] {
        if layer.weights.entries().iter().any(|w| ![0.0, 6.0, -6.0].contains(w)) {
            return Err(Error::InvalidState(
                "extraction requires all weights in {0, +6, -6}".into(),
            ));
        }
    }
    let attrs: Vec<String> = attribute_names.iter().map(|n| sanitize_atom(n)).collect();
    let targets: Vec<String> = target_names.iter().map(|n| sanitize_atom(n)).collect();

    let bodies: Vec<Vec<Literal>> = (0..model.n_conj())
        .map(|j| {
            model
                .conjunctive
                .weights
                .row(j)
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| {
                    if *w > 0.0 {
                        Literal::pos(attrs[i].clone())
                    } else {
                        Literal::neg(attrs[i].clone())
                    }
                })
                .collect()
        })
        .collect();

    let mut rules = Vec::new();
    let mut defined_aux = std::collections::BTreeSet::new();
    for r in 0..model.n_out() {
        for j in 0..model.n_conj() {
            let w = model.disjunctive.weights.get(r, j);
            if w == 0.0 {
                continue;
            }
            if bodies[j].is_empty() {
                return Err(Error::InvalidState(format!(
                    "disjunctive weight references empty conjunction {j}"
                )));
            }
            if w > 0.0 {
                rules.push(Rule::new(targets[r].clone(), bodies[j].clone())?);
            } else {
                let aux = format!("conj_{j}");
                rules.push(Rule::new(
                    targets[r].clone(),
                    vec![Literal::neg(aux.clone())],
                )?);
                if defined_aux.insert(j) {
                    rules.push(Rule::new(aux, bodies[j].clone())?);
                }
            }
        }
    }
    RuleSet::new(rules, &targets)
}

/// Evaluate a rule set against a dataset with the same metric conventions
/// as the network (predicted index set = target atoms derived true).
pub fn eval_rules(rules: &RuleSet, data: &Dataset, metric: EvalMetric) -> Result<f64> {
    let attrs: Vec<String> = data.attribute_names.iter().map(|n| sanitize_atom(n)).collect();
    let targets: Vec<String> = data.output_names.iter().map(|n| sanitize_atom(n)).collect();
    let outputs: Vec<Vec<f64>> = data
        .samples
        .par_iter()
        .map(|s| {
            let assignment: BTreeMap<String, bool> = attrs
                .iter()
                .cloned()
                .zip(s.attributes.iter().copied())
                .collect();
            let truth = rules.evaluate(&assignment)?;
            Ok(targets
                .iter()
                .map(|t| if truth.contains(t) { 1.0 } else { -1.0 })
                .collect())
        })
        .collect::<Result<_>>()?;
    outputs_metric(&outputs, data, metric)
}

/// The full prune → finetune → threshold → extract pipeline. Prune
/// decisions use the train set, threshold selection the validation set;
/// the reported stage metrics are computed on `test`.
pub fn run_pipeline(
    model: &mut ModelKind,
    train: &Dataset,
    val: &Dataset,
    test: &Dataset,
    cfg: &PostTrainConfig,
) -> Result<(NeuralDnfModel, RuleSet, PipelineReport)> {
    cfg.validate()?;
    let metric = cfg.metric;
    let ft_cfg = finetune_config(cfg);

    let after_train = eval_base(model, test, metric)?;
    let stats = prune(base_mut(model)?, train, cfg.prune_epsilon, metric)?;
    let after_prune = eval_base(model, test, metric)?;

    match model {
        ModelKind::Vanilla(m) => {
            finetune_vanilla(m, train, val, &ft_cfg)?;
        }
        ModelKind::Eo(m) => {
            finetune_eo(m, train, val, &ft_cfg)?;
        }
        ModelKind::Mlp(_) => unreachable!("rejected by base_mut"),
    }
    let after_finetune = eval_base(model, test, metric)?;

    let (t_star, discretized) = threshold_search(base_mut(model)?, val, cfg.threshold_step, metric)?;
    let after_threshold = eval_dnf(&discretized, test, metric)?;

    let rules = extract_rules(&discretized, &train.attribute_names, &train.output_names)?;
    let rules_metric = eval_rules(&rules, test, metric)?;

    let report = PipelineReport {
        metric,
        after_train,
        after_prune,
        after_finetune,
        after_threshold,
        rules_metric,
        threshold: t_star,
        pruned_weights: stats.pruned_weights,
        removed_disjuncts: stats.removed_disjuncts,
    };
    Ok((discretized, rules, report))
}

fn base_mut(model: &mut ModelKind) -> Result<&mut NeuralDnfModel> {
    match model {
        ModelKind::Vanilla(m) => Ok(m),
        ModelKind::Eo(m) => Ok(&mut m.base),
        ModelKind::Mlp(_) => Err(Error::InvalidArgument(
            "the post-training pipeline applies to DNF models".into(),
        )),
    }
}

fn eval_base(model: &mut ModelKind, data: &Dataset, metric: EvalMetric) -> Result<f64> {
    eval_dnf(base_mut(model)?, data, metric)
}
