//! Minibatch training loops for the DNF models and the MLP baseline,
//! plus batch evaluation helpers shared with the post-training pipeline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Target, TaskKind};
use crate::error::{Error, Result};
use crate::math::{
    adam_step, binary_cross_entropy, binary_cross_entropy_grad, cross_entropy, lr_at_epoch,
    softmax, AdamState, OptimConfig, RealMatrix,
};
use crate::metrics::{accuracy, macro_f1, mean_jaccard};
use crate::models::{
    interpret_bipolar, predict_argmax, MlpBaseline, NeuralDnfEoModel, NeuralDnfModel,
};
use crate::semi_symbolic::{DeltaSchedule, SemiSymbolicLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    BinaryCrossEntropy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimConfig,
    pub delta_schedule: DeltaSchedule,
    pub l1_weight: f64,
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn new(loss: LossKind, epochs: usize, batch_size: usize, seed: u64) -> Self {
        TrainConfig {
            loss,
            epochs,
            batch_size,
            seed,
            optimizer: OptimConfig::default(),
            delta_schedule: DeltaSchedule::for_epochs(epochs),
            l1_weight: 1e-4,
            shuffle: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub delta: f64,
    pub lr: f64,
    pub val_metric: f64,
}

/// History CSV with columns epoch, loss, delta, lr, val_metric.
pub fn history_to_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,loss,delta,lr,val_metric\n");
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.loss, r.delta, r.lr, r.val_metric
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMetric {
    Jaccard,
    MacroF1,
    Accuracy,
}

/// All per-epoch sample orders, derived up front from the seed so every
/// training loop (DNF, EO, MLP) consumes the RNG identically.
fn epoch_orders(seed: u64, epochs: usize, n: usize, shuffle: bool) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..epochs)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            if shuffle {
                order.shuffle(&mut rng);
            }
            order
        })
        .collect()
}

fn target_class(target: &Target) -> Result<usize> {
    match target {
        Target::Class(c) => Ok(*c),
        Target::Labels(_) => Err(Error::InvalidArgument(
            "cross-entropy needs a multi-class dataset".into(),
        )),
    }
}

/// BCE targets: label bits for multi-label, one-hot for multi-class.
fn target_bits(target: &Target, arity: usize) -> Vec<f64> {
    match target {
        Target::Class(c) => (0..arity).map(|i| (i == *c) as u8 as f64).collect(),
        Target::Labels(ls) => ls.iter().map(|&b| b as u8 as f64).collect(),
    }
}

/// Softmax CE on raw (pre-tanh) logits: loss and dL/dz.
fn ce_loss_grad(logits: &[f64], target: &Target) -> Result<(f64, Vec<f64>)> {
    let class = target_class(target)?;
    let probs = softmax(logits)?;
    let loss = cross_entropy(logits, class)?;
    let grad = probs
        .iter()
        .enumerate()
        .map(|(i, p)| p - (i == class) as u8 as f64)
        .collect();
    Ok((loss, grad))
}

/// BCE on tanh outputs mapped to (y+1)/2: loss and dL/dy.
fn bce_loss_grad(y: &[f64], target: &Target) -> Result<(f64, Vec<f64>)> {
    let t = target_bits(target, y.len());
    let p: Vec<f64> = y.iter().map(|v| (v + 1.0) / 2.0).collect();
    let loss = binary_cross_entropy(&p, &t)?;
    let grad = binary_cross_entropy_grad(&p, &t)?
        .iter()
        .map(|g| g * 0.5)
        .collect();
    Ok((loss, grad))
}

fn l1_penalty(layers: &[&SemiSymbolicLayer]) -> f64 {
    layers
        .iter()
        .map(|l| l.weights.entries().iter().map(|w| w.abs()).sum::<f64>())
        .sum()
}

fn add_l1_grad(grad: &mut RealMatrix, layer: &SemiSymbolicLayer, l1: f64) {
    for (g, w) in grad.entries_mut().iter_mut().zip(layer.weights.entries()) {
        *g += l1 * w.signum() * (*w != 0.0) as u8 as f64;
    }
}

fn check_shapes(data: &Dataset, n_in: usize, n_out: usize) -> Result<()> {
    if data.n_attributes() != n_in {
        return Err(Error::ShapeMismatch(format!(
            "dataset has {} attributes but the model expects {n_in}",
            data.n_attributes()
        )));
    }
    if data.task.arity() != n_out {
        return Err(Error::ShapeMismatch(format!(
            "dataset arity {} does not match model output size {n_out}",
            data.task.arity()
        )));
    }
    Ok(())
}

/// Batch-evaluate a plain DNF model (no constraint layer) over a dataset.
pub fn dnf_outputs(model: &NeuralDnfModel, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    data.samples
        .par_iter()
        .map(|s| model.forward(&s.bipolar()))
        .collect()
}

/// Compute a metric from per-sample output vectors thresholded at 0.
pub fn outputs_metric(outputs: &[Vec<f64>], data: &Dataset, metric: EvalMetric) -> Result<f64> {
    match metric {
        EvalMetric::Accuracy => {
            let preds: Vec<usize> = outputs
                .iter()
                .map(|y| predict_argmax(y))
                .collect::<Result<_>>()?;
            let targets: Vec<usize> = data
                .samples
                .iter()
                .map(|s| target_class(&s.target))
                .collect::<Result<_>>()?;
            accuracy(&preds, &targets)
        }
        EvalMetric::Jaccard => {
            let preds: Vec<Vec<usize>> =
                outputs.iter().map(|y| interpret_bipolar(y, 0.0)).collect();
            let targets: Vec<Vec<usize>> = data
                .samples
                .iter()
                .map(|s| match &s.target {
                    Target::Class(c) => vec![*c],
                    Target::Labels(ls) => ls
                        .iter()
                        .enumerate()
                        .filter(|(_, &b)| b)
                        .map(|(i, _)| i)
                        .collect(),
                })
                .collect();
            mean_jaccard(&preds, &targets)
        }
        EvalMetric::MacroF1 => {
            let n_labels = data.task.arity();
            let preds: Vec<Vec<bool>> = outputs
                .iter()
                .map(|y| y.iter().map(|v| *v > 0.0).collect())
                .collect();
            let targets: Vec<Vec<bool>> = data
                .samples
                .iter()
                .map(|s| match &s.target {
                    Target::Class(c) => (0..n_labels).map(|i| i == *c).collect(),
                    Target::Labels(ls) => ls.clone(),
                })
                .collect();
            macro_f1(&preds, &targets, n_labels)
        }
    }
}

pub fn eval_dnf(model: &NeuralDnfModel, data: &Dataset, metric: EvalMetric) -> Result<f64> {
    outputs_metric(&dnf_outputs(model, data)?, data, metric)
}

/// Evaluate the MLP. With `tanh_interpret` the logits are squashed through
/// tanh first (the 0-threshold interpretability probe); argmax accuracy is
/// unaffected by the squashing.
pub fn eval_mlp(
    model: &MlpBaseline,
    data: &Dataset,
    metric: EvalMetric,
    tanh_interpret: bool,
) -> Result<f64> {
    let outputs: Vec<Vec<f64>> = data
        .samples
        .par_iter()
        .map(|s| {
            if tanh_interpret {
                model.forward_tanh(&s.bipolar())
            } else {
                model.forward(&s.bipolar())
            }
        })
        .collect::<Result<_>>()?;
    outputs_metric(&outputs, data, metric)
}

/// Default validation metric for each task kind in the DNF experiments.
pub fn default_val_metric(task: TaskKind) -> EvalMetric {
    match task {
        TaskKind::MultiClass { .. } => EvalMetric::Jaccard,
        TaskKind::MultiLabel { .. } => EvalMetric::MacroF1,
    }
}

struct LayerTrainState {
    adam: AdamState,
}

impl LayerTrainState {
    fn for_layer(layer: &SemiSymbolicLayer) -> Self {
        LayerTrainState {
            adam: AdamState::new(layer.weights.rows(), layer.weights.cols()),
        }
    }
}

/// Train the vanilla DNF model. CE requires a multi-class dataset; BCE
/// works for multi-label (label bits) and multi-class (one-hot) targets.
pub fn train_vanilla(
    model: &mut NeuralDnfModel,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    train_dnf_impl(model, None, train, val, cfg)
}

/// Train the EO model with cross-entropy applied to the constraint-layer
/// outputs. Validation is Jaccard on the C1 outputs (no C2).
pub fn train_eo(
    model: &mut NeuralDnfEoModel,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    if cfg.loss != LossKind::CrossEntropy {
        return Err(Error::InvalidArgument(
            "the EO model trains with cross-entropy".into(),
        ));
    }
    train_dnf_impl(&mut model.base, Some(&model.constraint), train, val, cfg)
}

fn train_dnf_impl(
    model: &mut NeuralDnfModel,
    constraint: Option<&SemiSymbolicLayer>,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    check_shapes(train, model.n_in(), model.n_out())?;
    check_shapes(val, model.n_in(), model.n_out())?;
    train.validate()?;
    if train.samples.is_empty() || val.samples.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be nonempty".into(),
        ));
    }

    let orders = epoch_orders(cfg.seed, cfg.epochs, train.samples.len(), cfg.shuffle);
    let mut conj_state = LayerTrainState::for_layer(&model.conjunctive);
    let mut disj_state = LayerTrainState::for_layer(&model.disjunctive);
    let val_metric = default_val_metric(train.task);
    let mut history = Vec::with_capacity(cfg.epochs);

    for (epoch, order) in orders.iter().enumerate() {
        let delta = cfg.delta_schedule.delta_at_epoch(epoch);
        model.set_delta_magnitude(delta);
        let lr = lr_at_epoch(&cfg.optimizer, epoch);

        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut dw_conj = RealMatrix::zeros(model.n_conj(), model.n_in());
            let mut dw_disj = RealMatrix::zeros(model.n_out(), model.n_conj());
            for &idx in batch {
                let sample = &train.samples[idx];
                let x = sample.bipolar();
                let hidden = model.conjunctive.forward(&x)?;
                // CE reads the raw (pre-tanh) activation of the final
                // stage as logits; BCE reads tanh outputs as (y+1)/2.
                let (loss, dw2, dhidden) = match (constraint, cfg.loss) {
                    (Some(c2), _) => {
                        let y = model.disjunctive.forward(&hidden)?;
                        let z_c2 = c2.forward_raw(&y)?;
                        let (loss, dz_c2) = ce_loss_grad(&z_c2, &sample.target)?;
                        let (_, dy) = c2.backward_raw(&y, &dz_c2)?;
                        let (dw2, dhidden) = model.disjunctive.backward(&hidden, &y, &dy)?;
                        (loss, dw2, dhidden)
                    }
                    (None, LossKind::CrossEntropy) => {
                        let z = model.disjunctive.forward_raw(&hidden)?;
                        let (loss, dz) = ce_loss_grad(&z, &sample.target)?;
                        let (dw2, dhidden) = model.disjunctive.backward_raw(&hidden, &dz)?;
                        (loss, dw2, dhidden)
                    }
                    (None, LossKind::BinaryCrossEntropy) => {
                        let y = model.disjunctive.forward(&hidden)?;
                        let (loss, dy) = bce_loss_grad(&y, &sample.target)?;
                        let (dw2, dhidden) = model.disjunctive.backward(&hidden, &y, &dy)?;
                        (loss, dw2, dhidden)
                    }
                };
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite training loss at epoch {epoch}"
                    )));
                }
                loss_sum += loss;
                let (dw1, _) = model.conjunctive.backward(&x, &hidden, &dhidden)?;
                accumulate(&mut dw_disj, &dw2);
                accumulate(&mut dw_conj, &dw1);
            }
            scale(&mut dw_conj, 1.0 / batch.len() as f64);
            scale(&mut dw_disj, 1.0 / batch.len() as f64);
            add_l1_grad(&mut dw_conj, &model.conjunctive, cfg.l1_weight);
            add_l1_grad(&mut dw_disj, &model.disjunctive, cfg.l1_weight);
            adam_step(
                &mut model.conjunctive.weights,
                &dw_conj,
                &mut conj_state.adam,
                &cfg.optimizer,
                lr,
                Some(&model.conjunctive.prune_mask),
            )?;
            adam_step(
                &mut model.disjunctive.weights,
                &dw_disj,
                &mut disj_state.adam,
                &cfg.optimizer,
                lr,
                Some(&model.disjunctive.prune_mask),
            )?;
        }

        let mean_loss = loss_sum / train.samples.len() as f64
            + cfg.l1_weight * l1_penalty(&[&model.conjunctive, &model.disjunctive]);
        let val = eval_dnf(model, val, val_metric)?;
        history.push(EpochRecord {
            epoch,
            loss: mean_loss,
            delta,
            lr,
            val_metric: val,
        });
    }
    Ok(history)
}

/// Train the MLP baseline with the same loop structure (identical RNG
/// consumption) but no delta schedule and no L1 term.
pub fn train_mlp(
    model: &mut MlpBaseline,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    check_shapes(train, model.n_in(), model.n_out())?;
    check_shapes(val, model.n_in(), model.n_out())?;
    if train.samples.is_empty() || val.samples.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be nonempty".into(),
        ));
    }

    let orders = epoch_orders(cfg.seed, cfg.epochs, train.samples.len(), cfg.shuffle);
    let mut st_w1 = AdamState::new(model.w1.rows(), model.w1.cols());
    let mut st_b1 = AdamState::new(1, model.n_hidden());
    let mut st_w2 = AdamState::new(model.w2.rows(), model.w2.cols());
    let mut st_b2 = AdamState::new(1, model.n_out());
    let val_metric = match train.task {
        TaskKind::MultiClass { .. } => EvalMetric::Accuracy,
        TaskKind::MultiLabel { .. } => EvalMetric::MacroF1,
    };
    let mut history = Vec::with_capacity(cfg.epochs);

    for (epoch, order) in orders.iter().enumerate() {
        let lr = lr_at_epoch(&cfg.optimizer, epoch);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut dw1 = RealMatrix::zeros(model.w1.rows(), model.w1.cols());
            let mut db1 = RealMatrix::zeros(1, model.n_hidden());
            let mut dw2 = RealMatrix::zeros(model.w2.rows(), model.w2.cols());
            let mut db2 = RealMatrix::zeros(1, model.n_out());
            for &idx in batch {
                let sample = &train.samples[idx];
                let x = sample.bipolar();
                let trace = model.forward_trace(&x)?;
                let (loss, dlogits) = mlp_loss_grad(&trace.logits, &sample.target, cfg.loss)?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite training loss at epoch {epoch}"
                    )));
                }
                loss_sum += loss;
                let grads = model.backward(&x, &trace, &dlogits)?;
                accumulate(&mut dw1, &grads.dw1);
                accumulate(&mut dw2, &grads.dw2);
                for (a, b) in db1.entries_mut().iter_mut().zip(&grads.db1) {
                    *a += b;
                }
                for (a, b) in db2.entries_mut().iter_mut().zip(&grads.db2) {
                    *a += b;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            for g in [&mut dw1, &mut db1, &mut dw2, &mut db2] {
                scale(g, inv);
            }
            adam_step(&mut model.w1, &dw1, &mut st_w1, &cfg.optimizer, lr, None)?;
            adam_step(&mut model.w2, &dw2, &mut st_w2, &cfg.optimizer, lr, None)?;
            step_bias(&mut model.b1, &db1, &mut st_b1, &cfg.optimizer, lr)?;
            step_bias(&mut model.b2, &db2, &mut st_b2, &cfg.optimizer, lr)?;
        }
        let mean_loss = loss_sum / train.samples.len() as f64;
        let val = eval_mlp(model, val, val_metric, false)?;
        history.push(EpochRecord {
            epoch,
            loss: mean_loss,
            delta: 0.0,
            lr,
            val_metric: val,
        });
    }
    Ok(history)
}

fn step_bias(
    bias: &mut [f64],
    grad: &RealMatrix,
    state: &mut AdamState,
    cfg: &OptimConfig,
    lr: f64,
) -> Result<()> {
    let mut params = RealMatrix::from_vec(1, bias.len(), bias.to_vec())?;
    adam_step(&mut params, grad, state, cfg, lr, None)?;
    bias.copy_from_slice(params.entries());
    Ok(())
}

fn mlp_loss_grad(logits: &[f64], target: &Target, loss: LossKind) -> Result<(f64, Vec<f64>)> {
    match loss {
        LossKind::CrossEntropy => {
            let class = target_class(target)?;
            let probs = softmax(logits)?;
            let loss = cross_entropy(logits, class)?;
            let grad = probs
                .iter()
                .enumerate()
                .map(|(i, p)| p - (i == class) as u8 as f64)
                .collect();
            Ok((loss, grad))
        }
        LossKind::BinaryCrossEntropy => {
            let t = target_bits(target, logits.len());
            let p: Vec<f64> = logits.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
            let loss = binary_cross_entropy(&p, &t)?;
            let n = logits.len() as f64;
            let grad = p.iter().zip(&t).map(|(pi, ti)| (pi - ti) / n).collect();
            Ok((loss, grad))
        }
    }
}

fn accumulate(into: &mut RealMatrix, from: &RealMatrix) {
    for (a, b) in into.entries_mut().iter_mut().zip(from.entries()) {
        *a += b;
    }
}

fn scale(m: &mut RealMatrix, factor: f64) {
    for v in m.entries_mut() {
        *v *= factor;
    }
}
