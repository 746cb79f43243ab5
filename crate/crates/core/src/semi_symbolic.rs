//! The semi-symbolic layer: a dense layer whose bias is computed from its
//! own weights so that it approximates logical conjunction (delta > 0) or
//! disjunction (delta < 0), plus the delta-magnitude ramp used during
//! training.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::RealMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Conjunctive,
    Disjunctive,
}

impl LayerKind {
    /// Sign of delta for this kind: +1 conjunction, -1 disjunction.
    pub fn delta_sign(self) -> f64 {
        match self {
            LayerKind::Conjunctive => 1.0,
            LayerKind::Disjunctive => -1.0,
        }
    }
}

/// Logical bias of one weight row: `delta * (max_i |w_i| - sum_i |w_i|)`.
pub fn logical_bias(row: &[f64], delta: f64) -> Result<f64> {
    if row.is_empty() {
        return Err(Error::InvalidArgument("logical_bias of empty row".into()));
    }
    let max_abs = row.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let sum_abs: f64 = row.iter().map(|w| w.abs()).sum();
    Ok(delta * (max_abs - sum_abs))
}

/// Dense layer whose logical bias is recomputed from the current
/// weights on every forward call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemiSymbolicLayer {
    pub weights: RealMatrix,
    pub kind: LayerKind,
    /// Magnitude of delta, in [0.1, 1] while training.
    pub delta_magnitude: f64,
    pub trainable: bool,
    /// 0 entries are pruned: weight stays exactly 0 and gets no gradient.
    pub prune_mask: RealMatrix,
}

impl SemiSymbolicLayer {
    /// New layer with weights drawn uniformly from (-1/sqrt(in), +1/sqrt(in)).
    pub fn init<R: Rng>(
        out_dim: usize,
        in_dim: usize,
        kind: LayerKind,
        delta_magnitude: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::InvalidArgument(
                "layer dimensions must be >= 1".into(),
            ));
        }
        let bound = 1.0 / (in_dim as f64).sqrt();
        let entries: Vec<f64> = (0..out_dim * in_dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        let mut mask = RealMatrix::zeros(out_dim, in_dim);
        mask.entries_mut().fill(1.0);
        Ok(SemiSymbolicLayer {
            weights: RealMatrix::from_vec(out_dim, in_dim, entries)?,
            kind,
            delta_magnitude,
            trainable: true,
            prune_mask: mask,
        })
    }

    /// Frozen layer from explicit weights, delta magnitude fixed at 1.
    pub fn frozen(weights: RealMatrix, kind: LayerKind) -> Self {
        let mut mask = RealMatrix::zeros(weights.rows(), weights.cols());
        mask.entries_mut().fill(1.0);
        SemiSymbolicLayer {
            weights,
            kind,
            delta_magnitude: 1.0,
            trainable: false,
            prune_mask: mask,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn delta(&self) -> f64 {
        self.kind.delta_sign() * self.delta_magnitude
    }

    /// `y_j = tanh(sum_i W_ji x_i + beta_j)`, beta recomputed per row.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_raw(x)?.iter().map(|z| z.tanh()).collect())
    }

    /// Pre-tanh activations `z_j = sum_i W_ji x_i + beta_j`; these are the
    /// "raw output logits" fed to softmax cross-entropy.
    pub fn forward_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::ShapeMismatch(format!(
                "layer expects {} inputs, got {}",
                self.in_dim(),
                x.len()
            )));
        }
        let delta = self.delta();
        let mut out = Vec::with_capacity(self.out_dim());
        for j in 0..self.out_dim() {
            let row = self.weights.row(j);
            let dot: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            out.push(dot + logical_bias(row, delta)?);
        }
        Ok(out)
    }

    /// Gradients of a scalar loss with respect to the weights and inputs,
    /// given the layer output `y` from a prior forward on `x` and the
    /// upstream `dL/dy`.
    ///
    /// Beta is differentiated through the weights:
    /// `dbeta_j/dW_ji = delta * (sign(W_ji) * [i == argmax |W_j.|] - sign(W_ji))`
    /// with sign(0) = 0 and first-index tie-breaking. Masked entries get a
    /// zero gradient.
    pub fn backward(
        &self,
        x: &[f64],
        y: &[f64],
        upstream: &[f64],
    ) -> Result<(RealMatrix, Vec<f64>)> {
        if y.len() != self.out_dim() || upstream.len() != self.out_dim() {
            return Err(Error::ShapeMismatch("backward shape mismatch".into()));
        }
        let dz: Vec<f64> = upstream
            .iter()
            .zip(y)
            .map(|(u, yj)| u * (1.0 - yj * yj))
            .collect();
        self.backward_raw(x, &dz)
    }

    /// Like `backward` but the upstream gradient is taken with respect to
    /// the pre-tanh activations (for losses applied to raw logits).
    pub fn backward_raw(&self, x: &[f64], upstream: &[f64]) -> Result<(RealMatrix, Vec<f64>)> {
        if x.len() != self.in_dim() || upstream.len() != self.out_dim() {
            return Err(Error::ShapeMismatch("backward shape mismatch".into()));
        }
        let delta = self.delta();
        let mut dw = RealMatrix::zeros(self.out_dim(), self.in_dim());
        let mut dx = vec![0.0; self.in_dim()];
        for j in 0..self.out_dim() {
            let dz = upstream[j];
            if dz == 0.0 {
                continue;
            }
            let row = self.weights.row(j);
            let argmax = argmax_abs(row);
            for i in 0..self.in_dim() {
                let w = row[i];
                dx[i] += dz * w;
                if self.prune_mask.get(j, i) == 0.0 {
                    continue;
                }
                let s = sign(w);
                let dbeta = delta * (if i == argmax { s } else { 0.0 } - s);
                dw.set(j, i, dz * (x[i] + dbeta));
            }
        }
        Ok((dw, dx))
    }

    /// Zero out a weight permanently: the value becomes 0 and the mask
    /// entry pins it there through any later training.
    pub fn prune_weight(&mut self, row: usize, col: usize) {
        self.weights.set(row, col, 0.0);
        self.prune_mask.set(row, col, 0.0);
    }
}

fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// First index attaining the maximum absolute value.
fn argmax_abs(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = row[0].abs();
    for (i, w) in row.iter().enumerate().skip(1) {
        if w.abs() > best_v {
            best = i;
            best_v = w.abs();
        }
    }
    best
}

/// Staircase ramp of the delta magnitude over training epochs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaSchedule {
    pub initial: f64,
    pub increment: f64,
    pub step_interval: usize,
    pub final_magnitude: f64,
}

impl DeltaSchedule {
    /// Default ramp for a run of `total_epochs`: +0.1 every
    /// total_epochs/10 epochs, from 0.1 up to 1.0.
    pub fn for_epochs(total_epochs: usize) -> Self {
        DeltaSchedule {
            initial: 0.1,
            increment: 0.1,
            step_interval: (total_epochs / 10).max(1),
            final_magnitude: 1.0,
        }
    }

    /// Constant delta of 1 (used by finetuning, after the ramp finished).
    pub fn constant_one() -> Self {
        DeltaSchedule {
            initial: 1.0,
            increment: 0.0,
            step_interval: 1,
            final_magnitude: 1.0,
        }
    }

    /// `min(final, initial + increment * (epoch / interval))`.
    pub fn delta_at_epoch(&self, epoch: usize) -> f64 {
        let interval = self.step_interval.max(1);
        let steps = (epoch / interval) as f64;
        (self.initial + self.increment * steps).min(self.final_magnitude)
    }
}
