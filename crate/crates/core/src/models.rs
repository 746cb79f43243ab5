//! The vanilla neural DNF model, the neural DNF-EO model with its frozen
//! constraint layer, the MLP baseline, output interpretation and JSON
//! checkpointing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::RealMatrix;
use crate::semi_symbolic::{LayerKind, SemiSymbolicLayer};

/// Conjunctive layer feeding a disjunctive layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuralDnfModel {
    pub conjunctive: SemiSymbolicLayer,
    pub disjunctive: SemiSymbolicLayer,
}

impl NeuralDnfModel {
    pub fn n_in(&self) -> usize {
        self.conjunctive.in_dim()
    }

    pub fn n_conj(&self) -> usize {
        self.conjunctive.out_dim()
    }

    pub fn n_out(&self) -> usize {
        self.disjunctive.out_dim()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.disjunctive.forward(&self.conjunctive.forward(x)?)
    }

    /// Set the shared delta magnitude on both layers.
    pub fn set_delta_magnitude(&mut self, magnitude: f64) {
        self.conjunctive.delta_magnitude = magnitude;
        self.disjunctive.delta_magnitude = magnitude;
    }
}

/// Vanilla DNF plus the frozen "exactly one" constraint layer C2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuralDnfEoModel {
    pub base: NeuralDnfModel,
    pub constraint: SemiSymbolicLayer,
}

impl NeuralDnfEoModel {
    /// Forward through the plain DNF and then C2; returns both outputs.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let y_c1 = self.base.forward(x)?;
        let y_c2 = self.constraint.forward(&y_c1)?;
        Ok((y_c1, y_c2))
    }
}

/// Deterministic vanilla model. Both layers start at delta magnitude 0.1.
pub fn init_vanilla(n_in: usize, n_conj: usize, n_out: usize, seed: u64) -> Result<NeuralDnfModel> {
    if n_in == 0 || n_conj == 0 || n_out == 0 {
        return Err(Error::InvalidArgument(
            "model dimensions must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(NeuralDnfModel {
        conjunctive: SemiSymbolicLayer::init(n_conj, n_in, LayerKind::Conjunctive, 0.1, &mut rng)?,
        disjunctive: SemiSymbolicLayer::init(n_out, n_conj, LayerKind::Disjunctive, 0.1, &mut rng)?,
    })
}

/// EO model: vanilla base plus a frozen conjunctive constraint layer whose
/// off-diagonal entries are -6 and diagonal entries 0.
pub fn init_eo(n_in: usize, n_conj: usize, n_classes: usize, seed: u64) -> Result<NeuralDnfEoModel> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument(
            "EO model needs at least 2 classes".into(),
        ));
    }
    let base = init_vanilla(n_in, n_conj, n_classes, seed)?;
    let mut weights = RealMatrix::zeros(n_classes, n_classes);
    for r in 0..n_classes {
        for c in 0..n_classes {
            if r != c {
                weights.set(r, c, -6.0);
            }
        }
    }
    Ok(NeuralDnfEoModel {
        base,
        constraint: SemiSymbolicLayer::frozen(weights, LayerKind::Conjunctive),
    })
}

/// Indices with output strictly greater than the threshold.
pub fn interpret_bipolar(y: &[f64], threshold: f64) -> Vec<usize> {
    y.iter()
        .enumerate()
        .filter(|(_, v)| **v > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Smallest index attaining the maximum.
pub fn predict_argmax(y: &[f64]) -> Result<usize> {
    if y.is_empty() {
        return Err(Error::InvalidArgument("argmax of empty vector".into()));
    }
    let mut best = 0;
    for (i, v) in y.iter().enumerate().skip(1) {
        if *v > y[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Two dense layers with ordinary additive bias and tanh hidden activation.
/// Weight matrices are initialised exactly like the DNF counterpart
/// (same distribution, same seed procedure); biases start at zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpBaseline {
    pub w1: RealMatrix,
    pub b1: Vec<f64>,
    pub w2: RealMatrix,
    pub b2: Vec<f64>,
}

impl MlpBaseline {
    pub fn n_in(&self) -> usize {
        self.w1.cols()
    }

    pub fn n_hidden(&self) -> usize {
        self.w1.rows()
    }

    pub fn n_out(&self) -> usize {
        self.w2.rows()
    }

    /// Raw logits: `dense2(tanh(dense1(x)))`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.logits)
    }

    /// Forward keeping the hidden activation for backprop.
    pub fn forward_trace(&self, x: &[f64]) -> Result<MlpTrace> {
        if x.len() != self.n_in() {
            return Err(Error::ShapeMismatch(format!(
                "mlp expects {} inputs, got {}",
                self.n_in(),
                x.len()
            )));
        }
        let mut hidden = Vec::with_capacity(self.n_hidden());
        for j in 0..self.n_hidden() {
            let dot: f64 = self.w1.row(j).iter().zip(x).map(|(w, xi)| w * xi).sum();
            hidden.push((dot + self.b1[j]).tanh());
        }
        let mut logits = Vec::with_capacity(self.n_out());
        for j in 0..self.n_out() {
            let dot: f64 = self.w2.row(j).iter().zip(&hidden).map(|(w, h)| w * h).sum();
            logits.push(dot + self.b2[j]);
        }
        Ok(MlpTrace { hidden, logits })
    }

    /// tanh-squashed outputs for the 0-threshold interpretability probe.
    pub fn forward_tanh(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.iter().map(|v| v.tanh()).collect())
    }

    /// Gradients given upstream dL/dlogits.
    pub fn backward(
        &self,
        x: &[f64],
        trace: &MlpTrace,
        upstream: &[f64],
    ) -> Result<MlpGradients> {
        if upstream.len() != self.n_out() {
            return Err(Error::ShapeMismatch("mlp backward shape mismatch".into()));
        }
        let mut dw2 = RealMatrix::zeros(self.n_out(), self.n_hidden());
        let db2 = upstream.to_vec();
        let mut dhidden = vec![0.0; self.n_hidden()];
        for j in 0..self.n_out() {
            for i in 0..self.n_hidden() {
                dw2.set(j, i, upstream[j] * trace.hidden[i]);
                dhidden[i] += upstream[j] * self.w2.get(j, i);
            }
        }
        let mut dw1 = RealMatrix::zeros(self.n_hidden(), self.n_in());
        let mut db1 = vec![0.0; self.n_hidden()];
        for j in 0..self.n_hidden() {
            let dz = dhidden[j] * (1.0 - trace.hidden[j] * trace.hidden[j]);
            db1[j] = dz;
            for i in 0..self.n_in() {
                dw1.set(j, i, dz * x[i]);
            }
        }
        Ok(MlpGradients { dw1, db1, dw2, db2 })
    }
}

pub struct MlpTrace {
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

pub struct MlpGradients {
    pub dw1: RealMatrix,
    pub db1: Vec<f64>,
    pub dw2: RealMatrix,
    pub db2: Vec<f64>,
}

/// MLP with the same shapes and weight init as `init_vanilla`.
pub fn init_mlp(n_in: usize, n_hidden: usize, n_out: usize, seed: u64) -> Result<MlpBaseline> {
    if n_in == 0 || n_hidden == 0 || n_out == 0 {
        return Err(Error::InvalidArgument(
            "model dimensions must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1 = draw_uniform(n_hidden, n_in, &mut rng);
    let w2 = draw_uniform(n_out, n_hidden, &mut rng);
    Ok(MlpBaseline {
        w1,
        b1: vec![0.0; n_hidden],
        w2,
        b2: vec![0.0; n_out],
    })
}

fn draw_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> RealMatrix {
    let bound = 1.0 / (cols as f64).sqrt();
    let entries = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
    RealMatrix::from_vec(rows, cols, entries).expect("sized by construction")
}

/// Any trainable model plus provenance, serialized as a JSON checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelKind {
    Vanilla(NeuralDnfModel),
    Eo(NeuralDnfEoModel),
    Mlp(MlpBaseline),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    /// Resolved run configuration echoed for provenance.
    pub config: serde_json::Value,
    #[serde(flatten)]
    pub model: ModelKind,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("checkpoint encode: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("checkpoint decode: {e}")))
    }
}
