//! Dense matrix arithmetic, activation/loss functions, Adam and the
//! learning-rate schedule. Everything here is plain `f64` on the heap;
//! the models in this crate are small enough that nothing fancier pays off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(RealMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn same_shape(&self, other: &RealMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn count_nonzero(&self) -> usize {
        self.entries.iter().filter(|v| **v != 0.0).count()
    }
}

/// Optimizer state for [`adam_step`]: per-parameter moment estimates and
/// the step counter used for bias correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: RealMatrix,
    pub second_moment: RealMatrix,
    pub step: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        AdamState {
            first_moment: RealMatrix::zeros(rows, cols),
            second_moment: RealMatrix::zeros(rows, cols),
            step: 0,
        }
    }
}

/// Adam hyperparameters plus the stepped learning-rate schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Learning rate is multiplied by `lr_decay` every `lr_step_interval` epochs.
    pub lr_step_interval: usize,
    pub lr_decay: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            learning_rate: 0.001,
            weight_decay: 0.00004,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_step_interval: 100,
            lr_decay: 0.1,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument("learning rate must be > 0".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::InvalidArgument("weight decay must be >= 0".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidArgument("lr decay must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Numerically stable softmax (max-subtraction).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::InvalidArgument("softmax of empty vector".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / sum).collect())
}

/// Softmax cross-entropy against a single target class.
pub fn cross_entropy(logits: &[f64], target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "target {target} out of range for {} logits",
            logits.len()
        )));
    }
    let probs = softmax(logits)?;
    Ok(-probs[target].max(f64::MIN_POSITIVE).ln())
}

const BCE_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy over elementwise probability/target pairs.
/// Predictions are clamped to `[1e-7, 1 - 1e-7]` before the logs.
pub fn binary_cross_entropy(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "BCE length mismatch: {} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("BCE of empty vectors".into()));
    }
    let mut total = 0.0;
    for (&p, &t) in predictions.iter().zip(targets) {
        let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        total += -(t * p.ln() + (1.0 - t) * (1.0 - p).ln());
    }
    Ok(total / predictions.len() as f64)
}

/// Gradient of mean BCE with respect to the (clamped) predictions.
pub fn binary_cross_entropy_grad(predictions: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if predictions.len() != targets.len() {
        return Err(Error::InvalidArgument("BCE grad length mismatch".into()));
    }
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(&p, &t)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            (p - t) / (p * (1.0 - p)) / n
        })
        .collect())
}

/// One Adam update in place. Weight decay is applied as an additive
/// `decay * param` gradient term before the moment updates (L2-coupled).
/// Entries with `mask == 0` keep both their value and their moments.
pub fn adam_step(
    params: &mut RealMatrix,
    grads: &RealMatrix,
    state: &mut AdamState,
    cfg: &OptimConfig,
    lr: f64,
    mask: Option<&RealMatrix>,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.first_moment) {
        return Err(Error::ShapeMismatch(
            "adam_step params/grads/state shapes differ".into(),
        ));
    }
    if let Some(m) = mask {
        if !params.same_shape(m) {
            return Err(Error::ShapeMismatch("adam_step mask shape differs".into()));
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);
    for i in 0..params.entries.len() {
        if let Some(m) = mask {
            if m.entries[i] == 0.0 {
                continue;
            }
        }
        let g = grads.entries[i] + cfg.weight_decay * params.entries[i];
        let m = cfg.beta1 * state.first_moment.entries[i] + (1.0 - cfg.beta1) * g;
        let v = cfg.beta2 * state.second_moment.entries[i] + (1.0 - cfg.beta2) * g * g;
        state.first_moment.entries[i] = m;
        state.second_moment.entries[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        params.entries[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    if !params.is_finite() {
        return Err(Error::Numeric("non-finite parameter after adam_step".into()));
    }
    Ok(())
}

/// Stepped learning-rate schedule: `lr * decay^(epoch / interval)`.
pub fn lr_at_epoch(cfg: &OptimConfig, epoch: usize) -> f64 {
    let steps = if cfg.lr_step_interval == 0 {
        0
    } else {
        epoch / cfg.lr_step_interval
    };
    cfg.learning_rate * cfg.lr_decay.powi(steps as i32)
}

/// Central-difference gradient oracle, used by the gradient-check tests.
pub fn finite_diff_gradient<F>(f: F, at: &RealMatrix, h: f64) -> Result<RealMatrix>
where
    F: Fn(&RealMatrix) -> f64,
{
    let mut grad = RealMatrix::zeros(at.rows, at.cols);
    let mut probe = at.clone();
    for i in 0..at.entries.len() {
        let orig = probe.entries[i];
        probe.entries[i] = orig + h;
        let up = f(&probe);
        probe.entries[i] = orig - h;
        let down = f(&probe);
        probe.entries[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(
                "non-finite function value in finite_diff_gradient".into(),
            ));
        }
        grad.entries[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn softmax_worked_example() {
        let p = softmax(&[-2.0, 1.5, 3.0]).unwrap();
        // exact value 0.005479: within one unit of the printed 3 d.p.
        assert_abs_diff_eq!(p[0], 0.006, epsilon = 1e-3);
        assert_abs_diff_eq!(p[1], 0.181, epsilon = 5e-4);
        assert_abs_diff_eq!(p[2], 0.813, epsilon = 5e-4);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn softmax_symmetry_and_identity() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(softmax(&[5.0]).unwrap(), vec![1.0]);
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn softmax_large_magnitude_sums_to_one() {
        let p = softmax(&[1e3, -1e3, 500.0]).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn cross_entropy_worked_example() {
        let ce = cross_entropy(&[-2.0, 1.5, 3.0], 2).unwrap();
        assert_abs_diff_eq!(ce, 0.207, epsilon = 5e-4);
    }

    #[test]
    fn cross_entropy_uniform_and_saturated() {
        assert_abs_diff_eq!(
            cross_entropy(&[0.0, 0.0], 0).unwrap(),
            2.0f64.ln(),
            epsilon = 1e-12
        );
        assert!(cross_entropy(&[100.0, 0.0], 0).unwrap() < 1e-9);
        assert!(cross_entropy(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn bce_cases() {
        assert!(binary_cross_entropy(&[1.0, 0.0], &[1.0, 0.0]).unwrap() < 1e-6);
        assert_abs_diff_eq!(
            binary_cross_entropy(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            2.0f64.ln(),
            epsilon = 1e-12
        );
        // hand evaluation: -log(0.2)
        assert_abs_diff_eq!(
            binary_cross_entropy(&[0.8], &[0.0]).unwrap(),
            -(0.2f64.ln()),
            epsilon = 1e-12
        );
        assert!(binary_cross_entropy(&[0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn adam_zero_grad_fixpoint() {
        let mut p = RealMatrix::from_vec(1, 2, vec![1.0, -2.0]).unwrap();
        let g = RealMatrix::zeros(1, 2);
        let mut st = AdamState::new(1, 2);
        let cfg = OptimConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        adam_step(&mut p, &g, &mut st, &cfg, cfg.learning_rate, None).unwrap();
        assert_eq!(p.entries(), &[1.0, -2.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // hand evaluation at t=1: update = lr * g / (|g| + eps) ~= lr
        let mut p = RealMatrix::from_vec(1, 1, vec![1.0]).unwrap();
        let g = RealMatrix::from_vec(1, 1, vec![1.0]).unwrap();
        let mut st = AdamState::new(1, 1);
        let cfg = OptimConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        adam_step(&mut p, &g, &mut st, &cfg, cfg.learning_rate, None).unwrap();
        let moved = 1.0 - p.get(0, 0);
        assert!((moved - cfg.learning_rate).abs() / cfg.learning_rate < 0.01);
    }

    #[test]
    fn adam_mask_keeps_entries_bit_identical() {
        let mut p = RealMatrix::from_vec(1, 2, vec![0.25, 0.75]).unwrap();
        let g = RealMatrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let mask = RealMatrix::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let mut st = AdamState::new(1, 2);
        let cfg = OptimConfig::default();
        adam_step(&mut p, &g, &mut st, &cfg, cfg.learning_rate, Some(&mask)).unwrap();
        assert_eq!(p.get(0, 0).to_bits(), 0.25f64.to_bits());
        assert_eq!(st.first_moment.get(0, 0), 0.0);
        assert_eq!(st.second_moment.get(0, 0), 0.0);
        assert!(p.get(0, 1) < 0.75);
    }

    #[test]
    fn lr_schedule() {
        let cfg = OptimConfig::default();
        assert_eq!(lr_at_epoch(&cfg, 0), 0.001);
        assert_eq!(lr_at_epoch(&cfg, 99), 0.001);
        assert_abs_diff_eq!(lr_at_epoch(&cfg, 100), 0.0001, epsilon = 1e-15);
    }

    #[test]
    fn finite_diff_analytic_cases() {
        let at = RealMatrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let g = finite_diff_gradient(|m| m.entries().iter().map(|v| v * v).sum(), &at, 1e-5)
            .unwrap();
        assert_abs_diff_eq!(g.get(0, 0), 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(g.get(0, 1), 4.0, epsilon = 1e-6);

        let g = finite_diff_gradient(|_| 3.5, &at, 1e-5).unwrap();
        assert!(g.entries().iter().all(|v| v.abs() < 1e-9));

        let at = RealMatrix::zeros(1, 1);
        let g = finite_diff_gradient(|m| m.get(0, 0).tanh(), &at, 1e-5).unwrap();
        assert_abs_diff_eq!(g.get(0, 0), 1.0, epsilon = 1e-6);
    }
}
