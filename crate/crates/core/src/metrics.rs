//! Classification metrics: argmax accuracy, per-sample Jaccard index and
//! macro F1 over label bitsets.

use crate::error::{Error, Result};

/// Fraction of samples whose predicted class equals the target.
pub fn accuracy(predictions: &[usize], targets: &[usize]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::InvalidArgument("accuracy length mismatch".into()));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("accuracy of empty inputs".into()));
    }
    let correct = predictions
        .iter()
        .zip(targets)
        .filter(|(p, t)| p == t)
        .count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// `|P ∩ T| / |P ∪ T|` for one sample. Index slices must be duplicate-free.
/// Empty prediction against a nonempty target scores 0.
pub fn jaccard_score(predicted: &[usize], target: &[usize]) -> f64 {
    if predicted.is_empty() && target.is_empty() {
        return 1.0;
    }
    let inter = predicted.iter().filter(|p| target.contains(p)).count();
    let union = predicted.len() + target.len() - inter;
    inter as f64 / union as f64
}

/// Mean Jaccard score over samples.
pub fn mean_jaccard(predicted: &[Vec<usize>], targets: &[Vec<usize>]) -> Result<f64> {
    if predicted.len() != targets.len() || predicted.is_empty() {
        return Err(Error::InvalidArgument("mean_jaccard length mismatch".into()));
    }
    Ok(predicted
        .iter()
        .zip(targets)
        .map(|(p, t)| jaccard_score(p, t))
        .sum::<f64>()
        / predicted.len() as f64)
}

/// Unweighted mean of per-label F1. A label with zero predicted and zero
/// actual positives contributes F1 = 0.
pub fn macro_f1(predicted: &[Vec<bool>], targets: &[Vec<bool>], n_labels: usize) -> Result<f64> {
    if predicted.len() != targets.len() || predicted.is_empty() {
        return Err(Error::InvalidArgument("macro_f1 length mismatch".into()));
    }
    for (p, t) in predicted.iter().zip(targets) {
        if p.len() != n_labels || t.len() != n_labels {
            return Err(Error::InvalidArgument("macro_f1 arity mismatch".into()));
        }
    }
    let mut total = 0.0;
    for label in 0..n_labels {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fneg = 0u64;
        for (p, t) in predicted.iter().zip(targets) {
            match (p[label], t[label]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fneg;
        if denom > 0 {
            total += 2.0 * tp as f64 / denom as f64;
        }
    }
    Ok(total / n_labels as f64)
}
