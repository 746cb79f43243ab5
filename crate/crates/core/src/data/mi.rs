//! Empirical mutual information of a binary attribute against a
//! categorical outcome, and the attribute filter built on it. Natural
//! logarithm throughout; 0 * log 0 is taken as 0.

use std::collections::BTreeMap;

use super::{Dataset, Sample, Target, TaskKind};
use crate::error::{Error, Result};

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Plug-in estimate of `I(X;Y) = H(X) - H(X|Y)` for binary `X` and
/// categorical `Y`, using the binary-outcome expansion.
pub fn mutual_information(x: &[bool], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "mutual_information length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("mutual_information of empty data".into()));
    }
    let n = x.len() as f64;
    let p1 = x.iter().filter(|&&b| b).count() as f64 / n;
    let h_x = -(plogp(p1) + plogp(1.0 - p1));

    let mut per_y: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for (&xi, &yi) in x.iter().zip(y) {
        let entry = per_y.entry(yi).or_insert((0, 0));
        entry.0 += 1;
        if xi {
            entry.1 += 1;
        }
    }
    let mut h_x_given_y = 0.0;
    for (count, ones) in per_y.values() {
        let p_y = *count as f64 / n;
        let p1_y = *ones as f64 / *count as f64;
        h_x_given_y += p_y * -(plogp(p1_y) + plogp(1.0 - p1_y));
    }
    // Clamp tiny negative round-off; MI is nonnegative.
    Ok((h_x - h_x_given_y).max(0.0))
}

/// Encode each distinct label bitset as one categorical value.
pub fn label_combinations(dataset: &Dataset) -> Result<Vec<usize>> {
    let mut combo_ids: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    dataset
        .samples
        .iter()
        .map(|s| match &s.target {
            Target::Labels(ls) => {
                let next = combo_ids.len();
                Ok(*combo_ids.entry(ls.clone()).or_insert(next))
            }
            Target::Class(_) => Err(Error::InvalidArgument(
                "label combinations require a multi-label dataset".into(),
            )),
        })
        .collect()
}

/// Keep attributes whose MI against the label-combination variable is at
/// least `t`, preserving order.
pub fn filter_by_mi(dataset: &Dataset, t: f64) -> Result<Dataset> {
    if !matches!(dataset.task, TaskKind::MultiLabel { .. }) {
        return Err(Error::InvalidArgument(
            "MI filtering applies to multi-label datasets".into(),
        ));
    }
    let y = label_combinations(dataset)?;
    let mut keep = Vec::new();
    for a in 0..dataset.n_attributes() {
        let col: Vec<bool> = dataset.samples.iter().map(|s| s.attributes[a]).collect();
        if mutual_information(&col, &y)? >= t {
            keep.push(a);
        }
    }
    if keep.is_empty() {
        return Err(Error::InvalidState(format!(
            "no attribute has mutual information >= {t}"
        )));
    }
    Ok(Dataset {
        attribute_names: keep
            .iter()
            .map(|&a| dataset.attribute_names[a].clone())
            .collect(),
        task: dataset.task,
        output_names: dataset.output_names.clone(),
        samples: dataset
            .samples
            .iter()
            .map(|s| Sample {
                attributes: keep.iter().map(|&a| s.attributes[a]).collect(),
                target: s.target.clone(),
            })
            .collect(),
    })
}
