//! Dataset model, file I/O, CUB ingestion and preprocessing, mutual
//! information filtering, synthetic generators and deterministic splits.

mod csvio;
mod cub;
mod mi;
mod synthetic;

pub use csvio::{
    load_dataset_csv, save_dataset_csv, save_dataset_csv_with_provenance, DatasetMeta,
};
pub use cub::{ingest_cub, preprocess_cub, AttributeAnnotation, CubRawAnnotations};
pub use mi::{filter_by_mi, label_combinations, mutual_information};
pub use synthetic::{gen_synthetic_multiclass, gen_synthetic_multilabel, SyntheticGroundTruth};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    MultiClass { n_classes: usize },
    MultiLabel { n_labels: usize },
}

impl TaskKind {
    pub fn arity(&self) -> usize {
        match self {
            TaskKind::MultiClass { n_classes } => *n_classes,
            TaskKind::MultiLabel { n_labels } => *n_labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Class(usize),
    Labels(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub attributes: Vec<bool>,
    pub target: Target,
}

impl Sample {
    /// Model input encoding: true -> +1, false -> -1.
    pub fn bipolar(&self) -> Vec<f64> {
        self.attributes
            .iter()
            .map(|&b| if b { 1.0 } else { -1.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub attribute_names: Vec<String>,
    pub task: TaskKind,
    /// Class names (multi-class) or label names (multi-label).
    pub output_names: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if s.attributes.len() != self.n_attributes() {
                return Err(Error::Format(format!(
                    "sample {i} has {} attributes, dataset declares {}",
                    s.attributes.len(),
                    self.n_attributes()
                )));
            }
            match (&self.task, &s.target) {
                (TaskKind::MultiClass { n_classes }, Target::Class(c)) if c < n_classes => {}
                (TaskKind::MultiLabel { n_labels }, Target::Labels(l)) if l.len() == *n_labels => {}
                _ => {
                    return Err(Error::Format(format!(
                        "sample {i} target inconsistent with task kind"
                    )))
                }
            }
        }
        Ok(())
    }

    fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            attribute_names: self.attribute_names.clone(),
            task: self.task,
            output_names: self.output_names.clone(),
            samples,
        }
    }
}

/// Seeded disjoint split into train/validation/test of the given sizes.
pub fn split(
    dataset: &Dataset,
    train: usize,
    val: usize,
    test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let total = train + val + test;
    if total > dataset.samples.len() {
        return Err(Error::InvalidArgument(format!(
            "split sizes {train}+{val}+{test} exceed dataset size {}",
            dataset.samples.len()
        )));
    }
    let mut indices: Vec<usize> = (0..dataset.samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let take = |range: std::ops::Range<usize>| -> Vec<Sample> {
        indices[range]
            .iter()
            .map(|&i| dataset.samples[i].clone())
            .collect()
    };
    Ok((
        dataset.with_samples(take(0..train)),
        dataset.with_samples(take(train..train + val)),
        dataset.with_samples(take(train + val..total)),
    ))
}
