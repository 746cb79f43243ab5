//! Synthetic dataset generators: a multi-class construction with a binary
//! selector code that guarantees exactly one class per assignment, and a
//! multi-label generator with random conjunctions per label. Samples are
//! drawn attribute-first and targets derived from the generating rules.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Sample, Target, TaskKind};
use crate::error::{Error, Result};
use crate::rules::{Literal, Rule, RuleSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticGroundTruth {
    pub rules: RuleSet,
    pub n_attributes: usize,
    pub task: TaskKind,
    pub seed: u64,
}

/// Number of selector bits needed to encode `n` classes.
fn selector_bits(n: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < n {
        bits += 1;
    }
    bits.max(1)
}

/// Multi-class dataset whose class is encoded by a block of selector
/// attributes (bit 0 is the most significant), with independent fair-coin
/// noise attributes appended. Selector codes `>= n_classes` are resampled,
/// so exactly one class rule fires for every generated sample.
pub fn gen_synthetic_multiclass(
    n_classes: usize,
    n_noise_attrs: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(Dataset, SyntheticGroundTruth)> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument(
            "multi-class generation needs n_classes >= 2".into(),
        ));
    }
    let k = selector_bits(n_classes);
    let selector_names: Vec<String> = (0..k).map(|b| format!("s{b}")).collect();
    let noise_names: Vec<String> = (0..n_noise_attrs).map(|i| format!("n{i}")).collect();
    let class_names: Vec<String> = (0..n_classes).map(|i| format!("c{i}")).collect();

    let mut rules = Vec::with_capacity(n_classes);
    for class in 0..n_classes {
        let body = (0..k)
            .map(|b| {
                let bit = class >> (k - 1 - b) & 1;
                if bit == 1 {
                    Literal::pos(selector_names[b].clone())
                } else {
                    Literal::neg(selector_names[b].clone())
                }
            })
            .collect();
        rules.push(Rule::new(class_names[class].clone(), body)?);
    }
    let rule_set = RuleSet::new(rules, &class_names)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let class = loop {
            let code: usize = (0..k).fold(0, |acc, _| (acc << 1) | rng.gen_range(0..2usize));
            if code < n_classes {
                break code;
            }
        };
        let mut attributes: Vec<bool> = (0..k)
            .map(|b| class >> (k - 1 - b) & 1 == 1)
            .collect();
        attributes.extend((0..n_noise_attrs).map(|_| rng.gen_bool(0.5)));
        samples.push(Sample {
            attributes,
            target: Target::Class(class),
        });
    }

    let mut attribute_names = selector_names;
    attribute_names.extend(noise_names);
    let n_attributes = attribute_names.len();
    let dataset = Dataset {
        attribute_names,
        task: TaskKind::MultiClass { n_classes },
        output_names: class_names,
        samples,
    };
    dataset.validate()?;
    Ok((
        dataset,
        SyntheticGroundTruth {
            rules: rule_set,
            n_attributes,
            task: TaskKind::MultiClass { n_classes },
            seed,
        },
    ))
}

/// Multi-label dataset: each label gets 1-3 random conjunctions of 2-5
/// distinct literals over the attribute pool; attributes are fair coins
/// and labels are derived by evaluating the rules.
pub fn gen_synthetic_multilabel(
    n_labels: usize,
    n_attrs: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(Dataset, SyntheticGroundTruth)> {
    if n_labels < 1 {
        return Err(Error::InvalidArgument("need n_labels >= 1".into()));
    }
    if n_attrs < 2 {
        return Err(Error::InvalidArgument(
            "rule bodies need at least 2 attributes".into(),
        ));
    }
    let attribute_names: Vec<String> = (0..n_attrs).map(|i| format!("x{i}")).collect();
    let label_names: Vec<String> = (0..n_labels).map(|i| format!("l{i}")).collect();
    let max_body = 5.min(n_attrs);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rules = Vec::new();
    let attr_indices: Vec<usize> = (0..n_attrs).collect();
    for label in &label_names {
        let n_rules = rng.gen_range(1..=3);
        for _ in 0..n_rules {
            let body_len = rng.gen_range(2..=max_body);
            let chosen: Vec<usize> = attr_indices
                .choose_multiple(&mut rng, body_len)
                .copied()
                .collect();
            let body = chosen
                .into_iter()
                .map(|a| {
                    if rng.gen_bool(0.5) {
                        Literal::pos(attribute_names[a].clone())
                    } else {
                        Literal::neg(attribute_names[a].clone())
                    }
                })
                .collect();
            rules.push(Rule::new(label.clone(), body)?);
        }
    }
    let rule_set = RuleSet::new(rules, &label_names)?;

    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let attributes: Vec<bool> = (0..n_attrs).map(|_| rng.gen_bool(0.5)).collect();
        let assignment: BTreeMap<String, bool> = attribute_names
            .iter()
            .cloned()
            .zip(attributes.iter().copied())
            .collect();
        let truth = rule_set.evaluate(&assignment)?;
        let labels = label_names.iter().map(|l| truth.contains(l)).collect();
        samples.push(Sample {
            attributes,
            target: Target::Labels(labels),
        });
    }

    let dataset = Dataset {
        attribute_names,
        task: TaskKind::MultiLabel { n_labels },
        output_names: label_names,
        samples,
    };
    dataset.validate()?;
    Ok((
        dataset,
        SyntheticGroundTruth {
            rules: rule_set,
            n_attributes: n_attrs,
            task: TaskKind::MultiLabel { n_labels },
            seed,
        },
    ))
}
