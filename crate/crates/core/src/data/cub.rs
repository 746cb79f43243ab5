//! CUB-200-2011 raw annotation ingestion and the class-median attribute
//! preprocessing used by the concept-bottleneck pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use super::{Dataset, Sample, Target, TaskKind};
use crate::error::{Error, Result};

/// One `(is_present, certainty)` annotation; certainty is 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttributeAnnotation {
    pub present: bool,
    pub certainty: u8,
}

#[derive(Debug, Clone)]
pub struct CubRawAnnotations {
    pub attribute_names: Vec<String>,
    pub class_names: Vec<String>,
    /// image id -> 0-based class index
    pub image_class: BTreeMap<u32, usize>,
    /// image id -> per-attribute annotation (indexed by 0-based attribute id)
    pub annotations: BTreeMap<u32, Vec<Option<AttributeAnnotation>>>,
    /// image ids marked as training samples by train_test_split.txt;
    /// all images when the file is absent
    pub train_ids: BTreeSet<u32>,
}

fn find_file(dir: &Path, name: &str) -> Result<PathBuf> {
    for candidate in [dir.join(name), dir.join("attributes").join(name)] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::Format(format!(
        "missing file {name} under {}",
        dir.display()
    )))
}

fn read_id_name_table(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    let mut names = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, char::is_whitespace);
        let id: usize = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| Error::Format(format!("{}: bad id on line {}", path.display(), i + 1)))?;
        let name = parts
            .next()
            .ok_or_else(|| {
                Error::Format(format!("{}: missing name on line {}", path.display(), i + 1))
            })?
            .trim()
            .to_string();
        if id != names.len() + 1 {
            return Err(Error::Format(format!(
                "{}: ids must be contiguous from 1, got {id} on line {}",
                path.display(),
                i + 1
            )));
        }
        names.push(name);
    }
    Ok(names)
}

/// Read the published CUB-200-2011 text-file layout from `dir`.
pub fn ingest_cub(dir: &Path) -> Result<CubRawAnnotations> {
    let class_names = read_id_name_table(&find_file(dir, "classes.txt")?)?;
    let attribute_names = read_id_name_table(&find_file(dir, "attributes.txt")?)?;
    let n_attrs = attribute_names.len();

    let mut image_class = BTreeMap::new();
    let labels_path = find_file(dir, "image_class_labels.txt")?;
    for (i, line) in std::fs::read_to_string(&labels_path)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 2 {
            return Err(Error::Format(format!(
                "image_class_labels.txt line {}: expected 2 fields",
                i + 1
            )));
        }
        let image_id: u32 = fields[0].parse().map_err(|_| {
            Error::Format(format!("image_class_labels.txt line {}: bad image id", i + 1))
        })?;
        let class_id: usize = fields[1].parse().map_err(|_| {
            Error::Format(format!("image_class_labels.txt line {}: bad class id", i + 1))
        })?;
        if class_id == 0 || class_id > class_names.len() {
            return Err(Error::Format(format!(
                "image_class_labels.txt line {}: class id {class_id} out of range",
                i + 1
            )));
        }
        image_class.insert(image_id, class_id - 1);
    }

    let mut annotations: BTreeMap<u32, Vec<Option<AttributeAnnotation>>> = BTreeMap::new();
    let attr_path = find_file(dir, "image_attribute_labels.txt")?;
    for (i, line) in std::fs::read_to_string(&attr_path)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        // image_id attribute_id is_present certainty_id [time ...] — trailing
        // fields such as worker time are tolerated and ignored.
        if fields.len() < 4 {
            return Err(Error::Format(format!(
                "image_attribute_labels.txt line {}: expected at least 4 fields",
                i + 1
            )));
        }
        let image_id: u32 = fields[0].parse().map_err(|_| {
            Error::Format(format!("image_attribute_labels.txt line {}: bad image id", i + 1))
        })?;
        let attr_id: usize = fields[1].parse().map_err(|_| {
            Error::Format(format!("image_attribute_labels.txt line {}: bad attribute id", i + 1))
        })?;
        let present = match fields[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Format(format!(
                    "image_attribute_labels.txt line {}: bad is_present {other:?}",
                    i + 1
                )))
            }
        };
        let certainty: u8 = fields[3].parse().map_err(|_| {
            Error::Format(format!("image_attribute_labels.txt line {}: bad certainty", i + 1))
        })?;
        if !(1..=4).contains(&certainty) {
            return Err(Error::Format(format!(
                "image_attribute_labels.txt line {}: certainty {certainty} out of range 1..=4",
                i + 1
            )));
        }
        if !image_class.contains_key(&image_id) {
            return Err(Error::Format(format!(
                "image_attribute_labels.txt line {}: unknown image id {image_id}",
                i + 1
            )));
        }
        if attr_id == 0 || attr_id > n_attrs {
            return Err(Error::Format(format!(
                "image_attribute_labels.txt line {}: attribute id {attr_id} out of range",
                i + 1
            )));
        }
        annotations
            .entry(image_id)
            .or_insert_with(|| vec![None; n_attrs])[attr_id - 1] =
            Some(AttributeAnnotation { present, certainty });
    }

    let train_ids = match find_file(dir, "train_test_split.txt") {
        Ok(path) => {
            let mut ids = BTreeSet::new();
            for line in std::fs::read_to_string(&path)?.lines() {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() == 2 && fields[1] == "1" {
                    ids.insert(fields[0].parse().map_err(|_| {
                        Error::Format("train_test_split.txt: bad image id".into())
                    })?);
                }
            }
            ids
        }
        Err(_) => image_class.keys().copied().collect(),
    };

    Ok(CubRawAnnotations {
        attribute_names,
        class_names,
        image_class,
        annotations,
        train_ids,
    })
}

/// Class-median preprocessing. Per class and attribute, count present /
/// not-present over the training images, skipping annotations that are
/// absent only because the attribute was not visible (present = 0,
/// certainty = 1). The majority label (ties resolved to present) becomes
/// the class encoding. Attributes mostly-present in at least `n` classes
/// are kept; every sample of a class receives the class encoding.
///
/// Returns the dataset over all images plus the kept-attribute mask.
pub fn preprocess_cub(
    raw: &CubRawAnnotations,
    n: usize,
    train_ids: &BTreeSet<u32>,
) -> Result<(Dataset, Vec<bool>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let n_classes = raw.class_names.len();
    let n_attrs = raw.attribute_names.len();

    // counts[class][attr][is_present]
    let mut counts = vec![vec![[0u32; 2]; n_attrs]; n_classes];
    for (&image_id, anns) in &raw.annotations {
        if !train_ids.contains(&image_id) {
            continue;
        }
        let class = raw.image_class[&image_id];
        for (attr, ann) in anns.iter().enumerate() {
            if let Some(a) = ann {
                if !a.present && a.certainty == 1 {
                    continue; // not present because not visible
                }
                counts[class][attr][a.present as usize] += 1;
            }
        }
    }

    // Majority presence per class/attribute, ties resolved to present.
    let mut majority = vec![vec![false; n_attrs]; n_classes];
    for c in 0..n_classes {
        for a in 0..n_attrs {
            majority[c][a] = counts[c][a][1] >= counts[c][a][0];
        }
    }

    // Keep attributes mostly-present in at least n classes.
    let kept: Vec<bool> = (0..n_attrs)
        .map(|a| (0..n_classes).filter(|&c| majority[c][a]).count() >= n)
        .collect();
    if !kept.iter().any(|&k| k) {
        return Err(Error::InvalidState(format!(
            "no attribute is mostly present in at least {n} classes"
        )));
    }

    let attribute_names: Vec<String> = raw
        .attribute_names
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(name, _)| name.clone())
        .collect();

    let samples: Vec<Sample> = raw
        .image_class
        .values()
        .map(|&class| Sample {
            attributes: (0..n_attrs)
                .filter(|&a| kept[a])
                .map(|a| majority[class][a])
                .collect(),
            target: Target::Class(class),
        })
        .collect();

    let dataset = Dataset {
        attribute_names,
        task: TaskKind::MultiClass { n_classes },
        output_names: raw.class_names.clone(),
        samples,
    };
    dataset.validate()?;
    Ok((dataset, kept))
}
