//! Dataset CSV format: attribute columns prefixed `a_`, then either a
//! single integer `class` column or `l_`-prefixed label bit columns.
//! A JSON metadata sidecar (`<stem>.meta.json`) carries the exact names,
//! task kind and provenance; the CSV headers alone suffice to load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Sample, Target, TaskKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub attribute_names: Vec<String>,
    pub output_names: Vec<String>,
    pub task: TaskKind,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn save_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    save_dataset_csv_with_provenance(dataset, path, serde_json::Value::Null)
}

pub fn save_dataset_csv_with_provenance(
    dataset: &Dataset,
    path: &Path,
    provenance: serde_json::Value,
) -> Result<()> {
    dataset.validate()?;
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = dataset
        .attribute_names
        .iter()
        .map(|n| format!("a_{n}"))
        .collect();
    match dataset.task {
        TaskKind::MultiClass { .. } => header.push("class".into()),
        TaskKind::MultiLabel { .. } => {
            header.extend(dataset.output_names.iter().map(|n| format!("l_{n}")));
        }
    }
    wtr.write_record(&header)
        .map_err(|e| Error::Format(format!("csv write: {e}")))?;
    for sample in &dataset.samples {
        let mut record: Vec<String> = sample
            .attributes
            .iter()
            .map(|&b| if b { "1".into() } else { "0".into() })
            .collect();
        match &sample.target {
            Target::Class(c) => record.push(c.to_string()),
            Target::Labels(ls) => {
                record.extend(ls.iter().map(|&b| if b { "1".to_string() } else { "0".to_string() }))
            }
        }
        wtr.write_record(&record)
            .map_err(|e| Error::Format(format!("csv write: {e}")))?;
    }
    wtr.flush()?;

    let meta = DatasetMeta {
        attribute_names: dataset.attribute_names.clone(),
        output_names: dataset.output_names.clone(),
        task: dataset.task,
        provenance,
    };
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Format(format!("meta encode: {e}")))?;
    std::fs::write(sidecar_path(path), text)?;
    Ok(())
}

fn parse_bit(field: &str, row: usize, col: usize) -> Result<bool> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse {
            line: row,
            col,
            msg: format!("expected 0 or 1 in bit column, got {other:?}"),
        }),
    }
}

pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    let meta: Option<DatasetMeta> = match std::fs::read_to_string(sidecar_path(path)) {
        Ok(text) => Some(
            serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("meta decode: {e}")))?,
        ),
        Err(_) => None,
    };

    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("csv header: {e}")))?
        .clone();

    let mut attr_cols = Vec::new();
    let mut attr_names = Vec::new();
    let mut label_cols = Vec::new();
    let mut label_names = Vec::new();
    let mut class_col = None;
    for (i, h) in headers.iter().enumerate() {
        if let Some(name) = h.strip_prefix("a_") {
            attr_cols.push(i);
            attr_names.push(name.to_string());
        } else if let Some(name) = h.strip_prefix("l_") {
            label_cols.push(i);
            label_names.push(name.to_string());
        } else if h == "class" {
            class_col = Some(i);
        } else {
            return Err(Error::Format(format!("unrecognized column header {h:?}")));
        }
    }
    if class_col.is_some() && !label_cols.is_empty() {
        return Err(Error::Format(
            "dataset mixes a class column with label columns".into(),
        ));
    }
    if class_col.is_none() && label_cols.is_empty() {
        return Err(Error::Format("dataset has no target columns".into()));
    }

    let mut samples = Vec::new();
    let mut max_class = 0usize;
    for (row_idx, record) in rdr.records().enumerate() {
        let row = row_idx + 2; // header is line 1
        let record = record.map_err(|e| Error::Format(format!("csv row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::Format(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let attributes = attr_cols
            .iter()
            .map(|&c| parse_bit(&record[c], row, c + 1))
            .collect::<Result<Vec<bool>>>()?;
        let target = if let Some(c) = class_col {
            let class: usize = record[c].parse().map_err(|_| Error::Parse {
                line: row,
                col: c + 1,
                msg: format!("expected class index, got {:?}", &record[c]),
            })?;
            max_class = max_class.max(class);
            Target::Class(class)
        } else {
            Target::Labels(
                label_cols
                    .iter()
                    .map(|&c| parse_bit(&record[c], row, c + 1))
                    .collect::<Result<Vec<bool>>>()?,
            )
        };
        samples.push(Sample { attributes, target });
    }

    let task = if class_col.is_some() {
        let inferred = max_class + 1;
        match &meta {
            Some(DatasetMeta {
                task: TaskKind::MultiClass { n_classes },
                ..
            }) => TaskKind::MultiClass {
                n_classes: (*n_classes).max(inferred),
            },
            _ => TaskKind::MultiClass { n_classes: inferred },
        }
    } else {
        TaskKind::MultiLabel {
            n_labels: label_cols.len(),
        }
    };

    let (attribute_names, output_names) = match meta {
        Some(m) => (m.attribute_names, m.output_names),
        None => {
            let outputs = match task {
                TaskKind::MultiClass { n_classes } => {
                    (0..n_classes).map(|i| format!("c{i}")).collect()
                }
                TaskKind::MultiLabel { .. } => label_names,
            };
            (attr_names, outputs)
        }
    };

    let dataset = Dataset {
        attribute_names,
        task,
        output_names,
        samples,
    };
    dataset.validate()?;
    Ok(dataset)
}
