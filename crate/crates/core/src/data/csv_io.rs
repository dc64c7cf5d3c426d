use std::collections::BTreeSet;
use std::path::Path;

use super::dataset::{Dataset, JournalEntry, Provenance};
use super::schema::{AttributeSchema, CategoricalAttribute, ContinuousAttribute, Transform};
use crate::error::{Error, Result};

/// How `load_csv` treats categorical values missing from the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VocabularyMode {
    #[default]
    Strict,
    /// Append unseen values to the vocabulary.
    Extend,
}

fn csv_err(line: u64, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line: line as usize,
        message: e.to_string(),
    }
}

fn read_records(path: &Path) -> Result<(Vec<String>, Vec<(u64, csv::StringRecord)>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse {
                line: 1,
                message: format!("{other:?}"),
            },
        })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(1, e))?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(csv_err(1, "missing header row"));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_err(line, e)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec));
    }
    Ok((header, rows))
}

/// Loads journal entries from a headed CSV file.
///
/// With `schema = None` the schema is inferred: a column is continuous when
/// every value parses as a finite number and at least one value carries a
/// decimal point or exponent; everything else is categorical with a sorted
/// vocabulary. Extra columns not named by the schema are ignored.
pub fn load_csv(
    path: &Path,
    schema: Option<&AttributeSchema>,
    mode: VocabularyMode,
) -> Result<Dataset> {
    let (header, rows) = read_records(path)?;
    let mut schema = match schema {
        Some(s) => s.clone(),
        None => infer_schema(&header, &rows)?,
    };

    let column_of = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(1, format!("missing column {name:?}")))
    };
    let cat_cols = schema
        .categorical
        .iter()
        .map(|a| column_of(&a.name))
        .collect::<Result<Vec<_>>>()?;
    let con_cols = schema
        .continuous
        .iter()
        .map(|a| column_of(&a.name))
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        if rec.len() != header.len() {
            return Err(csv_err(
                *line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let mut categorical = Vec::with_capacity(cat_cols.len());
        for (attr, &col) in schema.categorical.iter_mut().zip(&cat_cols) {
            let value = rec[col].trim();
            let idx = match attr.index_of(value) {
                Some(i) => i,
                None if mode == VocabularyMode::Extend => {
                    attr.vocabulary.push(value.to_owned());
                    attr.vocabulary.len() - 1
                }
                None => {
                    return Err(Error::Vocabulary {
                        attribute: attr.name.clone(),
                        value: value.to_owned(),
                    })
                }
            };
            categorical.push(idx);
        }
        let mut continuous = Vec::with_capacity(con_cols.len());
        for (attr, &col) in schema.continuous.iter().zip(&con_cols) {
            let raw = rec[col].trim();
            let v: f64 = raw
                .parse()
                .map_err(|_| csv_err(*line, format!("{}: {raw:?} is not a number", attr.name)))?;
            if !attr.transform.accepts(v) {
                return Err(csv_err(
                    *line,
                    format!("{}: {raw} is outside the domain of its transform", attr.name),
                ));
            }
            continuous.push(v);
        }
        entries.push(JournalEntry {
            categorical,
            continuous,
        });
    }
    Ok(Dataset::new(schema, entries, Provenance::RealExtract))
}

fn infer_schema(header: &[String], rows: &[(u64, csv::StringRecord)]) -> Result<AttributeSchema> {
    let mut categorical = Vec::new();
    let mut continuous = Vec::new();
    for (col, name) in header.iter().enumerate() {
        let values: Vec<&str> = rows
            .iter()
            .map(|(_, r)| r.get(col).unwrap_or("").trim())
            .collect();
        let numeric: Option<Vec<f64>> = values
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect();
        let looks_real = values.iter().any(|v| v.contains(['.', 'e', 'E']));
        match numeric {
            Some(nums) if !nums.is_empty() && looks_real => {
                let transform = if nums.iter().all(|&x| x >= 0.0) {
                    Transform::Log1pMinmax
                } else {
                    Transform::Minmax
                };
                continuous.push(ContinuousAttribute {
                    name: name.clone(),
                    unit: String::new(),
                    transform,
                });
            }
            _ => {
                let vocab: BTreeSet<&str> = values.into_iter().collect();
                categorical.push(CategoricalAttribute {
                    name: name.clone(),
                    vocabulary: vocab.into_iter().map(str::to_owned).collect(),
                });
            }
        }
    }
    let schema = AttributeSchema::new(categorical, continuous)?;
    schema.with_order(header.to_vec())
}

/// Writes the dataset as CSV in schema column order.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serde(format!("{other:?}")),
    })?;
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    writer.write_record(dataset.schema.column_order()).map_err(ser)?;
    for e in &dataset.entries {
        writer.write_record(e.row(&dataset.schema)).map_err(ser)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes `row_id,process` for labelled (synthetic) datasets.
pub fn write_labels(dataset: &Dataset, path: &Path) -> Result<()> {
    let labels = dataset
        .labels
        .as_ref()
        .ok_or_else(|| Error::State("dataset carries no process labels".into()))?;
    let mut out = String::from("row_id,process\n");
    for (i, &l) in labels.iter().enumerate() {
        let name = dataset
            .process_names
            .get(l)
            .cloned()
            .unwrap_or_else(|| l.to_string());
        out.push_str(&format!("{i},{name}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Attaches labels written by [`write_labels`].
pub fn read_labels(dataset: &mut Dataset, path: &Path) -> Result<()> {
    let (_, rows) = read_records(path)?;
    if rows.len() != dataset.len() {
        return Err(Error::Consistency(format!(
            "{} labels for {} entries",
            rows.len(),
            dataset.len()
        )));
    }
    let mut names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(rows.len());
    for (_, rec) in &rows {
        let name = rec.get(1).unwrap_or("").trim().to_owned();
        let id = match names.iter().position(|n| *n == name) {
            Some(i) => i,
            None => {
                names.push(name);
                names.len() - 1
            }
        };
        labels.push(id);
    }
    dataset.labels = Some(labels);
    dataset.process_names = names;
    Ok(())
}
