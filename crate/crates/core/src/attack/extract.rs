use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::entry::{AdversarialEntry, Mechanism};
use crate::data::{write_csv, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestAction {
    Removed,
    Added,
}

/// One changed row. `row_id` indexes the original data for removed rows and
/// the adversarial extract for added rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub action: ManifestAction,
    pub row_id: usize,
    pub z1: Option<f64>,
    pub z2: Option<f64>,
    pub robustness: Option<f64>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub step: Option<usize>,
    pub mechanism: Option<String>,
}

/// Evaluation-only record of what an adversarial extract changed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn removed(&self) -> Vec<usize> {
        self.ids(ManifestAction::Removed)
    }

    pub fn added(&self) -> Vec<usize> {
        self.ids(ManifestAction::Added)
    }

    fn ids(&self, action: ManifestAction) -> Vec<usize> {
        self.rows.iter().filter(|r| r.action == action).map(|r| r.row_id).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("action,row_id,z1,z2,robustness,k,threshold,step,mechanism\n");
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                match r.action {
                    ManifestAction::Removed => "removed",
                    ManifestAction::Added => "added",
                },
                r.row_id,
                opt(r.z1.map(|v| v.to_string())),
                opt(r.z2.map(|v| v.to_string())),
                opt(r.robustness.map(|v| v.to_string())),
                opt(r.k.map(|v| v.to_string())),
                opt(r.threshold.map(|v| v.to_string())),
                opt(r.step.map(|v| v.to_string())),
                opt(r.mechanism.clone()),
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in reader.deserialize::<ManifestRow>().enumerate() {
            rows.push(rec.map_err(|e| Error::Parse {
                line: i + 2,
                message: e.to_string(),
            })?);
        }
        Ok(Self { rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// The original rows minus `removed`, followed by the `added` entries.
pub fn build_adversarial_extract(
    original: &Dataset,
    removed: &[usize],
    added: &[AdversarialEntry],
) -> Result<(Dataset, Manifest)> {
    let drop: BTreeSet<usize> = removed.iter().copied().collect();
    if drop.len() != removed.len() {
        return Err(Error::Consistency("a removed row is listed twice".into()));
    }
    if let Some(&bad) = drop.iter().find(|&&r| r >= original.len()) {
        return Err(Error::Consistency(format!(
            "removed row {bad} is not in the original data ({} rows)",
            original.len()
        )));
    }
    for a in added {
        a.entry.validate(&original.schema)?;
    }
    let mut entries: Vec<_> = original
        .entries
        .iter()
        .enumerate()
        .filter(|(i, _)| !drop.contains(i))
        .map(|(_, e)| e.clone())
        .collect();
    let mut rows: Vec<ManifestRow> = drop
        .iter()
        .map(|&row_id| ManifestRow {
            action: ManifestAction::Removed,
            row_id,
            z1: None,
            z2: None,
            robustness: None,
            k: None,
            threshold: None,
            step: None,
            mechanism: None,
        })
        .collect();
    for a in added {
        rows.push(ManifestRow {
            action: ManifestAction::Added,
            row_id: entries.len(),
            z1: Some(a.z[0]),
            z2: Some(a.z[1]),
            robustness: Some(a.robustness),
            k: Some(a.provenance.k),
            threshold: Some(a.provenance.threshold),
            step: Some(a.provenance.step),
            mechanism: Some(Mechanism::as_str(a.provenance.mechanism).to_string()),
        });
        entries.push(a.entry.clone());
    }
    let labels = original.labels.as_ref().map(|l| {
        l.iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, &v)| v)
            .collect()
    });
    let mut out = Dataset::new(original.schema.clone(), entries, original.provenance);
    // Added rows carry no process label, so labels only survive a pure removal.
    if added.is_empty() {
        out.labels = labels;
        out.process_names = original.process_names.clone();
    }
    Ok((out, Manifest { rows }))
}

/// Writes the extract CSV (same columns as the original) and its manifest.
pub fn emit_adversarial_extract(
    original: &Dataset,
    removed: &[usize],
    added: &[AdversarialEntry],
    extract_path: &Path,
    manifest_path: &Path,
) -> Result<(Dataset, Manifest)> {
    let (extract, manifest) = build_adversarial_extract(original, removed, added)?;
    write_csv(&extract, extract_path)?;
    std::fs::write(manifest_path, manifest.to_csv()).map_err(|e| Error::io(manifest_path, e))?;
    Ok((extract, manifest))
}
