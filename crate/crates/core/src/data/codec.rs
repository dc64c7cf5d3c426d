use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::dataset::{ContinuousStats, Dataset, JournalEntry};
use super::schema::AttributeSchema;
use crate::error::{Error, Result};

/// Network-facing form of an entry: one-hot blocks plus scaled continuous values.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedEntry {
    pub x_cat: Vec<f64>,
    pub x_con: Vec<f64>,
}

impl EncodedEntry {
    /// `[x_cat | x_con]`, the layout the encoder consumes and the decoder emits.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x_cat.len() + self.x_con.len());
        v.extend_from_slice(&self.x_cat);
        v.extend_from_slice(&self.x_con);
        v
    }

    pub fn from_slice(schema: &AttributeSchema, v: &[f64]) -> Result<Self> {
        if v.len() != schema.encoded_dim() {
            return Err(Error::dim(format!(
                "encoded vector has length {}, schema needs {}",
                v.len(),
                schema.encoded_dim()
            )));
        }
        let split = schema.categorical_dim();
        Ok(Self {
            x_cat: v[..split].to_vec(),
            x_con: v[split..].to_vec(),
        })
    }
}

/// Decoded entry plus, per categorical attribute, the renormalised
/// probability of the chosen value.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedEntry {
    pub entry: JournalEntry,
    pub confidence: Vec<f64>,
}

/// Schema together with fitted continuous ranges: everything needed to move
/// between [`JournalEntry`] and the encoded vector space.
#[derive(Debug, Serialize, Deserialize)]
pub struct FeatureCodec {
    schema: AttributeSchema,
    stats: Vec<ContinuousStats>,
    #[serde(skip)]
    clamped: AtomicU64,
}

impl Clone for FeatureCodec {
    fn clone(&self) -> Self {
        Self {
            schema: self.schema.clone(),
            stats: self.stats.clone(),
            clamped: AtomicU64::new(0),
        }
    }
}

impl PartialEq for FeatureCodec {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.stats == other.stats
    }
}

impl FeatureCodec {
    pub fn new(schema: AttributeSchema, stats: Vec<ContinuousStats>) -> Result<Self> {
        schema.validate()?;
        if stats.len() != schema.continuous.len() {
            return Err(Error::dim("one fitted range per continuous attribute required"));
        }
        for (attr, s) in schema.continuous.iter().zip(&stats) {
            if !(s.min < s.max) {
                return Err(Error::DegenerateAttribute(attr.name.clone()));
            }
            if !attr.transform.accepts(s.min) {
                return Err(Error::config(format!(
                    "fitted minimum of {:?} is outside its transform domain",
                    attr.name
                )));
            }
        }
        Ok(Self {
            schema,
            stats,
            clamped: AtomicU64::new(0),
        })
    }

    pub fn fit(dataset: &Dataset) -> Result<Self> {
        Self::new(dataset.schema.clone(), dataset.fit_stats()?)
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn stats(&self) -> &[ContinuousStats] {
        &self.stats
    }

    pub fn encoded_dim(&self) -> usize {
        self.schema.encoded_dim()
    }

    /// Number of continuous values clamped into `[0, 1]` so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn scale(&self, i: usize, x: f64) -> f64 {
        let t = self.schema.continuous[i].transform;
        let s = self.stats[i];
        let lo = t.forward(s.min);
        let hi = t.forward(s.max);
        let y = if t.accepts(x) {
            (t.forward(x) - lo) / (hi - lo)
        } else {
            // Below the log domain: treat as the bottom of the range.
            f64::NEG_INFINITY
        };
        if (0.0..=1.0).contains(&y) {
            y
        } else {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            y.clamp(0.0, 1.0)
        }
    }

    /// Maps a scaled value of continuous attribute `i` back to raw units.
    pub fn unscale(&self, i: usize, y: f64) -> f64 {
        let t = self.schema.continuous[i].transform;
        let s = self.stats[i];
        let lo = t.forward(s.min);
        let hi = t.forward(s.max);
        t.inverse(lo + y.clamp(0.0, 1.0) * (hi - lo))
    }

    pub fn encode_entry(&self, entry: &JournalEntry) -> Result<EncodedEntry> {
        entry.validate(&self.schema)?;
        let mut x_cat = vec![0.0; self.schema.categorical_dim()];
        for ((offset, _), &idx) in self.schema.block_ranges().iter().zip(&entry.categorical) {
            x_cat[offset + idx] = 1.0;
        }
        let x_con = entry
            .continuous
            .iter()
            .enumerate()
            .map(|(i, &x)| self.scale(i, x))
            .collect();
        Ok(EncodedEntry { x_cat, x_con })
    }

    /// Encodes many entries into a row-per-entry matrix.
    pub fn encode_matrix<'a, I>(&self, entries: I) -> Result<Array2<f64>>
    where
        I: IntoIterator<Item = &'a JournalEntry>,
    {
        let dim = self.encoded_dim();
        let mut flat = Vec::new();
        let mut rows = 0;
        for e in entries {
            flat.extend(self.encode_entry(e)?.to_vec());
            rows += 1;
        }
        Array2::from_shape_vec((rows, dim), flat).map_err(|e| Error::dim(e.to_string()))
    }

    /// Argmax-decodes a reconstruction. Ties go to the lowest vocabulary index.
    pub fn decode_vector(&self, x_hat: &[f64]) -> Result<DecodedEntry> {
        if x_hat.len() != self.encoded_dim() {
            return Err(Error::dim(format!(
                "decoder vector has length {}, schema needs {}",
                x_hat.len(),
                self.encoded_dim()
            )));
        }
        let mut categorical = Vec::with_capacity(self.schema.categorical.len());
        let mut confidence = Vec::with_capacity(self.schema.categorical.len());
        for (offset, width) in self.schema.block_ranges() {
            let block = &x_hat[offset..offset + width];
            let (best, best_v) = argmax(block);
            let total: f64 = block.iter().map(|v| v.max(0.0)).sum();
            categorical.push(best);
            confidence.push(if total > 0.0 {
                best_v.max(0.0) / total
            } else {
                1.0 / width as f64
            });
        }
        let split = self.schema.categorical_dim();
        let continuous = x_hat[split..]
            .iter()
            .enumerate()
            .map(|(i, &y)| self.unscale(i, y))
            .collect();
        Ok(DecodedEntry {
            entry: JournalEntry {
                categorical,
                continuous,
            },
            confidence,
        })
    }
}

/// Index and value of the first maximum.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_v = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    (best, best_v)
}
