use serde::{Deserialize, Serialize};

use crate::data::{from_cents, to_cents, JournalEntry};
use crate::error::Result;
use crate::model::AAEModel;

/// How an adversarial entry's conditioned attributes were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    /// Plain decode of a trajectory point.
    Traversal,
    /// The region point already decoded to the required values.
    Filter,
    /// The required values were written over the decoded blocks.
    Overwrite,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Traversal => "traversal",
            Mechanism::Filter => "filter",
            Mechanism::Overwrite => "overwrite",
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traversal" => Ok(Self::Traversal),
            "filter" => Ok(Self::Filter),
            "overwrite" => Ok(Self::Overwrite),
            _ => Err(crate::Error::Serde(format!("unknown mechanism {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackProvenance {
    pub k: usize,
    pub threshold: f64,
    /// Traversal step or selection order within the attack.
    pub step: usize,
    pub mechanism: Mechanism,
    /// Latent point the entry was decoded from.
    pub source_z: [f64; 2],
}

/// A generated entry with the latent point it maps to and its score there.
///
/// `robustness == discriminate(z)` for the generating checkpoint. For
/// traversal samples `z` is the sampled point; for replacement and
/// augmentation it is the re-encoded point of the final entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialEntry {
    pub entry: JournalEntry,
    pub z: [f64; 2],
    pub robustness: f64,
    pub provenance: AttackProvenance,
}

/// Decodes `z` into an entry with continuous values rounded to cents.
pub(crate) fn decode_entry(model: &AAEModel, z: [f64; 2]) -> Result<JournalEntry> {
    let out = model.decoder.predict(&z)?;
    let mut entry = model.codec.decode_vector(&out)?.entry;
    for v in &mut entry.continuous {
        *v = from_cents(to_cents(*v).max(1));
    }
    Ok(entry)
}

/// Re-encodes `entry` and scores the resulting point.
pub(crate) fn rescore(model: &AAEModel, entry: &JournalEntry) -> Result<([f64; 2], f64)> {
    model.robustness(entry)
}
