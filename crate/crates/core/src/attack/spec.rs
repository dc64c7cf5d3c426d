use serde::{Deserialize, Serialize};

use super::replace::{categorical_indices, DEFAULT_RETRY_BUDGET};
use crate::analysis::{adversarial_region, posterior_threshold, AdversarialRegion, AggregatedPosterior, SampleGrid};
use crate::data::{Dataset, JournalEntry};
use crate::error::{Error, Result};
use crate::model::AAEModel;

pub const DEFAULT_THRESHOLD_QUANTILE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackClass {
    Replacement,
    Augmentation,
}

/// Where to sample from. Unset `k` picks the mode holding most training
/// entries that share the target's conditioned values; unset `threshold`
/// takes `threshold_quantile` of the scores of that mode's training entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionRef {
    #[serde(default)]
    pub checkpoint: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_quantile")]
    pub threshold_quantile: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_quantile() -> f64 {
    DEFAULT_THRESHOLD_QUANTILE
}

fn default_delta() -> f64 {
    crate::analysis::DEFAULT_DELTA
}

fn default_budget() -> usize {
    DEFAULT_RETRY_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplacementParams {
    pub amount: String,
    pub border: f64,
    pub n_splits: usize,
    pub conditioned: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationParams {
    pub conditioned: String,
    pub n_samples: usize,
    /// Defaults to the region threshold.
    #[serde(default)]
    pub min_robustness: Option<f64>,
}

/// Attack spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackFile {
    pub class: AttackClass,
    pub target_row: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub retry_budget: usize,
    pub region: RegionRef,
    #[serde(default)]
    pub replacement: Option<ReplacementParams>,
    #[serde(default)]
    pub augmentation: Option<AugmentationParams>,
}

impl AttackFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        match f.class {
            AttackClass::Replacement if f.replacement.is_none() => {
                Err(Error::config("replacement attack needs a [replacement] table"))
            }
            AttackClass::Augmentation if f.augmentation.is_none() => {
                Err(Error::config("augmentation attack needs an [augmentation] table"))
            }
            _ => Ok(f),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("attack file serialises")
    }

    /// Conditioned attribute names for the selected class.
    pub fn conditioned(&self) -> Vec<String> {
        match self.class {
            AttackClass::Replacement => self.replacement.as_ref().map(|r| r.conditioned.clone()),
            AttackClass::Augmentation => self.augmentation.as_ref().map(|a| vec![a.conditioned.clone()]),
        }
        .unwrap_or_default()
    }
}

/// Mode holding most posterior entries equal to `target` on `conditioned`;
/// the target's own mode when no training entry matches.
pub fn select_mode(
    model: &AAEModel,
    dataset: &Dataset,
    posterior: &AggregatedPosterior,
    target: &JournalEntry,
    conditioned: &[String],
) -> Result<usize> {
    let idx = categorical_indices(model, conditioned)?;
    let mut counts = vec![0usize; model.prior.tau()];
    for (e, &k) in dataset.entries.iter().zip(&posterior.modes) {
        if idx.iter().all(|&j| e.categorical[j] == target.categorical[j]) {
            counts[k] += 1;
        }
    }
    let (best, &n) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("tau >= 4");
    if n == 0 {
        Ok(model.prior.nearest_mode(model.encode(target)?))
    } else {
        Ok(best)
    }
}

/// Builds the region a spec file refers to.
pub fn resolve_region(
    model: &AAEModel,
    dataset: &Dataset,
    posterior: &AggregatedPosterior,
    target: &JournalEntry,
    conditioned: &[String],
    region: &RegionRef,
) -> Result<AdversarialRegion> {
    let k = match region.k {
        Some(k) => k,
        None => select_mode(model, dataset, posterior, target, conditioned)?,
    };
    let threshold = match region.threshold {
        Some(t) => t,
        None => posterior_threshold(model, posterior, k, region.threshold_quantile)?,
    };
    let grid = SampleGrid::new(model.prior.bounds(), region.delta)?;
    adversarial_region(model, &grid, k, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    const REPLACEMENT: &str = r#"
class = "replacement"
target_row = 10000
seed = 7

[region]
k = 4
threshold = 0.5

[replacement]
amount = "amount_local"
border = 25000.0
n_splits = 5
conditioned = ["company_code", "gl_account"]
"#;

    #[test]
    fn parse_and_round_trip() {
        let f = AttackFile::from_toml_str(REPLACEMENT).unwrap();
        assert_eq!(f.class, AttackClass::Replacement);
        assert_eq!(f.retry_budget, DEFAULT_RETRY_BUDGET);
        assert_eq!(f.region.threshold_quantile, DEFAULT_THRESHOLD_QUANTILE);
        assert_eq!(f.conditioned().len(), 2);
        assert_eq!(AttackFile::from_toml_str(&f.to_toml_string()).unwrap(), f);
    }

    #[test]
    fn missing_table_or_unknown_key() {
        let text = REPLACEMENT.replace("class = \"replacement\"", "class = \"augmentation\"");
        assert!(AttackFile::from_toml_str(&text).is_err());
        let text = REPLACEMENT.replace("seed = 7", "seed = 7\nbogus = 1");
        assert!(AttackFile::from_toml_str(&text).is_err());
    }
}
