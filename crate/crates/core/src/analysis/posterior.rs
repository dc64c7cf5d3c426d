use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::AAEModel;

/// Encoded training entries with their nearest prior mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedPosterior {
    pub points: Vec<[f64; 2]>,
    pub modes: Vec<usize>,
    pub counts: Vec<usize>,
}

/// Majority-label share per occupied mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePurity {
    /// `None` for modes with no entries.
    pub per_mode: Vec<Option<f64>>,
    /// Label counts per mode, `[mode][label]`.
    pub table: Vec<Vec<usize>>,
    /// Smallest purity over occupied modes.
    pub min: f64,
    /// Share of all entries that carry their mode's majority label.
    pub weighted: f64,
}

impl AggregatedPosterior {
    pub fn from_points(model: &AAEModel, points: Vec<[f64; 2]>) -> Self {
        let modes: Vec<usize> = points.iter().map(|&z| model.prior.nearest_mode(z)).collect();
        let mut counts = vec![0; model.prior.tau()];
        for &k in &modes {
            counts[k] += 1;
        }
        Self {
            points,
            modes,
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn occupied_modes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Indices of the entries assigned to mode `k`.
    pub fn members(&self, k: usize) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == k)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn purity(&self, labels: &[usize]) -> Result<ModePurity> {
        if labels.len() != self.len() {
            return Err(Error::dim(format!(
                "{} labels for {} posterior points",
                labels.len(),
                self.len()
            )));
        }
        if self.is_empty() {
            return Err(Error::InsufficientData("purity of an empty posterior".into()));
        }
        let n_labels = labels.iter().max().map_or(0, |m| m + 1);
        let mut table = vec![vec![0usize; n_labels]; self.counts.len()];
        for (&k, &l) in self.modes.iter().zip(labels) {
            table[k][l] += 1;
        }
        let mut majority_total = 0;
        let per_mode: Vec<Option<f64>> = table
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                let top = row.iter().copied().max().unwrap_or(0);
                majority_total += top;
                (total > 0).then(|| top as f64 / total as f64)
            })
            .collect();
        let min = per_mode.iter().flatten().copied().fold(1.0, f64::min);
        Ok(ModePurity {
            per_mode,
            table,
            min,
            weighted: majority_total as f64 / self.len() as f64,
        })
    }
}

/// Encodes every entry and assigns it to the nearest prior mean.
pub fn aggregated_posterior(model: &AAEModel, dataset: &Dataset) -> Result<AggregatedPosterior> {
    if dataset.schema.fingerprint() != model.codec.schema().fingerprint() {
        return Err(Error::dim("dataset schema differs from the model schema"));
    }
    if dataset.is_empty() {
        return Err(Error::InsufficientData("aggregated posterior of an empty dataset".into()));
    }
    let points = model.encode_entries(&dataset.entries)?;
    Ok(AggregatedPosterior::from_points(model, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::test_support::{constant_encoder_model, small_dataset};

    #[test]
    fn single_entry() {
        let ds = small_dataset(1);
        let model = constant_encoder_model(&ds, [0.0, 0.0], Some(0.0));
        let post = aggregated_posterior(&model, &ds).unwrap();
        assert_eq!(post.len(), 1);
        assert_eq!(post.counts.iter().sum::<usize>(), 1);
    }

    #[test]
    fn forced_encoder_lands_in_one_mode() {
        let ds = small_dataset(50);
        let probe = constant_encoder_model(&ds, [0.0, 0.0], Some(0.0));
        let mu3 = probe.prior.mean(3).unwrap();
        let model = constant_encoder_model(&ds, mu3, Some(0.0));
        let post = aggregated_posterior(&model, &ds).unwrap();
        assert_eq!(post.counts[3], 50);
        assert_eq!(post.occupied_modes(), 1);
        let labels: Vec<usize> = (0..50).map(|i| usize::from(i % 5 == 0)).collect();
        let p = post.purity(&labels).unwrap();
        assert!((p.min - 0.8).abs() < 1e-12);
        assert_eq!(p.per_mode[0], None);
    }

    #[test]
    fn purity_by_hand() {
        let ds = small_dataset(1);
        let model = constant_encoder_model(&ds, [0.0, 0.0], Some(0.0));
        let m0 = model.prior.mean(0).unwrap();
        let m8 = model.prior.mean(8).unwrap();
        let post = AggregatedPosterior::from_points(&model, vec![m0, m0, m0, m8, m8]);
        let p = post.purity(&[0, 0, 1, 2, 2]).unwrap();
        assert!((p.min - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.weighted - 0.8).abs() < 1e-12);
        assert_eq!(p.table[0], vec![2, 1, 0]);
        assert!(post.purity(&[0, 1]).is_err());
    }

    #[test]
    fn schema_mismatch_is_a_dimension_error() {
        let ds = small_dataset(5);
        let model = constant_encoder_model(&ds, [0.0, 0.0], None);
        let other = crate::data::synth_generate(&crate::data::desk_spec(), 5, 1).unwrap();
        assert!(matches!(aggregated_posterior(&model, &other), Err(Error::Dimension(_))));
    }
}
