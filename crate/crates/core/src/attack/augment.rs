use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::entry::{rescore, AdversarialEntry, AttackProvenance};
use super::replace::{categorical_indices, conditioned_candidates};
use crate::analysis::AdversarialRegion;
use crate::data::JournalEntry;
use crate::error::{Error, Result};
use crate::model::AAEModel;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationSpec {
    pub target: JournalEntry,
    /// Categorical attribute held at the target's value.
    pub conditioned: String,
    pub n_samples: usize,
    pub region: AdversarialRegion,
    pub min_robustness: f64,
    pub retry_budget: usize,
    pub seed: u64,
}

/// Generates `n_samples` distinct entries that share the target's value of
/// the conditioned attribute and vary elsewhere.
pub fn augment_anomaly(model: &AAEModel, spec: &AugmentationSpec) -> Result<Vec<AdversarialEntry>> {
    let schema = model.codec.schema();
    spec.target.validate(schema)?;
    let cond = categorical_indices(model, std::slice::from_ref(&spec.conditioned))?;
    if spec.n_samples == 0 {
        return Err(Error::config("n_samples must be at least 1"));
    }
    if !(0.0..=1.0).contains(&spec.min_robustness) {
        return Err(Error::config(format!(
            "robustness threshold must lie in [0,1], got {}",
            spec.min_robustness
        )));
    }
    if spec.min_robustness >= 1.0 {
        return Err(Error::AttackInfeasible(
            "the discriminator output never reaches 1".into(),
        ));
    }
    if spec.region.is_empty() {
        return Err(Error::AttackInfeasible(format!(
            "region of mode {} is empty: {}",
            spec.region.k,
            spec.region.diagnostic.as_deref().unwrap_or("no members")
        )));
    }

    let mut candidates = conditioned_candidates(model, &spec.region, &spec.target, &cond)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    candidates.shuffle(&mut rng);
    let mut accepted: Vec<AdversarialEntry> = Vec::with_capacity(spec.n_samples);
    let mut examined = 0;
    let mut best = f64::NEG_INFINITY;
    for c in candidates.iter().take(spec.retry_budget) {
        if accepted.len() == spec.n_samples && (spec.n_samples < 2 || varies(&accepted, cond[0])) {
            break;
        }
        examined += 1;
        if accepted.iter().any(|a| a.entry == c.entry) {
            continue;
        }
        let (z, d) = rescore(model, &c.entry)?;
        best = best.max(d);
        if d < spec.min_robustness {
            continue;
        }
        let sample = AdversarialEntry {
            entry: c.entry.clone(),
            z,
            robustness: d,
            provenance: AttackProvenance {
                k: spec.region.k,
                threshold: spec.min_robustness,
                step: 0,
                mechanism: c.mechanism,
                source_z: c.z,
            },
        };
        if accepted.len() < spec.n_samples {
            accepted.push(sample);
        } else if differs_outside(&accepted[0].entry, &sample.entry, cond[0]) {
            // Full but uniform: swap in a sample that differs.
            *accepted.last_mut().expect("n_samples >= 1") = sample;
        }
    }
    if accepted.len() < spec.n_samples {
        return Err(Error::AttackInfeasible(format!(
            "only {} of {} samples reach robustness {} after {examined} region points (best {best:.4})",
            accepted.len(),
            spec.n_samples,
            spec.min_robustness
        )));
    }
    if spec.n_samples >= 2 && !varies(&accepted, cond[0]) {
        return Err(Error::AttackInfeasible(
            "every robust sample is identical outside the conditioned attribute".into(),
        ));
    }
    for (i, a) in accepted.iter_mut().enumerate() {
        a.provenance.step = i;
    }
    Ok(accepted)
}

fn differs_outside(a: &JournalEntry, b: &JournalEntry, cond: usize) -> bool {
    a.categorical.iter().zip(&b.categorical).enumerate().any(|(j, (x, y))| j != cond && x != y)
        || a.continuous != b.continuous
}

/// Whether some unconditioned attribute takes at least two values.
fn varies(samples: &[AdversarialEntry], cond: usize) -> bool {
    samples
        .iter()
        .any(|s| differs_outside(&samples[0].entry, &s.entry, cond))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::test_support::*;
    use crate::analysis::{adversarial_region, build_grid};
    use crate::neural::Activation;
    use ndarray::Array2;

    fn model() -> AAEModel {
        let mut w = Array2::zeros((6, 2));
        w[[2, 1]] = 1.0;
        w[[3, 1]] = -1.0;
        w[[5, 0]] = 0.5;
        let dec = layer(w, vec![0.9, 0.1, 0.5, 0.5, 0.1, 0.5], Activation::Identity);
        let mut enc = Array2::zeros((2, 6));
        enc[[0, 5]] = 0.1;
        enc[[1, 4]] = -0.2;
        let enc = layer(enc, vec![0.0, 0.0], Activation::Identity);
        model_with(enc, dec, linear_discriminator(1.0, 1.0, 0.0), None)
    }

    fn spec(m: &AAEModel, n: usize, threshold: f64) -> AugmentationSpec {
        let g = build_grid((-1.0, 1.0), 0.02).unwrap();
        AugmentationSpec {
            target: JournalEntry {
                categorical: vec![1, 2],
                continuous: vec![50.0],
            },
            conditioned: "b".into(),
            n_samples: n,
            region: adversarial_region(m, &g, 4, 0.0).unwrap(),
            min_robustness: threshold,
            retry_budget: 1_000,
            seed: 11,
        }
    }

    #[test]
    fn conditioned_value_is_forced_and_others_vary() {
        let m = model();
        let out = augment_anomaly(&m, &spec(&m, 15, 0.4)).unwrap();
        assert_eq!(out.len(), 15);
        for a in &out {
            assert_eq!(a.entry.categorical[1], 2);
            assert!(a.robustness >= 0.4);
            assert_eq!(m.robustness(&a.entry).unwrap(), (a.z, a.robustness));
        }
        assert!(out.iter().any(|a| a.entry.continuous != out[0].entry.continuous));
        for (i, a) in out.iter().enumerate() {
            assert!(out[..i].iter().all(|b| b.entry != a.entry));
        }
    }

    #[test]
    fn single_sample() {
        let m = model();
        let out = augment_anomaly(&m, &spec(&m, 1, 0.4)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].entry.categorical[1], 2);
    }

    #[test]
    fn unreachable_threshold() {
        let m = model();
        assert!(matches!(augment_anomaly(&m, &spec(&m, 1, 1.0)), Err(Error::AttackInfeasible(_))));
        assert!(matches!(augment_anomaly(&m, &spec(&m, 1, 0.99)), Err(Error::AttackInfeasible(_))));
    }

    #[test]
    fn too_many_samples_for_the_region() {
        let m = model();
        let mut s = spec(&m, 5, 0.4);
        s.n_samples = 100_000;
        assert!(matches!(augment_anomaly(&m, &s), Err(Error::AttackInfeasible(_))));
    }
}
