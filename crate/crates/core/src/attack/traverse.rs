use serde::{Deserialize, Serialize};

use super::entry::{decode_entry, AdversarialEntry, AttackProvenance, Mechanism};
use super::stats::spearman;
use crate::analysis::AdversarialRegion;
use crate::error::{Error, Result};
use crate::model::AAEModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z1,
    Z2,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z1" => Ok(Self::Z1),
            "z2" => Ok(Self::Z2),
            _ => Err(Error::config(format!("unknown axis {s:?} (z1, z2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalSample {
    pub sample: AdversarialEntry,
    /// Whether the sampled point satisfies both region predicates.
    pub inside: bool,
}

/// Number of trajectory points `a, a + step, ..., <= b`.
pub fn trajectory_len(range: (f64, f64), step: f64) -> usize {
    ((range.1 - range.0) / step + 1e-9).floor() as usize + 1
}

/// Decodes equidistant points along one latent axis with the other held at
/// `fixed_other`. Samples outside the region are kept and flagged.
pub fn traverse_trajectory(
    model: &AAEModel,
    region: &AdversarialRegion,
    axis: Axis,
    range: (f64, f64),
    step: f64,
    fixed_other: f64,
) -> Result<Vec<TraversalSample>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::config(format!("traversal step must be positive, got {step}")));
    }
    if !(range.0 <= range.1) {
        return Err(Error::config(format!("traversal range [{}, {}] is reversed", range.0, range.1)));
    }
    (0..trajectory_len(range, step))
        .map(|i| {
            let t = range.0 + i as f64 * step;
            let z = match axis {
                Axis::Z1 => [t, fixed_other],
                Axis::Z2 => [fixed_other, t],
            };
            let robustness = model.discriminate(z)?;
            let inside = model.prior.nearest_mode(z) == region.k && robustness >= region.threshold;
            Ok(TraversalSample {
                sample: AdversarialEntry {
                    entry: decode_entry(model, z)?,
                    z,
                    robustness,
                    provenance: AttackProvenance {
                        k: region.k,
                        threshold: region.threshold,
                        step: i,
                        mechanism: Mechanism::Traversal,
                        source_z: z,
                    },
                },
                inside,
            })
        })
        .collect()
}

/// Rank correlation between closeness to the region mode and robustness over
/// the in-region samples. Positive when scores rise towards the mode.
pub fn mode_robustness_correlation(samples: &[TraversalSample], region: &AdversarialRegion) -> Option<f64> {
    let mode = region.mode_point()?;
    let (closeness, scores): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.inside)
        .map(|s| {
            let z = s.sample.z;
            (-((z[0] - mode[0]).powi(2) + (z[1] - mode[1]).powi(2)).sqrt(), s.sample.robustness)
        })
        .unzip();
    spearman(&closeness, &scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::test_support::*;
    use crate::analysis::{adversarial_region, build_grid};

    fn bump_model() -> AAEModel {
        // Score rises along z1, so the centre cell peaks on its right edge.
        model_with(
            constant_encoder([0.0, 0.0]),
            constant_decoder(),
            linear_discriminator(3.0, 0.0, 0.0),
            None,
        )
    }

    #[test]
    fn sample_counts() {
        assert_eq!(trajectory_len((-0.2, 0.6), 0.02), 41);
        assert_eq!(trajectory_len((0.0, 0.0), 0.02), 1);
        let m = bump_model();
        let g = build_grid((-1.0, 1.0), 0.02).unwrap();
        let r = adversarial_region(&m, &g, 4, 0.49).unwrap();
        let t = traverse_trajectory(&m, &r, Axis::Z1, (-0.2, 0.6), 0.02, 0.0).unwrap();
        assert_eq!(t.len(), 41);
        assert_eq!(traverse_trajectory(&m, &r, Axis::Z2, (0.0, 0.0), 0.02, 0.0).unwrap().len(), 1);
        assert!(traverse_trajectory(&m, &r, Axis::Z1, (0.5, 0.0), 0.02, 0.0).is_err());
    }

    #[test]
    fn robustness_is_rederivable_and_flags_are_correct() {
        let m = bump_model();
        let g = build_grid((-1.0, 1.0), 0.02).unwrap();
        let r = adversarial_region(&m, &g, 4, 0.49).unwrap();
        let t = traverse_trajectory(&m, &r, Axis::Z1, (-0.2, 0.6), 0.02, 0.0).unwrap();
        for (i, s) in t.iter().enumerate() {
            let z = s.sample.z;
            assert!((z[0] - (-0.2 + 0.02 * i as f64)).abs() < 1e-12 && z[1] == 0.0);
            assert!(s.sample.robustness > 0.0 && s.sample.robustness < 1.0);
            assert_eq!(s.sample.robustness, m.discriminate(z).unwrap());
            assert_eq!(s.inside, r.admits(&m, z).unwrap());
            assert_eq!(s.sample.provenance.step, i);
        }
        // z1 past 1/3 leaves the centre cell.
        assert!(!t.last().unwrap().inside);
        assert!(t.iter().any(|s| s.inside));
    }

    #[test]
    fn scores_rise_towards_the_mode() {
        let m = bump_model();
        let g = build_grid((-1.0, 1.0), 0.02).unwrap();
        let r = adversarial_region(&m, &g, 4, 0.49).unwrap();
        let t = traverse_trajectory(&m, &r, Axis::Z1, (-0.2, 0.6), 0.02, 0.0).unwrap();
        assert!(mode_robustness_correlation(&t, &r).unwrap() > 0.0);
    }
}
