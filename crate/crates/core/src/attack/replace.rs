use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::entry::{decode_entry, rescore, AdversarialEntry, AttackProvenance, Mechanism};
use crate::analysis::AdversarialRegion;
use crate::data::{from_cents, to_cents, AttributeRef, JournalEntry};
use crate::error::{Error, Result};
use crate::model::AAEModel;

pub const DEFAULT_RETRY_BUDGET: usize = 1_000;
/// Largest relative deviation of a split from `target / n_splits`.
pub const SPLIT_JITTER: f64 = 0.6;
/// Region candidates considered per desired split magnitude.
const CANDIDATE_POOL: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementSpec {
    pub target: JournalEntry,
    /// Continuous attribute that is split.
    pub amount_attribute: String,
    pub approval_border: f64,
    pub n_splits: usize,
    /// Categorical attributes held at the target's values.
    pub conditioned: Vec<String>,
    pub region: AdversarialRegion,
    /// Region points that may be consumed before giving up.
    pub retry_budget: usize,
    pub seed: u64,
}

/// Candidate built from one region point.
#[derive(Debug, Clone)]
pub(crate) struct Candidate {
    pub z: [f64; 2],
    pub entry: JournalEntry,
    pub mechanism: Mechanism,
}

/// Decodes every region point and holds the conditioned blocks at the
/// target's values: points that already decode to them come first (filter);
/// if there are none, all points are forced (overwrite).
pub(crate) fn conditioned_candidates(
    model: &AAEModel,
    region: &AdversarialRegion,
    target: &JournalEntry,
    conditioned: &[usize],
) -> Result<Vec<Candidate>> {
    let mut filtered = Vec::new();
    let mut forced = Vec::new();
    for z in region.points() {
        let mut entry = decode_entry(model, z)?;
        if conditioned.iter().all(|&j| entry.categorical[j] == target.categorical[j]) {
            filtered.push(Candidate {
                z,
                entry,
                mechanism: Mechanism::Filter,
            });
        } else {
            for &j in conditioned {
                entry.categorical[j] = target.categorical[j];
            }
            forced.push(Candidate {
                z,
                entry,
                mechanism: Mechanism::Overwrite,
            });
        }
    }
    Ok(if filtered.is_empty() { forced } else { filtered })
}

pub(crate) fn categorical_indices(model: &AAEModel, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| match model.codec.schema().require(n)? {
            AttributeRef::Categorical(j) => Ok(j),
            AttributeRef::Continuous(_) => Err(Error::config(format!(
                "conditioned attribute {n:?} must be categorical"
            ))),
        })
        .collect()
}

/// Splits `total` cents in proportion to `weights`; the rounding remainder
/// goes to the largest share so the parts sum exactly.
pub fn apportion_cents(total: i64, weights: &[f64]) -> Vec<i64> {
    let sum: f64 = weights.iter().sum();
    let mut parts: Vec<i64> = weights
        .iter()
        .map(|w| (total as f64 * w / sum).floor() as i64)
        .collect();
    let rest = total - parts.iter().sum::<i64>();
    if let Some(big) = (0..parts.len()).max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a))) {
        parts[big] += rest;
    }
    parts
}

/// Splits the target's amount over `n_splits` entries drawn from the region,
/// each below the approval border and each scoring at least the region
/// threshold after re-encoding.
pub fn replace_anomaly(model: &AAEModel, spec: &ReplacementSpec) -> Result<Vec<AdversarialEntry>> {
    let schema = model.codec.schema();
    spec.target.validate(schema)?;
    if spec.n_splits < 2 {
        return Err(Error::config("a replacement needs at least 2 splits"));
    }
    if !(spec.approval_border > 0.0) {
        return Err(Error::config("approval border must be positive"));
    }
    let amount = match schema.require(&spec.amount_attribute)? {
        AttributeRef::Continuous(j) => j,
        AttributeRef::Categorical(_) => {
            return Err(Error::config(format!(
                "amount attribute {:?} must be continuous",
                spec.amount_attribute
            )))
        }
    };
    let conditioned = categorical_indices(model, &spec.conditioned)?;
    let target_c = to_cents(spec.target.continuous[amount]);
    let border_c = to_cents(spec.approval_border);
    let n = spec.n_splits as i64;
    if target_c > n * (border_c - 1) {
        return Err(Error::AttackInfeasible(format!(
            "{} splits below {} cannot sum to {}",
            spec.n_splits,
            spec.approval_border,
            from_cents(target_c)
        )));
    }
    if spec.region.is_empty() {
        return Err(Error::AttackInfeasible(format!(
            "region of mode {} is empty: {}",
            spec.region.k,
            spec.region.diagnostic.as_deref().unwrap_or("no members")
        )));
    }

    let candidates = conditioned_candidates(model, &spec.region, &spec.target, &conditioned)?;
    let mut by_amount: Vec<(f64, usize)> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (c.entry.continuous[amount].ln(), i))
        .collect();
    by_amount.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mean = from_cents(target_c) / spec.n_splits as f64;
    let mut consumed = 0;
    let mut attempts = 0;
    let mut best_floor = f64::NEG_INFINITY;
    let mut rejected_shape = 0;
    while consumed + spec.n_splits <= spec.retry_budget {
        attempts += 1;
        consumed += spec.n_splits;
        let mut picked: Vec<usize> = Vec::with_capacity(spec.n_splits);
        for _ in 0..spec.n_splits {
            let want = (mean * (1.0 + rng.random_range(-SPLIT_JITTER..=SPLIT_JITTER))).ln();
            let pos = by_amount.partition_point(|(a, _)| *a < want);
            let lo = pos.saturating_sub(CANDIDATE_POOL / 2);
            let hi = (lo + CANDIDATE_POOL).min(by_amount.len());
            let lo = hi.saturating_sub(CANDIDATE_POOL);
            let pool: Vec<usize> = by_amount[lo..hi]
                .iter()
                .map(|&(_, i)| i)
                .filter(|i| !picked.contains(i) || candidates.len() < spec.n_splits)
                .collect();
            let choice = if pool.is_empty() {
                by_amount[rng.random_range(0..by_amount.len())].1
            } else {
                pool[rng.random_range(0..pool.len())]
            };
            picked.push(choice);
        }

        let weights: Vec<f64> = picked.iter().map(|&i| candidates[i].entry.continuous[amount]).collect();
        let cents = apportion_cents(target_c, &weights);
        let even = target_c as f64 / spec.n_splits as f64;
        let shaped = cents.iter().all(|&c| {
            c >= 1 && c < border_c && (c as f64 - even).abs() <= SPLIT_JITTER * even + 1.0
        });
        if !shaped {
            rejected_shape += 1;
            continue;
        }

        let others: Vec<Vec<i64>> = (0..schema.continuous.len())
            .map(|j| {
                if j == amount {
                    cents.clone()
                } else {
                    apportion_cents(to_cents(spec.target.continuous[j]), &cents.iter().map(|&c| c as f64).collect::<Vec<_>>())
                }
            })
            .collect();

        let mut out = Vec::with_capacity(spec.n_splits);
        let mut floor = f64::INFINITY;
        for (s, &ci) in picked.iter().enumerate() {
            let c = &candidates[ci];
            let mut entry = c.entry.clone();
            for &j in &conditioned {
                entry.categorical[j] = spec.target.categorical[j];
            }
            for (j, v) in entry.continuous.iter_mut().enumerate() {
                *v = from_cents(others[j][s].max(1));
            }
            let (z, d) = rescore(model, &entry)?;
            floor = floor.min(d);
            out.push(AdversarialEntry {
                entry,
                z,
                robustness: d,
                provenance: AttackProvenance {
                    k: spec.region.k,
                    threshold: spec.region.threshold,
                    step: s,
                    mechanism: c.mechanism,
                    source_z: c.z,
                },
            });
        }
        best_floor = best_floor.max(floor);
        if floor >= spec.region.threshold {
            return Ok(out);
        }
    }
    Err(Error::AttackInfeasible(format!(
        "no split set passed after {attempts} attempts ({consumed} region points, {} candidates via {}): \
         {rejected_shape} rejected on split size, best lowest robustness {best_floor:.4} vs threshold {}",
        candidates.len(),
        candidates.first().map_or("none", |c| c.mechanism.as_str()),
        spec.region.threshold
    )))
}
