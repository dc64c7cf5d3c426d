use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, JournalEntry, Provenance};
use super::schema::{AttributeSchema, CategoricalAttribute, ContinuousAttribute, Transform};
use crate::error::{Error, Result};

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Distribution of one continuous attribute within a process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContinuousDist {
    /// `exp(N(mu, sigma))`.
    LogNormal { mu: f64, sigma: f64 },
    /// Another attribute of the same entry times a log-normal factor.
    Scaled { of: String, mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub name: String,
    pub weight: f64,
    /// attribute -> (value -> probability)
    pub categorical: BTreeMap<String, BTreeMap<String, f64>>,
    pub continuous: BTreeMap<String, ContinuousDist>,
}

/// A schema plus a mixture of generating processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub schema: AttributeSchema,
    /// Decimal places amounts are rounded to.
    #[serde(default = "default_decimals")]
    pub decimals: u32,
    #[serde(rename = "process")]
    pub processes: Vec<ProcessSpec>,
}

fn default_decimals() -> u32 {
    2
}

struct CompiledProcess {
    categorical: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    continuous: Vec<CompiledContinuous>,
}

enum CompiledContinuous {
    LogNormal(LogNormal<f64>),
    Scaled(usize, LogNormal<f64>),
}

fn lognormal(mu: f64, sigma: f64) -> Result<LogNormal<f64>> {
    LogNormal::new(mu, sigma)
        .map_err(|e| Error::config(format!("log-normal({mu}, {sigma}): {e}")))
}

fn check_weights(what: &str, weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::config(format!("{what}: weight {w} is not a probability")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::config(format!("{what}: weights sum to {sum}, not 1")));
    }
    Ok(())
}

impl SynthSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("synth spec serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }

    fn compile(&self) -> Result<Vec<CompiledProcess>> {
        self.schema.validate()?;
        if self.processes.is_empty() {
            return Err(Error::config("at least one process is required"));
        }
        check_weights("mixture", self.processes.iter().map(|p| p.weight))?;
        let mut compiled = Vec::with_capacity(self.processes.len());
        for p in &self.processes {
            for name in p.categorical.keys().chain(p.continuous.keys()) {
                self.schema.require(name)?;
            }
            let mut categorical = Vec::with_capacity(self.schema.categorical.len());
            for attr in &self.schema.categorical {
                let dist = p.categorical.get(&attr.name).ok_or_else(|| {
                    Error::config(format!("process {:?} lacks attribute {:?}", p.name, attr.name))
                })?;
                check_weights(&format!("{}.{}", p.name, attr.name), dist.values().copied())?;
                let mut idx = Vec::new();
                let mut w = Vec::new();
                for (value, &prob) in dist {
                    let i = attr.index_of(value).ok_or_else(|| Error::Vocabulary {
                        attribute: attr.name.clone(),
                        value: value.clone(),
                    })?;
                    idx.push(i);
                    w.push(prob);
                }
                let wi = WeightedIndex::new(&w).map_err(|e| Error::config(e.to_string()))?;
                categorical.push((idx, wi));
            }
            let mut continuous = Vec::with_capacity(self.schema.continuous.len());
            for attr in &self.schema.continuous {
                let dist = p.continuous.get(&attr.name).ok_or_else(|| {
                    Error::config(format!("process {:?} lacks attribute {:?}", p.name, attr.name))
                })?;
                continuous.push(match dist {
                    ContinuousDist::LogNormal { mu, sigma } => {
                        CompiledContinuous::LogNormal(lognormal(*mu, *sigma)?)
                    }
                    ContinuousDist::Scaled { of, mu, sigma } => {
                        let base = self.schema.continuous_index(of)?;
                        if !matches!(
                            p.continuous.get(of),
                            Some(ContinuousDist::LogNormal { .. })
                        ) {
                            return Err(Error::config(format!(
                                "{}.{}: scaled attributes must reference a log-normal one",
                                p.name, attr.name
                            )));
                        }
                        CompiledContinuous::Scaled(base, lognormal(*mu, *sigma)?)
                    }
                });
            }
            compiled.push(CompiledProcess {
                categorical,
                continuous,
            });
        }
        Ok(compiled)
    }
}

/// Samples `n` entries i.i.d. from the process mixture. Each entry is
/// labelled with the index of the process that generated it.
pub fn synth_generate(spec: &SynthSpec, n: usize, seed: u64) -> Result<Dataset> {
    let compiled = spec.compile()?;
    let mixture = WeightedIndex::new(spec.processes.iter().map(|p| p.weight))
        .map_err(|e| Error::config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 10f64.powi(spec.decimals as i32);
    let floor = 1.0 / scale;
    let round = |x: f64| ((x * scale).round() / scale).max(floor);

    let mut entries = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let k = mixture.sample(&mut rng);
        let proc_ = &compiled[k];
        let categorical = proc_
            .categorical
            .iter()
            .map(|(idx, w)| idx[w.sample(&mut rng)])
            .collect();
        let mut continuous = vec![0.0; proc_.continuous.len()];
        for (i, c) in proc_.continuous.iter().enumerate() {
            if let CompiledContinuous::LogNormal(d) = c {
                continuous[i] = round(d.sample(&mut rng));
            }
        }
        for (i, c) in proc_.continuous.iter().enumerate() {
            if let CompiledContinuous::Scaled(base, d) = c {
                continuous[i] = round(continuous[*base] * d.sample(&mut rng));
            }
        }
        entries.push(JournalEntry {
            categorical,
            continuous,
        });
        labels.push(k);
    }
    let mut ds = Dataset::new(spec.schema.clone(), entries, Provenance::Synthetic);
    ds.labels = Some(labels);
    ds.process_names = spec.processes.iter().map(|p| p.name.clone()).collect();
    Ok(ds)
}

fn vocab(name: &str, values: &[&str]) -> CategoricalAttribute {
    CategoricalAttribute {
        name: name.into(),
        vocabulary: values.iter().map(|s| s.to_string()).collect(),
    }
}

fn dist(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Desk-scale stand-in for an ERP extract: six categorical and two continuous
/// attributes, three business processes (vendor invoices, automated
/// payments, material movements). `gl_account` carries `B24`, which no
/// process generates, so it can be planted as a rare account.
pub fn desk_spec() -> SynthSpec {
    let schema = AttributeSchema::new(
        vec![
            vocab("company_code", &["C10", "C20", "C30", "C40"]),
            vocab("posting_key", &["A1", "A2", "A3", "A4", "A5"]),
            vocab("account_key", &["C1", "C2", "C3"]),
            vocab(
                "gl_account",
                &["B1", "B2", "B3", "B5", "B6", "B7", "B9", "B10", "B11", "B24"],
            ),
            vocab("profit_center", &["C1", "C2", "C3", "C5", "C6", "C8"]),
            vocab("currency_key", &["C5", "C6", "C7"]),
        ],
        vec![
            ContinuousAttribute {
                name: "amount_local".into(),
                unit: "USD".into(),
                transform: Transform::Log1pMinmax,
            },
            ContinuousAttribute {
                name: "amount_document".into(),
                unit: "document currency".into(),
                transform: Transform::Log1pMinmax,
            },
        ],
    )
    .expect("desk schema is valid")
    .with_order(
        [
            "company_code",
            "posting_key",
            "account_key",
            "gl_account",
            "profit_center",
            "amount_local",
            "amount_document",
            "currency_key",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    )
    .expect("desk order is valid");

    let process = |name: &str,
                   weight: f64,
                   cats: [(&str, &[(&str, f64)]); 6],
                   mu: f64,
                   sigma: f64| ProcessSpec {
        name: name.into(),
        weight,
        categorical: cats.iter().map(|(a, d)| (a.to_string(), dist(d))).collect(),
        continuous: [
            (
                "amount_local".to_string(),
                ContinuousDist::LogNormal { mu, sigma },
            ),
            (
                "amount_document".to_string(),
                ContinuousDist::Scaled {
                    of: "amount_local".into(),
                    mu: 0.0,
                    sigma: 0.02,
                },
            ),
        ]
        .into_iter()
        .collect(),
    };

    SynthSpec {
        schema,
        decimals: 2,
        processes: vec![
            process(
                "vendor_invoice",
                0.35,
                [
                    ("company_code", &[("C20", 0.96), ("C10", 0.02), ("C40", 0.02)]),
                    ("posting_key", &[("A1", 0.96), ("A2", 0.04)]),
                    ("account_key", &[("C1", 0.97), ("C3", 0.03)]),
                    ("gl_account", &[("B1", 0.75), ("B2", 0.22), ("B3", 0.03)]),
                    ("profit_center", &[("C1", 0.96), ("C2", 0.04)]),
                    ("currency_key", &[("C7", 0.97), ("C5", 0.03)]),
                ],
                8.6,
                0.55,
            ),
            process(
                "automated_payment",
                0.40,
                [
                    ("company_code", &[("C10", 0.97), ("C40", 0.03)]),
                    ("posting_key", &[("A3", 0.96), ("A4", 0.04)]),
                    ("account_key", &[("C2", 0.97), ("C1", 0.03)]),
                    ("gl_account", &[("B5", 0.75), ("B6", 0.22), ("B7", 0.03)]),
                    ("profit_center", &[("C5", 0.96), ("C6", 0.04)]),
                    ("currency_key", &[("C5", 0.97), ("C6", 0.03)]),
                ],
                7.3,
                0.7,
            ),
            process(
                "material_movement",
                0.25,
                [
                    ("company_code", &[("C30", 0.97), ("C20", 0.03)]),
                    ("posting_key", &[("A5", 0.97), ("A4", 0.03)]),
                    ("account_key", &[("C3", 0.97), ("C2", 0.03)]),
                    ("gl_account", &[("B9", 0.75), ("B10", 0.22), ("B11", 0.03)]),
                    ("profit_center", &[("C8", 0.96), ("C3", 0.04)]),
                    ("currency_key", &[("C6", 0.97), ("C7", 0.03)]),
                ],
                5.8,
                0.8,
            ),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_spec_is_valid_and_round_trips_through_toml() {
        let spec = desk_spec();
        spec.validate().unwrap();
        assert_eq!(spec.schema.categorical.len(), 6);
        assert_eq!(spec.schema.continuous.len(), 2);
        let back = SynthSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let mut spec = desk_spec();
        spec.processes[0].weight += 1e-6;
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn zero_entries_and_determinism() {
        let spec = desk_spec();
        assert!(synth_generate(&spec, 0, 1).unwrap().is_empty());
        let a = synth_generate(&spec, 200, 5).unwrap();
        let b = synth_generate(&spec, 200, 5).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&spec, 200, 6).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn planted_account_is_never_generated() {
        let spec = desk_spec();
        let ds = synth_generate(&spec, 3000, 2).unwrap();
        let counts = ds.value_counts("gl_account").unwrap();
        let b24 = spec.schema.categorical[3].index_of("B24").unwrap();
        assert_eq!(counts[b24], 0);
        assert!(ds.entries.iter().all(|e| e.continuous.iter().all(|&v| v >= 0.01)));
    }
}
