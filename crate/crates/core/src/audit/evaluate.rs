use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benford::{benford_test, BenfordResult, DEFAULT_CRITICAL_VALUE};
use super::rarity::rarity_scan;
use super::report::DetectorReport;
use super::rules::{red_flag_scan, Rule};
use crate::attack::Manifest;
use crate::data::{from_cents, to_cents, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RarityCheck {
    pub attribute: String,
    pub min_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenfordCheck {
    pub attribute: String,
    #[serde(default = "default_critical")]
    pub critical_value: f64,
}

fn default_critical() -> f64 {
    DEFAULT_CRITICAL_VALUE
}

/// The detector suite: red-flag rules, rarity scans and an optional Benford
/// test. Also the layout of the rules file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detectors {
    #[serde(default, rename = "rule")]
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub rarity: Vec<RarityCheck>,
    #[serde(default)]
    pub benford: Option<BenfordCheck>,
    /// Attribute summed for the trial balance; the first continuous attribute when unset.
    #[serde(default)]
    pub balance_attribute: Option<String>,
}

impl Detectors {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn rule_set(&self) -> super::RuleSet {
        super::RuleSet {
            rules: self.rules.clone(),
        }
    }

    /// Per-entry flags from every rule and rarity scan.
    pub fn scan(&self, dataset: &Dataset) -> Result<DetectorReport> {
        let mut report = red_flag_scan(dataset, &self.rule_set())?;
        for r in &self.rarity {
            report = report.merge(rarity_scan(dataset, &r.attribute, r.min_count)?);
        }
        Ok(report)
    }

    /// `None` when no Benford check is configured or the dataset has too few
    /// non-zero amounts for one.
    pub fn benford(&self, dataset: &Dataset) -> Result<Option<BenfordResult>> {
        match &self.benford {
            None => Ok(None),
            Some(b) => match benford_test(dataset, &b.attribute, b.critical_value) {
                Ok(r) => Ok(Some(r)),
                Err(Error::InsufficientData(_)) => Ok(None),
                Err(e) => Err(e),
            },
        }
    }

    fn balance_attribute(&self, dataset: &Dataset) -> Result<String> {
        match &self.balance_attribute {
            Some(a) => Ok(a.clone()),
            None => dataset
                .schema
                .continuous
                .first()
                .map(|a| a.name.clone())
                .ok_or_else(|| Error::config("no continuous attribute for the trial balance")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackEvaluation {
    pub original: DetectorReport,
    pub adversarial: DetectorReport,
    /// `detector/rule -> (original, adversarial)` flagged-entry counts.
    pub per_detector: BTreeMap<String, (usize, usize)>,
    /// Added rows flagged in the adversarial extract.
    pub attack_detection: usize,
    /// Removed rows flagged in the original data.
    pub baseline_detection: usize,
    pub balance_attribute: String,
    /// `sum(original) - sum(adversarial)` in cents.
    pub trial_balance_delta_cents: i64,
    pub benford_original: Option<BenfordResult>,
    pub benford_adversarial: Option<BenfordResult>,
}

impl AttackEvaluation {
    pub fn trial_balance_delta(&self) -> f64 {
        from_cents(self.trial_balance_delta_cents)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "entries: original {} adversarial {}", self.original.n_entries, self.adversarial.n_entries);
        let _ = writeln!(
            out,
            "flagged: original {} ({:.4}) adversarial {} ({:.4})",
            self.original.flagged_count(),
            self.original.flag_rate(),
            self.adversarial.flagged_count(),
            self.adversarial.flag_rate()
        );
        for (k, (a, b)) in &self.per_detector {
            let _ = writeln!(out, "  {k}: original {a} adversarial {b}");
        }
        let _ = writeln!(out, "baseline detection (removed rows flagged): {}", self.baseline_detection);
        let _ = writeln!(out, "attack detection (added rows flagged): {}", self.attack_detection);
        let _ = writeln!(
            out,
            "trial balance delta ({}): {:.2}",
            self.balance_attribute,
            self.trial_balance_delta()
        );
        for (name, b) in [("original", &self.benford_original), ("adversarial", &self.benford_adversarial)] {
            if let Some(b) = b {
                let _ = writeln!(
                    out,
                    "benford {name}: chi2 {:.4} critical {} {}",
                    b.statistic,
                    b.critical_value,
                    if b.pass { "pass" } else { "fail" }
                );
            }
        }
        out
    }
}

/// Checks that `adversarial` is `original` minus the removed rows plus the
/// added rows at the manifest positions.
pub fn check_manifest(original: &Dataset, adversarial: &Dataset, manifest: &Manifest) -> Result<()> {
    if original.schema != adversarial.schema {
        return Err(Error::Consistency("original and adversarial schemas differ".into()));
    }
    let removed: BTreeSet<usize> = manifest.removed().into_iter().collect();
    let added: BTreeSet<usize> = manifest.added().into_iter().collect();
    if let Some(r) = removed.iter().find(|&&r| r >= original.len()) {
        return Err(Error::Consistency(format!("removed row {r} is not in the original data")));
    }
    let expected_len = original.len() - removed.len() + added.len();
    if adversarial.len() != expected_len {
        return Err(Error::Consistency(format!(
            "adversarial extract has {} rows; the manifest implies {expected_len}",
            adversarial.len()
        )));
    }
    if let Some(a) = added.iter().find(|&&a| a >= adversarial.len()) {
        return Err(Error::Consistency(format!("added row {a} is not in the adversarial extract")));
    }
    let kept = original
        .entries
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(_, e)| e);
    let remaining = adversarial
        .entries
        .iter()
        .enumerate()
        .filter(|(i, _)| !added.contains(i))
        .map(|(_, e)| e);
    if !kept.eq(remaining) {
        return Err(Error::Consistency(
            "rows outside the manifest differ between original and adversarial data".into(),
        ));
    }
    Ok(())
}

pub fn evaluate_attack(
    original: &Dataset,
    adversarial: &Dataset,
    manifest: &Manifest,
    detectors: &Detectors,
) -> Result<AttackEvaluation> {
    check_manifest(original, adversarial, manifest)?;
    let orig = detectors.scan(original)?;
    let adv = detectors.scan(adversarial)?;
    let mut per_detector: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (k, v) in orig.per_detector() {
        per_detector.entry(k).or_default().0 = v;
    }
    for (k, v) in adv.per_detector() {
        per_detector.entry(k).or_default().1 = v;
    }
    let adv_rows = adv.flagged_rows();
    let orig_rows = orig.flagged_rows();
    let attack_detection = manifest.added().iter().filter(|r| adv_rows.contains(r)).count();
    let baseline_detection = manifest.removed().iter().filter(|r| orig_rows.contains(r)).count();
    let balance_attribute = detectors.balance_attribute(original)?;
    let delta = original.total_cents(&balance_attribute)? - adversarial.total_cents(&balance_attribute)?;
    Ok(AttackEvaluation {
        original: orig,
        adversarial: adv,
        per_detector,
        attack_detection,
        baseline_detection,
        balance_attribute,
        trial_balance_delta_cents: delta,
        benford_original: detectors.benford(original)?,
        benford_adversarial: detectors.benford(adversarial)?,
    })
}

/// Sum of an attribute in cents, for callers without a dataset.
pub fn total_cents(amounts: &[f64]) -> i64 {
    amounts.iter().map(|&a| to_cents(a)).sum()
}
