use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flag {
    pub row: usize,
    pub detector: String,
    pub rule: String,
}

impl Flag {
    /// `detector/rule`, the key of the per-detector breakdown.
    pub fn key(&self) -> String {
        format!("{}/{}", self.detector, self.rule)
    }
}

/// Per-entry flags over one dataset, sorted by row, detector and rule.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectorReport {
    pub n_entries: usize,
    pub flags: Vec<Flag>,
}

impl DetectorReport {
    pub fn new(n_entries: usize, mut flags: Vec<Flag>) -> Self {
        flags.sort();
        flags.dedup();
        Self { n_entries, flags }
    }

    pub fn merge(mut self, other: DetectorReport) -> Self {
        debug_assert_eq!(self.n_entries, other.n_entries);
        self.flags.extend(other.flags);
        Self::new(self.n_entries, self.flags)
    }

    pub fn flagged_rows(&self) -> BTreeSet<usize> {
        self.flags.iter().map(|f| f.row).collect()
    }

    /// Number of distinct flagged entries.
    pub fn flagged_count(&self) -> usize {
        self.flagged_rows().len()
    }

    pub fn flag_rate(&self) -> f64 {
        if self.n_entries == 0 {
            0.0
        } else {
            self.flagged_count() as f64 / self.n_entries as f64
        }
    }

    /// Distinct flagged entries per `detector/rule`.
    pub fn per_detector(&self) -> BTreeMap<String, usize> {
        let mut rows: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for f in &self.flags {
            rows.entry(f.key()).or_default().insert(f.row);
        }
        rows.into_iter().map(|(k, v)| (k, v.len())).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_id,detector,rule\n");
        for f in &self.flags {
            let _ = writeln!(out, "{},{},{}", f.row, f.detector, f.rule);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates() {
        let f = |row, d: &str, r: &str| Flag {
            row,
            detector: d.into(),
            rule: r.into(),
        };
        let rep = DetectorReport::new(10, vec![f(3, "a", "x"), f(1, "a", "x"), f(3, "b", "y"), f(1, "a", "x")]);
        assert_eq!(rep.flags.len(), 3);
        assert_eq!(rep.flagged_count(), 2);
        assert!((rep.flag_rate() - 0.2).abs() < 1e-15);
        assert_eq!(rep.per_detector().get("a/x"), Some(&2));
        assert!(rep.to_csv().starts_with("row_id,detector,rule\n1,a,x\n"));
    }
}
