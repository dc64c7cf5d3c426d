use serde::{Deserialize, Serialize};

use crate::data::{AttributeRef, Dataset};
use crate::error::{Error, Result};

/// 5% point of the chi-square distribution with 8 degrees of freedom.
pub const DEFAULT_CRITICAL_VALUE: f64 = 15.507;
pub const MIN_AMOUNTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordResult {
    /// Observed share of first digits 1..=9.
    pub observed: [f64; 9],
    /// `log10(1 + 1/d)`.
    pub expected: [f64; 9],
    pub n: usize,
    pub statistic: f64,
    pub critical_value: f64,
    pub pass: bool,
}

pub fn benford_expected() -> [f64; 9] {
    std::array::from_fn(|i| (1.0 + 1.0 / (i + 1) as f64).log10())
}

/// First significant digit of `|x|`; `None` for zero and non-finite values.
pub fn first_digit(x: f64) -> Option<u8> {
    if x == 0.0 || !x.is_finite() {
        return None;
    }
    let s = format!("{:e}", x.abs());
    s.bytes().next().map(|b| b - b'0')
}

pub fn benford_from_amounts(amounts: &[f64], critical_value: f64) -> Result<BenfordResult> {
    let mut counts = [0usize; 9];
    for &a in amounts {
        if let Some(d) = first_digit(a) {
            counts[d as usize - 1] += 1;
        }
    }
    let n: usize = counts.iter().sum();
    if n < MIN_AMOUNTS {
        return Err(Error::InsufficientData(format!(
            "Benford test needs at least {MIN_AMOUNTS} non-zero amounts, got {n}"
        )));
    }
    let expected = benford_expected();
    let observed: [f64; 9] = std::array::from_fn(|i| counts[i] as f64 / n as f64);
    let statistic = n as f64
        * observed
            .iter()
            .zip(&expected)
            .map(|(f, p)| (f - p) * (f - p) / p)
            .sum::<f64>();
    Ok(BenfordResult {
        observed,
        expected,
        n,
        statistic,
        critical_value,
        pass: statistic < critical_value,
    })
}

pub fn benford_test(dataset: &Dataset, attribute: &str, critical_value: f64) -> Result<BenfordResult> {
    let col = match dataset.schema.lookup(attribute) {
        Some(AttributeRef::Continuous(j)) => j,
        Some(AttributeRef::Categorical(_)) => {
            return Err(Error::config(format!("Benford attribute {attribute:?} must be continuous")))
        }
        None => return Err(Error::config(format!("unknown attribute {attribute:?}"))),
    };
    let amounts: Vec<f64> = dataset.entries.iter().map(|e| e.continuous[col]).collect();
    benford_from_amounts(&amounts, critical_value)
}
