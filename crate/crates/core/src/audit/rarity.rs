use super::report::{DetectorReport, Flag};
use crate::data::{AttributeRef, Dataset};
use crate::error::{Error, Result};

pub const RARITY: &str = "rarity";

/// Flags entries whose value of `attribute` occurs fewer than `min_count`
/// times in the dataset.
pub fn rarity_scan(dataset: &Dataset, attribute: &str, min_count: usize) -> Result<DetectorReport> {
    let col = match dataset.schema.lookup(attribute) {
        Some(AttributeRef::Categorical(j)) => j,
        Some(AttributeRef::Continuous(_)) => {
            return Err(Error::config(format!("rarity attribute {attribute:?} must be categorical")))
        }
        None => return Err(Error::config(format!("unknown attribute {attribute:?}"))),
    };
    let counts = dataset.value_counts(attribute)?;
    let rule = format!("{attribute}<{min_count}");
    let flags = dataset
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| counts[e.categorical[col]] < min_count)
        .map(|(row, _)| Flag {
            row,
            detector: RARITY.into(),
            rule: rule.clone(),
        })
        .collect();
    Ok(DetectorReport::new(dataset.len(), flags))
}
