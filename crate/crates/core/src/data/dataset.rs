use serde::{Deserialize, Serialize};

use super::schema::{AttributeRef, AttributeSchema};
use crate::error::{Error, Result};

/// One journal entry line item. Categorical values are stored as indices into
/// the schema vocabularies, so a constructed entry is always schema-valid
/// for the schema it was built against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub categorical: Vec<usize>,
    pub continuous: Vec<f64>,
}

impl JournalEntry {
    /// Builds an entry from string values listed in schema attribute order
    /// (categorical first, then continuous).
    pub fn from_values(
        schema: &AttributeSchema,
        categorical: &[&str],
        continuous: &[f64],
    ) -> Result<Self> {
        if categorical.len() != schema.categorical.len()
            || continuous.len() != schema.continuous.len()
        {
            return Err(Error::dim(format!(
                "schema has {} categorical and {} continuous attributes, got {} and {}",
                schema.categorical.len(),
                schema.continuous.len(),
                categorical.len(),
                continuous.len()
            )));
        }
        let categorical = schema
            .categorical
            .iter()
            .zip(categorical)
            .map(|(attr, value)| {
                attr.index_of(value).ok_or_else(|| Error::Vocabulary {
                    attribute: attr.name.clone(),
                    value: value.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let entry = Self {
            categorical,
            continuous: continuous.to_vec(),
        };
        entry.validate(schema)?;
        Ok(entry)
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        if self.categorical.len() != schema.categorical.len()
            || self.continuous.len() != schema.continuous.len()
        {
            return Err(Error::dim("entry does not match the schema arity"));
        }
        for (attr, &idx) in schema.categorical.iter().zip(&self.categorical) {
            if idx >= attr.vocabulary.len() {
                return Err(Error::Vocabulary {
                    attribute: attr.name.clone(),
                    value: format!("#{idx}"),
                });
            }
        }
        if let Some((attr, v)) = schema
            .continuous
            .iter()
            .zip(&self.continuous)
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Numeric(format!("{} = {v}", attr.name)));
        }
        Ok(())
    }

    /// The value of a named attribute rendered as text.
    pub fn value_text(&self, schema: &AttributeSchema, name: &str) -> Result<String> {
        Ok(match schema.require(name)? {
            AttributeRef::Categorical(i) => {
                schema.categorical[i].vocabulary[self.categorical[i]].clone()
            }
            AttributeRef::Continuous(i) => format_amount(self.continuous[i]),
        })
    }

    /// Values in CSV column order.
    pub fn row(&self, schema: &AttributeSchema) -> Vec<String> {
        schema
            .column_order()
            .iter()
            .map(|name| self.value_text(schema, name).expect("column of own schema"))
            .collect()
    }
}

/// Shortest round-tripping decimal form; stable across runs.
pub fn format_amount(x: f64) -> String {
    format!("{x}")
}

/// Rounds to whole cents, the currency precision used for amounts.
pub fn to_cents(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

pub fn from_cents(c: i64) -> f64 {
    c as f64 / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    RealExtract,
    Synthetic,
}

/// Fitted range of one continuous attribute, in raw units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStats {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: AttributeSchema,
    pub entries: Vec<JournalEntry>,
    pub provenance: Provenance,
    /// Generating-process id per entry (synthetic data only). Held out of
    /// training; used to score mode purity.
    pub labels: Option<Vec<usize>>,
    pub process_names: Vec<String>,
}

impl Dataset {
    pub fn new(schema: AttributeSchema, entries: Vec<JournalEntry>, provenance: Provenance) -> Self {
        Self {
            schema,
            entries,
            provenance,
            labels: None,
            process_names: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Min/max of each continuous attribute over all entries.
    pub fn fit_stats(&self) -> Result<Vec<ContinuousStats>> {
        if self.entries.is_empty() {
            return Err(Error::InsufficientData(
                "cannot fit attribute ranges on an empty dataset".into(),
            ));
        }
        self.schema
            .continuous
            .iter()
            .enumerate()
            .map(|(i, attr)| {
                let (min, max) = self.entries.iter().map(|e| e.continuous[i]).fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), v| (lo.min(v), hi.max(v)),
                );
                if !(min < max) {
                    return Err(Error::DegenerateAttribute(attr.name.clone()));
                }
                if !attr.transform.accepts(min) {
                    return Err(Error::config(format!(
                        "attribute {:?} has value {min} outside the domain of its transform",
                        attr.name
                    )));
                }
                Ok(ContinuousStats { min, max })
            })
            .collect()
    }

    /// Sum of a continuous attribute in whole cents.
    pub fn total_cents(&self, attribute: &str) -> Result<i64> {
        let idx = self.schema.continuous_index(attribute)?;
        Ok(self.entries.iter().map(|e| to_cents(e.continuous[idx])).sum())
    }

    /// Number of occurrences of each vocabulary value of a categorical attribute.
    pub fn value_counts(&self, attribute: &str) -> Result<Vec<usize>> {
        let idx = self.schema.categorical_index(attribute)?;
        let mut counts = vec![0; self.schema.categorical[idx].vocabulary.len()];
        for e in &self.entries {
            counts[e.categorical[idx]] += 1;
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{CategoricalAttribute, ContinuousAttribute, Transform};

    fn schema() -> AttributeSchema {
        AttributeSchema::new(
            vec![CategoricalAttribute {
                name: "gl".into(),
                vocabulary: vec!["B1".into(), "B2".into()],
            }],
            vec![ContinuousAttribute {
                name: "amount".into(),
                unit: String::new(),
                transform: Transform::Log1pMinmax,
            }],
        )
        .unwrap()
    }

    #[test]
    fn from_values_rejects_unknown_value() {
        let err = JournalEntry::from_values(&schema(), &["B9"], &[1.0]).unwrap_err();
        match err {
            Error::Vocabulary { attribute, value } => {
                assert_eq!(attribute, "gl");
                assert_eq!(value, "B9");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_range_is_an_error() {
        let s = schema();
        let e = JournalEntry::from_values(&s, &["B1"], &[5.0]).unwrap();
        let ds = Dataset::new(s, vec![e.clone(), e], Provenance::Synthetic);
        assert!(matches!(ds.fit_stats(), Err(Error::DegenerateAttribute(_))));
    }

    #[test]
    fn cents_round_trip() {
        assert_eq!(to_cents(47_632.45), 4_763_245);
        assert_eq!(from_cents(4_763_245), 47_632.45);
        assert_eq!(format_amount(19_052.98), "19052.98");
    }
}
