use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    /// `log1p` followed by min-max scaling to `[0, 1]`.
    #[serde(rename = "log1p-minmax")]
    Log1pMinmax,
    #[serde(rename = "minmax")]
    Minmax,
}

impl Transform {
    #[inline]
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Log1pMinmax => x.ln_1p(),
            Transform::Minmax => x,
        }
    }

    #[inline]
    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Transform::Log1pMinmax => y.exp_m1(),
            Transform::Minmax => y,
        }
    }

    /// Whether `x` lies in the transform's domain.
    pub fn accepts(self, x: f64) -> bool {
        match self {
            Transform::Log1pMinmax => x.is_finite() && x > -1.0,
            Transform::Minmax => x.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalAttribute {
    pub name: String,
    pub vocabulary: Vec<String>,
}

impl CategoricalAttribute {
    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.vocabulary.iter().position(|v| v == value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousAttribute {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub transform: Transform,
}

/// Where an attribute lives inside [`crate::data::JournalEntry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeRef {
    Categorical(usize),
    Continuous(usize),
}

/// Ordered categorical and continuous attributes of a journal entry table.
///
/// `order`, when given, is the CSV column order; otherwise categorical
/// attributes come first, then continuous ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    #[serde(default)]
    pub categorical: Vec<CategoricalAttribute>,
    #[serde(default)]
    pub continuous: Vec<ContinuousAttribute>,
}

impl AttributeSchema {
    pub fn new(
        categorical: Vec<CategoricalAttribute>,
        continuous: Vec<ContinuousAttribute>,
    ) -> Result<Self> {
        let schema = Self {
            order: None,
            categorical,
            continuous,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn with_order(mut self, order: Vec<String>) -> Result<Self> {
        self.order = Some(order);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.categorical.is_empty() && self.continuous.is_empty() {
            return Err(Error::config("schema declares no attributes"));
        }
        let mut names = HashSet::new();
        for name in self.attribute_names_unordered() {
            if !names.insert(name) {
                return Err(Error::config(format!("duplicate attribute name {name:?}")));
            }
        }
        for attr in &self.categorical {
            if attr.vocabulary.is_empty() {
                return Err(Error::config(format!(
                    "categorical attribute {:?} has an empty vocabulary",
                    attr.name
                )));
            }
            let mut seen = HashSet::new();
            for v in &attr.vocabulary {
                if !seen.insert(v.as_str()) {
                    return Err(Error::config(format!(
                        "vocabulary of {:?} lists {v:?} twice",
                        attr.name
                    )));
                }
            }
        }
        if let Some(order) = &self.order {
            let listed: HashSet<&str> = order.iter().map(String::as_str).collect();
            if listed.len() != order.len() || listed != names {
                return Err(Error::config(
                    "column order must list every attribute exactly once",
                ));
            }
        }
        Ok(())
    }

    fn attribute_names_unordered(&self) -> impl Iterator<Item = &str> {
        self.categorical
            .iter()
            .map(|a| a.name.as_str())
            .chain(self.continuous.iter().map(|a| a.name.as_str()))
    }

    /// Attribute names in CSV column order.
    pub fn column_order(&self) -> Vec<String> {
        match &self.order {
            Some(order) => order.clone(),
            None => self
                .attribute_names_unordered()
                .map(str::to_owned)
                .collect(),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<AttributeRef> {
        if let Some(i) = self.categorical.iter().position(|a| a.name == name) {
            return Some(AttributeRef::Categorical(i));
        }
        self.continuous
            .iter()
            .position(|a| a.name == name)
            .map(AttributeRef::Continuous)
    }

    pub fn require(&self, name: &str) -> Result<AttributeRef> {
        self.lookup(name)
            .ok_or_else(|| Error::config(format!("unknown attribute {name:?}")))
    }

    pub fn categorical_index(&self, name: &str) -> Result<usize> {
        match self.require(name)? {
            AttributeRef::Categorical(i) => Ok(i),
            AttributeRef::Continuous(_) => Err(Error::config(format!(
                "attribute {name:?} is continuous, a categorical attribute is required"
            ))),
        }
    }

    pub fn continuous_index(&self, name: &str) -> Result<usize> {
        match self.require(name)? {
            AttributeRef::Continuous(i) => Ok(i),
            AttributeRef::Categorical(_) => Err(Error::config(format!(
                "attribute {name:?} is categorical, a continuous attribute is required"
            ))),
        }
    }

    /// Width of the concatenated one-hot blocks.
    pub fn categorical_dim(&self) -> usize {
        self.categorical.iter().map(|a| a.vocabulary.len()).sum()
    }

    pub fn continuous_dim(&self) -> usize {
        self.continuous.len()
    }

    pub fn encoded_dim(&self) -> usize {
        self.categorical_dim() + self.continuous_dim()
    }

    /// `(offset, width)` of every one-hot block inside the encoded vector.
    pub fn block_ranges(&self) -> Vec<(usize, usize)> {
        let mut offset = 0;
        self.categorical
            .iter()
            .map(|a| {
                let r = (offset, a.vocabulary.len());
                offset += a.vocabulary.len();
                r
            })
            .collect()
    }

    /// Hex SHA-256 of the canonical JSON form. Identifies a schema inside
    /// checkpoints.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serialises");
        hex_digest(&json)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serialises to TOML")
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(name: &str, vocab: &[&str]) -> CategoricalAttribute {
        CategoricalAttribute {
            name: name.into(),
            vocabulary: vocab.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn con(name: &str) -> ContinuousAttribute {
        ContinuousAttribute {
            name: name.into(),
            unit: "EUR".into(),
            transform: Transform::Log1pMinmax,
        }
    }

    #[test]
    fn encoded_dim_sums_vocabularies_and_continuous() {
        let s = AttributeSchema::new(
            vec![cat("a", &["x", "y"]), cat("b", &["p", "q", "r"])],
            vec![con("amount")],
        )
        .unwrap();
        assert_eq!(s.encoded_dim(), 6);
        assert_eq!(s.block_ranges(), vec![(0, 2), (2, 3)]);
    }

    #[test]
    fn rejects_duplicates_and_empty_vocabularies() {
        assert!(AttributeSchema::new(vec![cat("a", &["x", "x"])], vec![]).is_err());
        assert!(AttributeSchema::new(vec![cat("a", &[])], vec![]).is_err());
        assert!(AttributeSchema::new(vec![cat("a", &["x"])], vec![con("a")]).is_err());
    }

    #[test]
    fn order_must_cover_all_attributes() {
        let s = AttributeSchema::new(vec![cat("a", &["x"])], vec![con("m")]).unwrap();
        assert!(s.clone().with_order(vec!["m".into()]).is_err());
        let s = s.with_order(vec!["m".into(), "a".into()]).unwrap();
        assert_eq!(s.column_order(), vec!["m", "a"]);
    }

    #[test]
    fn toml_round_trip() {
        let s = AttributeSchema::new(vec![cat("gl", &["B1", "B2"])], vec![con("amount")])
            .unwrap();
        let back = AttributeSchema::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(s, back);
        assert_eq!(s.fingerprint(), back.fingerprint());
    }
}
