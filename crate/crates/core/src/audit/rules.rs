use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{DetectorReport, Flag};
use crate::data::{AttributeRef, AttributeSchema, Dataset};
use crate::error::{Error, Result};

pub const RED_FLAG: &str = "red-flag";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Rule {
    /// Flags amounts above `border`; `inclusive` also flags the border itself.
    AmountThreshold {
        id: String,
        attribute: String,
        border: f64,
        #[serde(default)]
        inclusive: bool,
    },
    /// Flags values in `forbidden`, or outside `required` when given.
    SetMembership {
        id: String,
        attribute: String,
        #[serde(default)]
        forbidden: Vec<String>,
        #[serde(default)]
        required: Option<Vec<String>>,
    },
    /// Flags value pairs of two attributes that are not listed in `allowed`.
    PairCooccurrence {
        id: String,
        first: String,
        second: String,
        allowed: Vec<[String; 2]>,
    },
}

impl Rule {
    pub fn id(&self) -> &str {
        match self {
            Rule::AmountThreshold { id, .. } | Rule::SetMembership { id, .. } | Rule::PairCooccurrence { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSet {
    #[serde(default, rename = "rule")]
    pub rules: Vec<Rule>,
}

/// A rule resolved against a schema.
enum Compiled {
    Threshold { col: usize, border: f64, inclusive: bool },
    Membership { col: usize, flagged: Vec<bool> },
    Pair { a: usize, b: usize, allowed: BTreeSet<(usize, usize)> },
}

fn categorical(schema: &AttributeSchema, name: &str) -> Result<usize> {
    match schema.lookup(name) {
        Some(AttributeRef::Categorical(j)) => Ok(j),
        Some(AttributeRef::Continuous(_)) => Err(Error::config(format!("attribute {name:?} is not categorical"))),
        None => Err(Error::config(format!("unknown attribute {name:?}"))),
    }
}

fn value_index(schema: &AttributeSchema, attr: usize, value: &str) -> Result<usize> {
    let a = &schema.categorical[attr];
    a.index_of(value)
        .ok_or_else(|| Error::config(format!("value {value:?} is not in the vocabulary of {:?}", a.name)))
}

impl RuleSet {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        self.compile(schema).map(|_| ())
    }

    fn compile(&self, schema: &AttributeSchema) -> Result<Vec<Compiled>> {
        let mut ids = BTreeSet::new();
        self.rules
            .iter()
            .map(|rule| {
                if !ids.insert(rule.id()) {
                    return Err(Error::config(format!("duplicate rule id {:?}", rule.id())));
                }
                Ok(match rule {
                    Rule::AmountThreshold {
                        attribute,
                        border,
                        inclusive,
                        ..
                    } => match schema.lookup(attribute) {
                        Some(AttributeRef::Continuous(col)) if border.is_finite() => Compiled::Threshold {
                            col,
                            border: *border,
                            inclusive: *inclusive,
                        },
                        Some(AttributeRef::Continuous(_)) => {
                            return Err(Error::config(format!("rule {:?} has a non-finite border", rule.id())))
                        }
                        Some(AttributeRef::Categorical(_)) => {
                            return Err(Error::config(format!("attribute {attribute:?} is not continuous")))
                        }
                        None => return Err(Error::config(format!("unknown attribute {attribute:?}"))),
                    },
                    Rule::SetMembership {
                        attribute,
                        forbidden,
                        required,
                        ..
                    } => {
                        let col = categorical(schema, attribute)?;
                        let width = schema.categorical[col].vocabulary.len();
                        let mut flagged = match required {
                            Some(req) => {
                                let mut f = vec![true; width];
                                for v in req {
                                    f[value_index(schema, col, v)?] = false;
                                }
                                f
                            }
                            None => vec![false; width],
                        };
                        for v in forbidden {
                            flagged[value_index(schema, col, v)?] = true;
                        }
                        Compiled::Membership { col, flagged }
                    }
                    Rule::PairCooccurrence {
                        first, second, allowed, ..
                    } => {
                        let a = categorical(schema, first)?;
                        let b = categorical(schema, second)?;
                        let allowed = allowed
                            .iter()
                            .map(|[x, y]| Ok((value_index(schema, a, x)?, value_index(schema, b, y)?)))
                            .collect::<Result<_>>()?;
                        Compiled::Pair { a, b, allowed }
                    }
                })
            })
            .collect()
    }
}

/// Tests every entry against every rule.
pub fn red_flag_scan(dataset: &Dataset, rules: &RuleSet) -> Result<DetectorReport> {
    let compiled = rules.compile(&dataset.schema)?;
    let mut flags = Vec::new();
    for (row, e) in dataset.entries.iter().enumerate() {
        for (rule, c) in rules.rules.iter().zip(&compiled) {
            let hit = match c {
                Compiled::Threshold { col, border, inclusive } => {
                    let x = e.continuous[*col];
                    x > *border || (*inclusive && x == *border)
                }
                Compiled::Membership { col, flagged } => flagged[e.categorical[*col]],
                Compiled::Pair { a, b, allowed } => !allowed.contains(&(e.categorical[*a], e.categorical[*b])),
            };
            if hit {
                flags.push(Flag {
                    row,
                    detector: RED_FLAG.into(),
                    rule: rule.id().to_string(),
                });
            }
        }
    }
    Ok(DetectorReport::new(dataset.len(), flags))
}
