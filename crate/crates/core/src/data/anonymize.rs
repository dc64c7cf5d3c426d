use std::collections::HashSet;

use sha2::{Digest, Sha256};

use super::dataset::Dataset;

const TOKEN_HEX_LEN: usize = 10;

fn token(salt: &str, attribute: &str, value: &str, nonce: u32) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update([0x1f]);
    h.update(attribute.as_bytes());
    h.update([0x1f]);
    h.update(value.as_bytes());
    h.update(nonce.to_le_bytes());
    h.finalize()[..TOKEN_HEX_LEN / 2]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Replaces every categorical value by a salted SHA-256 token.
///
/// Tokens are per attribute and injective: if two values of one attribute
/// collide after truncation, the whole attribute is re-hashed with the next
/// nonce. Entries keep their vocabulary indices, so equal values stay equal
/// and continuous values are untouched.
pub fn anonymize(dataset: &Dataset, salt: &str) -> Dataset {
    let mut out = dataset.clone();
    for attr in &mut out.schema.categorical {
        let mut nonce = 0u32;
        loop {
            let tokens: Vec<String> = attr
                .vocabulary
                .iter()
                .map(|v| token(salt, &attr.name, v, nonce))
                .collect();
            let distinct: HashSet<&String> = tokens.iter().collect();
            if distinct.len() == tokens.len() {
                attr.vocabulary = tokens;
                break;
            }
            nonce += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{JournalEntry, Provenance};
    use crate::data::schema::{AttributeSchema, CategoricalAttribute, ContinuousAttribute, Transform};

    fn dataset() -> Dataset {
        let vocab: Vec<String> = (0..500).map(|i| format!("V-{i}")).collect();
        let schema = AttributeSchema::new(
            vec![CategoricalAttribute {
                name: "vendor".into(),
                vocabulary: vocab,
            }],
            vec![ContinuousAttribute {
                name: "amount".into(),
                unit: String::new(),
                transform: Transform::Minmax,
            }],
        )
        .unwrap();
        let entries = vec![
            JournalEntry::from_values(&schema, &["V-17"], &[10.0]).unwrap(),
            JournalEntry::from_values(&schema, &["V-17"], &[20.0]).unwrap(),
            JournalEntry::from_values(&schema, &["V-3"], &[30.0]).unwrap(),
        ];
        Dataset::new(schema, entries, Provenance::RealExtract)
    }

    #[test]
    fn equal_values_map_to_equal_tokens() {
        let ds = dataset();
        let anon = anonymize(&ds, "pepper");
        let a = anon.entries[0].value_text(&anon.schema, "vendor").unwrap();
        let b = anon.entries[1].value_text(&anon.schema, "vendor").unwrap();
        let c = anon.entries[2].value_text(&anon.schema, "vendor").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, "V-17");
        assert_eq!(anon.entries[1].continuous, vec![20.0]);
    }

    #[test]
    fn salt_changes_tokens() {
        let ds = dataset();
        let a = anonymize(&ds, "salt-a");
        let b = anonymize(&ds, "salt-b");
        assert_ne!(
            a.schema.categorical[0].vocabulary[17],
            b.schema.categorical[0].vocabulary[17]
        );
    }

    #[test]
    fn token_set_keeps_cardinality() {
        let ds = dataset();
        let anon = anonymize(&ds, "k");
        let distinct: HashSet<&String> = anon.schema.categorical[0].vocabulary.iter().collect();
        assert_eq!(distinct.len(), ds.schema.categorical[0].vocabulary.len());
        anon.schema.validate().unwrap();
    }
}
