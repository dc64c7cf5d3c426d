//! Journal entry schema, ingestion, encoding and synthetic generation.

mod anonymize;
mod codec;
mod csv_io;
mod dataset;
mod schema;
mod synth;

pub use anonymize::anonymize;
pub use codec::{DecodedEntry, EncodedEntry, FeatureCodec};
pub use csv_io::{load_csv, read_labels, write_csv, write_labels, VocabularyMode};
pub use dataset::{
    format_amount, from_cents, to_cents, ContinuousStats, Dataset, JournalEntry, Provenance,
};
pub use schema::{AttributeRef, AttributeSchema, CategoricalAttribute, ContinuousAttribute, Transform};
pub use synth::{desk_spec, synth_generate, ContinuousDist, ProcessSpec, SynthSpec};

pub(crate) use codec::argmax;
