//! Hand-wired models with known behaviour for analysis and attack tests.

use ndarray::{Array1, Array2};

use crate::data::{
    AttributeSchema, CategoricalAttribute, ContinuousAttribute, Dataset, FeatureCodec, JournalEntry,
    Provenance, Transform,
};
use crate::model::{AAEModel, PriorGrid};
use crate::neural::{Activation, DenseLayer, Network};

pub(crate) fn small_schema() -> AttributeSchema {
    AttributeSchema::new(
        vec![
            CategoricalAttribute {
                name: "a".into(),
                vocabulary: vec!["x".into(), "y".into()],
            },
            CategoricalAttribute {
                name: "b".into(),
                vocabulary: vec!["p".into(), "q".into(), "r".into()],
            },
        ],
        vec![ContinuousAttribute {
            name: "amount".into(),
            unit: "USD".into(),
            transform: Transform::Minmax,
        }],
    )
    .unwrap()
}

pub(crate) fn small_dataset(n: usize) -> Dataset {
    let entries = (0..n)
        .map(|i| JournalEntry {
            categorical: vec![i % 2, i % 3],
            continuous: vec![10.0 + 90.0 * (i % 7) as f64 / 6.0],
        })
        .collect();
    Dataset::new(small_schema(), entries, Provenance::Synthetic)
}

pub(crate) fn layer(w: Array2<f64>, b: Vec<f64>, act: Activation) -> Network {
    Network::from_layers(vec![DenseLayer::new(w, Array1::from(b), act).unwrap()]).unwrap()
}

/// Codec fitted on amounts spanning `[10, 100]`.
pub(crate) fn small_codec() -> FeatureCodec {
    FeatureCodec::fit(&small_dataset(14)).unwrap()
}

pub(crate) fn model_with(encoder: Network, decoder: Network, discriminator: Network, sigma: Option<f64>) -> AAEModel {
    let prior = PriorGrid::new(9, (-1.0, 1.0), sigma).unwrap();
    AAEModel::from_parts(encoder, decoder, discriminator, prior, small_codec()).unwrap()
}

/// Encoder that ignores its input and outputs `z`.
pub(crate) fn constant_encoder(z: [f64; 2]) -> Network {
    layer(Array2::zeros((2, 6)), z.to_vec(), Activation::Identity)
}

pub(crate) fn constant_decoder() -> Network {
    layer(Array2::zeros((6, 2)), vec![0.9, 0.1, 0.1, 0.8, 0.1, 0.5], Activation::Identity)
}

pub(crate) fn constant_discriminator(d: f64) -> Network {
    layer(Array2::zeros((1, 2)), vec![(d / (1.0 - d)).ln()], Activation::Sigmoid)
}

/// Discriminator `sigmoid(w1 * z1 + w2 * z2 + b)`.
pub(crate) fn linear_discriminator(w1: f64, w2: f64, b: f64) -> Network {
    layer(ndarray::array![[w1, w2]], vec![b], Activation::Sigmoid)
}

pub(crate) fn constant_encoder_model(_dataset: &Dataset, z: [f64; 2], sigma: Option<f64>) -> AAEModel {
    model_with(constant_encoder(z), constant_decoder(), constant_discriminator(0.5), sigma)
}
