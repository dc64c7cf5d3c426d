use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::AAEConfig;
use super::prior::PriorGrid;
use crate::data::{EncodedEntry, FeatureCodec, JournalEntry};
use crate::error::{Error, Result};
use crate::neural::{Activation, Network};

pub const LATENT_DIM: usize = 2;

/// Encoder, decoder and discriminator plus the prior and the codec the
/// networks were trained against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AAEModel {
    pub encoder: Network,
    pub decoder: Network,
    pub discriminator: Network,
    pub prior: PriorGrid,
    pub codec: FeatureCodec,
}

impl AAEModel {
    /// Fresh Glorot-initialised networks sized for `codec`'s schema.
    pub fn new<R: Rng + ?Sized>(codec: FeatureCodec, config: &AAEConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let dim = codec.encoded_dim();
        let lrelu = Activation::LeakyRelu {
            alpha: config.lrelu_alpha,
        };
        let encoder = Network::mlp(dim, &config.encoder_hidden, LATENT_DIM, lrelu, Activation::Tanh, rng)?;
        let decoder = Network::mlp(LATENT_DIM, &config.decoder_hidden, dim, lrelu, Activation::Sigmoid, rng)?;
        let discriminator =
            Network::mlp(LATENT_DIM, &config.discriminator_hidden, 1, lrelu, Activation::Sigmoid, rng)?;
        let prior = PriorGrid::new(config.tau, (-1.0, 1.0), config.sigma)?;
        Self::from_parts(encoder, decoder, discriminator, prior, codec)
    }

    pub fn from_parts(
        encoder: Network,
        decoder: Network,
        discriminator: Network,
        prior: PriorGrid,
        codec: FeatureCodec,
    ) -> Result<Self> {
        let model = Self {
            encoder,
            decoder,
            discriminator,
            prior,
            codec,
        };
        model.check_shapes()?;
        Ok(model)
    }

    pub fn check_shapes(&self) -> Result<()> {
        let dim = self.codec.encoded_dim();
        let ok = self.encoder.input_dim() == dim
            && self.encoder.output_dim() == LATENT_DIM
            && self.decoder.input_dim() == LATENT_DIM
            && self.decoder.output_dim() == dim
            && self.discriminator.input_dim() == LATENT_DIM
            && self.discriminator.output_dim() == 1;
        if ok {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "networks do not match encoded dimension {dim} and latent dimension {LATENT_DIM}"
            )))
        }
    }

    pub fn encoded_dim(&self) -> usize {
        self.codec.encoded_dim()
    }

    pub fn encode(&self, entry: &JournalEntry) -> Result<[f64; 2]> {
        let x = self.codec.encode_entry(entry)?.to_vec();
        let z = self.encoder.predict(&x)?;
        Ok([z[0], z[1]])
    }

    /// Encodes rows of an already encoded matrix.
    pub fn encode_matrix(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.encoder.predict_batch(x)
    }

    pub fn encode_entries(&self, entries: &[JournalEntry]) -> Result<Vec<[f64; 2]>> {
        let x = self.codec.encode_matrix(entries)?;
        Ok(rows_to_points(&self.encode_matrix(x.view())?))
    }

    pub fn decode(&self, z: [f64; 2]) -> Result<EncodedEntry> {
        let out = self.decoder.predict(&z)?;
        EncodedEntry::from_slice(self.codec.schema(), &out)
    }

    /// Decoder outputs for many latent points, one row each.
    pub fn decode_points(&self, z: &[[f64; 2]]) -> Result<Array2<f64>> {
        self.decoder.predict_batch(points_to_matrix(z).view())
    }

    pub fn discriminate(&self, z: [f64; 2]) -> Result<f64> {
        Ok(self.discriminator.predict(&z)?[0])
    }

    pub fn discriminate_points(&self, z: &[[f64; 2]]) -> Result<Vec<f64>> {
        let out = self.discriminator.predict_batch(points_to_matrix(z).view())?;
        Ok(out.into_raw_vec_and_offset().0)
    }

    /// Re-encodes an entry and scores the resulting latent point.
    pub fn robustness(&self, entry: &JournalEntry) -> Result<([f64; 2], f64)> {
        let z = self.encode(entry)?;
        Ok((z, self.discriminate(z)?))
    }

    /// Fraction of categorical attribute values recovered by
    /// decode(encode(entry)), over all entries and categorical attributes.
    pub fn categorical_accuracy(&self, entries: &[JournalEntry]) -> Result<f64> {
        let n_attr = self.codec.schema().categorical.len();
        if entries.is_empty() || n_attr == 0 {
            return Err(Error::InsufficientData(
                "accuracy needs entries with categorical attributes".into(),
            ));
        }
        let x = self.codec.encode_matrix(entries)?;
        let z = self.encode_matrix(x.view())?;
        let x_hat = self.decoder.predict_batch(z.view())?;
        let mut hits = 0usize;
        for (row, e) in x_hat.outer_iter().zip(entries) {
            let decoded = self
                .codec
                .decode_vector(row.as_slice().expect("standard layout"))?;
            hits += decoded
                .entry
                .categorical
                .iter()
                .zip(&e.categorical)
                .filter(|(a, b)| a == b)
                .count();
        }
        Ok(hits as f64 / (entries.len() * n_attr) as f64)
    }
}

pub(crate) fn points_to_matrix(z: &[[f64; 2]]) -> Array2<f64> {
    Array2::from_shape_fn((z.len(), LATENT_DIM), |(i, j)| z[i][j])
}

pub(crate) fn rows_to_points(m: &Array2<f64>) -> Vec<[f64; 2]> {
    m.outer_iter().map(|r| [r[0], r[1]]).collect()
}
