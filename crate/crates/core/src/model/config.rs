use serde::{Deserialize, Serialize};

use crate::data::AttributeSchema;
use crate::error::{Error, Result};
use crate::neural::DEFAULT_LRELU_ALPHA;

/// Patience of the desk preset; long enough that every run passes epoch 200.
pub const DESK_PATIENCE: usize = 200;

/// Weight of the categorical term in the reconstruction loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    /// `dim(x_cat) / (dim(x_cat) + dim(x_con))` for the trained schema.
    Derived(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRule {
    Schema,
}

impl Gamma {
    pub fn resolve(self, schema: &AttributeSchema) -> f64 {
        match self {
            Gamma::Value(g) => g,
            Gamma::Derived(GammaRule::Schema) => {
                schema.categorical_dim() as f64 / schema.encoded_dim() as f64
            }
        }
    }
}

/// Training configuration. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AAEConfig {
    pub gamma: Gamma,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub lr_encoder: f64,
    pub lr_decoder: f64,
    pub lr_discriminator: f64,
    /// Epochs without sufficient relative improvement before stopping.
    pub patience: usize,
    /// Minimum relative improvement of the best reconstruction loss.
    pub tolerance: f64,
    pub tau: usize,
    /// Prior standard deviation; `None` means a sixth of the mode spacing.
    pub sigma: Option<f64>,
    pub seed: u64,
    pub lrelu_alpha: f64,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
}

impl Default for AAEConfig {
    fn default() -> Self {
        Self {
            gamma: Gamma::Value(0.5),
            batch_size: 128,
            max_epochs: 10_000,
            lr_encoder: 1e-4,
            lr_decoder: 1e-4,
            lr_discriminator: 1e-5,
            patience: 10,
            tolerance: 1e-4,
            tau: 25,
            sigma: None,
            seed: 0,
            lrelu_alpha: DEFAULT_LRELU_ALPHA,
            encoder_hidden: vec![256, 128, 64, 32, 16, 8],
            decoder_hidden: vec![8, 16, 32, 64, 128, 256],
            discriminator_hidden: vec![128, 64, 32, 16],
        }
    }
}

impl AAEConfig {
    /// Narrower networks for desk-scale synthetic runs on a single core.
    /// Optimiser settings and batch size are unchanged.
    pub fn desk() -> Self {
        Self {
            tau: 9,
            max_epochs: 2_000,
            encoder_hidden: vec![64, 32, 16, 8],
            decoder_hidden: vec![8, 16, 32, 64],
            discriminator_hidden: vec![64, 32, 16],
            patience: DESK_PATIENCE,
            ..Self::default()
        }
    }

    /// Learning rates used for the second (payment simulation) dataset.
    pub fn with_fast_reconstruction(mut self) -> Self {
        self.lr_encoder = 1e-3;
        self.lr_decoder = 1e-3;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Gamma::Value(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::config(format!("gamma must lie in [0,1], got {g}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        for (name, lr) in [
            ("lr_encoder", self.lr_encoder),
            ("lr_decoder", self.lr_decoder),
            ("lr_discriminator", self.lr_discriminator),
        ] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative, got {lr}")));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("tolerance must be non-negative"));
        }
        if !(self.lrelu_alpha > 0.0) {
            return Err(Error::config("lrelu_alpha must be positive"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = AAEConfig::default();
        assert_eq!(c.batch_size, 128);
        assert_eq!(c.max_epochs, 10_000);
        assert_eq!(c.lr_encoder, 1e-4);
        assert_eq!(c.lr_decoder, 1e-4);
        assert_eq!(c.lr_discriminator, 1e-5);
        assert_eq!(c.lrelu_alpha, 0.4);
        let fast = c.with_fast_reconstruction();
        assert_eq!((fast.lr_encoder, fast.lr_discriminator), (1e-3, 1e-5));
    }

    #[test]
    fn toml_keys_mirror_fields() {
        let c = AAEConfig::from_toml_str("gamma = \"schema\"\nbatch_size = 64\ntau = 9\n").unwrap();
        assert_eq!(c.gamma, Gamma::Derived(GammaRule::Schema));
        assert_eq!(c.batch_size, 64);
        let back = AAEConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert!(AAEConfig::from_toml_str("learning_rate = 1.0").is_err());
        assert!(AAEConfig::from_toml_str("gamma = 2.0").is_err());
        assert!(AAEConfig::from_toml_str("batch_size = 0").is_err());
    }
}
