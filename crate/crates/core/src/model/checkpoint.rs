use std::path::Path;

use serde::{Deserialize, Serialize};

use super::aae::AAEModel;
use super::config::AAEConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "jeaae-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub schema_hash: String,
    pub seed: u64,
    pub epoch: usize,
    pub config: AAEConfig,
}

/// Self-describing JSON document holding every layer (dims, activation,
/// weights, biases), the prior grid, the codec and run metadata. Floats are
/// written in shortest round-trip form, so save/load is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub meta: CheckpointMeta,
    pub model: AAEModel,
}

impl Checkpoint {
    pub fn new(model: AAEModel, config: AAEConfig, epoch: usize) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            meta: CheckpointMeta {
                schema_hash: model.codec.schema().fingerprint(),
                seed: config.seed,
                epoch,
                config,
            },
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Serde(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        ckpt.model.check_shapes()?;
        let hash = ckpt.model.codec.schema().fingerprint();
        if hash != ckpt.meta.schema_hash {
            return Err(Error::Consistency(
                "checkpoint schema hash does not match its embedded schema".into(),
            ));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{desk_spec, synth_generate, FeatureCodec};
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_bit_exact() {
        let ds = synth_generate(&desk_spec(), 100, 1).unwrap();
        let codec = FeatureCodec::fit(&ds).unwrap();
        let cfg = AAEConfig::desk();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let model = AAEModel::new(codec, &cfg, &mut rng).unwrap();
        let ckpt = Checkpoint::new(model, cfg, 0);
        let text = ckpt.to_json();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn tampered_schema_is_detected() {
        let ds = synth_generate(&desk_spec(), 100, 1).unwrap();
        let codec = FeatureCodec::fit(&ds).unwrap();
        let cfg = AAEConfig::desk();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let model = AAEModel::new(codec, &cfg, &mut rng).unwrap();
        let mut ckpt = Checkpoint::new(model, cfg, 0);
        ckpt.meta.schema_hash = "00".into();
        assert!(Checkpoint::from_json(&ckpt.to_json()).is_err());
    }
}
