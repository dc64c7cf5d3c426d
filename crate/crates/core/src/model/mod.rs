//! The adversarial autoencoder: prior grid, losses, networks, training and
//! checkpoints.

mod aae;
mod checkpoint;
mod config;
mod loss;
mod prior;
mod train;

pub use aae::{AAEModel, LATENT_DIM};
pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{AAEConfig, Gamma, GammaRule, DESK_PATIENCE};
pub use loss::{adversarial_loss, reconstruction_loss, LossWithGradient, PROB_FLOOR};
pub use prior::{build_prior_grid, sample_prior, PriorGrid};
pub use train::{train, EpochRecord, EpochStats, Trainer, TrainingLog};

