//! Adversarial autoencoder for accounting journal entries.
//!
//! The crate trains an adversarial autoencoder with a two-dimensional
//! Gaussian-grid prior on tabular journal entries, probes the learned latent
//! plane, generates adversarial entries that camouflage anomalies, and runs a
//! small suite of audit detectors against the result.
//!
//! Modules, bottom-up:
//! - [`neural`]: dense networks, reverse-mode gradients, Adam.
//! - [`data`]: schema, CSV ingestion, one-hot/min-max codec, synthetic data.
//! - [`model`]: prior grid, losses, two-phase training, checkpoints.
//! - [`analysis`]: latent sample grids, combination/robustness maps, regions.
//! - [`attack`]: trajectory traversal, anomaly replacement and augmentation.
//! - [`audit`]: red-flag rules, Benford test, rarity scan, attack evaluation.

pub mod analysis;
pub mod attack;
pub mod audit;
pub mod data;
pub mod error;
pub mod model;
pub mod neural;

pub use error::{Error, Result};
