//! Adversarial journal entries: latent traversal, anomaly replacement and
//! anomaly augmentation, and the adversarial extract they produce.

mod augment;
mod entry;
mod extract;
mod replace;
mod spec;
mod stats;
mod traverse;

pub use augment::{augment_anomaly, AugmentationSpec};
pub use entry::{AdversarialEntry, AttackProvenance, Mechanism};
pub use extract::{build_adversarial_extract, emit_adversarial_extract, Manifest, ManifestAction, ManifestRow};
pub use replace::{apportion_cents, replace_anomaly, ReplacementSpec, DEFAULT_RETRY_BUDGET, SPLIT_JITTER};
pub use spec::{
    resolve_region, select_mode, AttackClass, AttackFile, AugmentationParams, RegionRef, ReplacementParams,
    DEFAULT_THRESHOLD_QUANTILE,
};
pub use stats::{average_ranks, spearman};
pub use traverse::{mode_robustness_correlation, trajectory_len, traverse_trajectory, Axis, TraversalSample};
