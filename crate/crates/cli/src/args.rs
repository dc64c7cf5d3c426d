use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "jeaae", version, about = "Adversarial autoencoder pipeline for accounting journal entries")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Worker threads for grid evaluation (all cores when unset).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Replace output files that already exist.
    #[arg(long, global = true)]
    pub force: bool,
    /// Suppress the per-epoch log line.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic dataset.
    Synth(SynthArgs),
    /// Train an adversarial autoencoder and write a checkpoint.
    Train(TrainArgs),
    /// Posterior, sample maps, adversarial region and traversal.
    Analyze(AnalyzeArgs),
    /// Run a replacement or augmentation attack from a spec file.
    Attack(AttackArgs),
    /// Run the detector suite over one dataset.
    Audit(AuditArgs),
    /// Compare detectors on an original and an adversarial extract.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Number of entries.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Process spec (TOML); the built-in desk spec when unset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Reference architecture and learning rates.
    Reference,
    /// Reference with encoder/decoder learning rate 1e-3.
    Fast,
    /// Narrow networks, 9 modes, 2,000 epochs.
    Desk,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Schema (TOML); inferred from the CSV when unset.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Training config (TOML, keys as in the config type); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting point before `--config` and flags are applied.
    #[arg(long, value_enum, default_value = "reference")]
    pub preset: Preset,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// A number in [0,1] or `schema`.
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr_encoder: Option<f64>,
    #[arg(long)]
    pub lr_decoder: Option<f64>,
    #[arg(long)]
    pub lr_discriminator: Option<f64>,
    /// Train once per encoder/decoder learning rate and keep the run with the
    /// lowest reconstruction loss.
    #[arg(long, value_delimiter = ',')]
    pub sweep_lr: Vec<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Training data for the aggregated posterior.
    #[arg(long)]
    pub data: PathBuf,
    /// Process labels (`row_id,process`) for mode purity.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Lattice spacing of the sample grid.
    #[arg(long, default_value_t = jeaae_core::analysis::DEFAULT_DELTA)]
    pub delta: f64,
    /// Largest number of grid points.
    #[arg(long, default_value_t = jeaae_core::analysis::DEFAULT_POINT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = jeaae_core::analysis::DEFAULT_RHO)]
    pub rho: f64,
    /// `absolute` or `increase`.
    #[arg(long, default_value = "absolute")]
    pub rho_mode: String,
    /// Attributes to map; all of them when unset.
    #[arg(long, value_delimiter = ',')]
    pub attributes: Vec<String>,
    /// Quantile bands for continuous attributes.
    #[arg(long, default_value_t = jeaae_core::analysis::DEFAULT_BANDS)]
    pub bands: usize,
    /// Map formats among csv, pgm, ppm.
    #[arg(long, value_delimiter = ',', default_value = "csv,pgm")]
    pub formats: Vec<String>,
    /// Prior mode of the adversarial region.
    #[arg(long)]
    pub k: Option<usize>,
    /// Region threshold; a posterior quantile of mode k when unset.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = jeaae_core::attack::DEFAULT_THRESHOLD_QUANTILE)]
    pub threshold_quantile: f64,
    /// Traversal axis (z1 or z2); requires `--k`.
    #[arg(long)]
    pub traverse_axis: Option<String>,
    /// Traversal range `a,b`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub traverse_range: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub traverse_step: f64,
    /// Value of the other coordinate during traversal.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub traverse_fixed: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AttackArgs {
    /// Checkpoint; the spec's `region.checkpoint` when unset.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// The original extract (also the posterior for region selection).
    #[arg(long)]
    pub data: PathBuf,
    /// Attack spec (TOML).
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SchemaSource {
    /// Schema (TOML).
    #[arg(long, conflicts_with = "checkpoint")]
    pub schema: Option<PathBuf>,
    /// Take the schema from a checkpoint.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Detector suite (TOML with [[rule]], [[rarity]] and [benford] tables).
    #[arg(long)]
    pub rules: PathBuf,
    #[command(flatten)]
    pub schema: SchemaSource,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub adversarial: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub rules: PathBuf,
    #[command(flatten)]
    pub schema: SchemaSource,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
