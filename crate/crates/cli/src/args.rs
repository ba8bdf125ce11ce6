use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "patchforge", version, about = "Paired-image region augmentation toolkit")]
pub struct Cli {
    /// Worker threads; falls back to PATCHFORGE_WORKERS, then the CPU count.
    #[arg(long, global = true, env = "PATCHFORGE_WORKERS")]
    pub workers: Option<usize>,

    /// Emit reports as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize augmented copies of a paired dataset.
    Augment(AugmentArgs),
    /// Coverage and metric statistics over a grid of scales and strategies.
    Sweep(SweepArgs),
    /// PSNR/SSIM between two directories of matching images.
    Metrics(MetricsArgs),
    /// Deterministic fraction of a dataset, written as a manifest.
    Subsample(SubsampleArgs),
    /// Dataset properties row: PSNR / SSIM, resolution, pair count.
    Stats(StatsArgs),
    /// Decode and check every pair; report per-file problems.
    Validate(ValidateArgs),
}

/// Where the pairs come from: a manifest file or two directories.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Manifest file (JSON array of {id, input, target}).
    #[arg(long, conflicts_with_all = ["input_dir", "gt_dir"])]
    pub manifest: Option<PathBuf>,

    /// Directory of degraded inputs.
    #[arg(long = "in", value_name = "DIR")]
    pub input_dir: Option<PathBuf>,

    /// Directory of clean ground-truth images.
    #[arg(long = "gt", value_name = "DIR")]
    pub gt_dir: Option<PathBuf>,

    /// How files in the two directories are matched.
    #[arg(long, default_value = "same_filename")]
    pub pairing: String,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run config file (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override a config field, e.g. `--set mask.mp_max=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Master seed; overrides the config file's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub config: ConfigArgs,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,

    /// Augmented copies per pair; overrides `copies_per_sample`.
    #[arg(long)]
    pub copies: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub config: ConfigArgs,

    /// Strictly increasing mp_max values, comma separated.
    #[arg(long)]
    pub scales: String,

    /// Strategy names, comma separated.
    #[arg(long)]
    pub strategies: String,

    #[arg(long, default_value_t = 100)]
    pub samples: usize,

    /// Directory for sweep.csv and sweep.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Row label; defaults to the input directory name.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct SubsampleArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub fraction: f64,

    #[arg(long)]
    pub seed: u64,

    /// Manifest path to write; prints the manifest when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
}
