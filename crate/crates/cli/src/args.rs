use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Random Euclidean distance matrices: coherence, closed-form bounds and
/// completion.
///
/// All logarithms are natural. JSON goes to stdout at 12 significant digits.
/// Exit codes: 0 success, 1 a checked claim failed, 2 usage or validation
/// error.
#[derive(Debug, Parser)]
#[command(name = "edmc", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a node cloud and write cloud.csv and edm.csv.
    Gen(GenArgs),
    /// Closed-form constants: lambda*, theta, mu0, mu1, N_min, eps(t), sample counts.
    Bounds(BoundsArgs),
    /// Exact coherence of one EDM by the QR and SVD paths.
    Coherence(CoherenceArgs),
    /// Monte Carlo check of a probabilistic claim.
    Verify(VerifyArgs),
    /// Complete a partially observed EDM by singular value thresholding.
    Complete(CompleteArgs),
    /// Success rate of completion over a grid of sample counts.
    Sweep(SweepArgs),
    /// Corrections to earlier work on EDM coherence.
    Section4(Section4Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Uniform,
    TruncatedNormal,
    BetaScaled,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    /// Coordinate law.
    #[arg(long, value_enum)]
    pub dist: Option<DistKind>,
    /// Support lower end.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub a: f64,
    /// Support upper end.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub b: f64,
    /// Truncated-normal location.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tn_mean: f64,
    /// Truncated-normal scale.
    #[arg(long, default_value_t = 1.0)]
    pub tn_std: f64,
    /// Beta shape alpha (>= 1).
    #[arg(long, default_value_t = 2.0)]
    pub beta_alpha: f64,
    /// Beta shape beta (>= 1).
    #[arg(long, default_value_t = 2.0)]
    pub beta_beta: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Number of nodes.
    #[arg(long)]
    pub n: usize,
    /// Ambient dimension.
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Second central moment (instead of --dist).
    #[arg(long, requires_all = ["m3", "m4", "c"], conflicts_with = "dist")]
    pub m2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub m3: Option<f64>,
    #[arg(long)]
    pub m4: Option<f64>,
    /// Support radius max(|a'|, |b'|).
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub d: usize,
    /// Chernoff slack, 0 < t < 1.
    #[arg(long)]
    pub t: f64,
    /// Failure probability, 0 < gamma <= 1.
    #[arg(long)]
    pub gamma: f64,
    /// Recovery exponent, > 2.
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    /// Universal constant of the recovery theorem (unknown; user supplied).
    #[arg(long = "bigC", default_value_t = 1.0)]
    pub big_c: f64,
    /// Node count for eps(t) and sample counts; defaults to N_min.
    #[arg(long)]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathChoice {
    Qr,
    Svd,
    Both,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    /// Cloud CSV written by `gen`; otherwise a cloud is sampled.
    #[arg(long, conflicts_with = "dist")]
    pub cloud: Option<PathBuf>,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PathChoice::Both)]
    pub path: PathChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClaimArg {
    Chernoff,
    Coherence,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub claim: ClaimArg,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Nodes per trial; defaults to N_min.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Master seed; trial k uses hash64(seed, k).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-trial rows.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    AllEntries,
    SymmetricOffdiag,
}

#[derive(Debug, Args)]
pub struct SvtArgs {
    /// Threshold; default 5N.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Step size; default 1.2 N^2 / m.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Dimension hint; the SVD starts at rank d + 4.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    /// Ground-truth EDM CSV; observations are sampled from it.
    #[arg(long = "in", conflicts_with = "observations")]
    pub input: Option<PathBuf>,
    /// Observation list `i,j,value` (0-based) instead of --in.
    #[arg(long, requires = "n")]
    pub observations: Option<PathBuf>,
    /// Matrix size for --observations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of observed entries (with --in).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::SymmetricOffdiag)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub svt: SvtArgs,
    /// Write the estimate here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the sampled observations here.
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Comma-separated sample counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m_grid: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::SymmetricOffdiag)]
    pub mode: ModeArg,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Section4Args {}
