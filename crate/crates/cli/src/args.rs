use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sparda", version, about = "Find and test the projection along which two samples differ most")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relax-then-tighten search for the most divergent direction.
    Analyze(AnalyzeArgs),
    /// Permutation test of equal distributions, using the analysis divergence as statistic.
    Permtest(PermtestArgs),
    /// Held-out divergence over a penalty grid, then a refit at the best penalty.
    Cv(CvArgs),
    /// Generate a synthetic two-sample scenario as CSV files.
    Synth(SynthArgs),
    /// Brute-force reference values along a fixed direction.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Inputs {
    /// CSV file with the first population.
    #[arg(long)]
    pub x: PathBuf,
    /// CSV file with the second population.
    #[arg(long)]
    pub y: PathBuf,
}

/// Solver overrides; unset values keep the library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// ℓ₁ penalty on the relaxed matrix.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Normalized step length of the matrix update.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Initial dual step, relative to the mean pair cost.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Relaxation iterations without improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Sparsity of the tightened direction (derived from the relaxation when unset).
    #[arg(long)]
    pub k: Option<usize>,
    /// Sample this many random pairs per relaxation step.
    #[arg(long)]
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CvOptions {
    /// Penalty grid, comma separated (default: 8 log-spaced values scaled to the data).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Choose the penalty by cross-validation instead of `--lambda`.
    #[arg(long, conflicts_with = "lambda")]
    pub cv: bool,
    #[command(flatten)]
    pub cv_options: CvOptions,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PermtestArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 99)]
    pub perms: usize,
    /// Re-select the penalty by cross-validation on every permutation.
    #[arg(long, conflicts_with = "lambda")]
    pub cv: bool,
    /// With `--cv`, select the penalty once on the observed labels and keep it
    /// for every permutation (a fixed-λ null).
    #[arg(long, requires = "cv")]
    pub fixed_lambda_null: bool,
    #[command(flatten)]
    pub cv_options: CvOptions,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub cv_options: CvOptions,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Figure1a,
    WishartBlocks,
    MeanShift,
    VarianceShift,
    NullIdentical,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioName,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Second sample size (defaults to `--n`).
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of three-feature blocks (wishart-blocks).
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    /// Mean of the second population (mean-shift), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,0,0,0,0")]
    pub shift: Vec<f64>,
    /// Per-feature noise variance (mean-shift).
    #[arg(long, default_value_t = 0.01)]
    pub noise_variance: f64,
    /// Dimension (variance-shift, null-identical).
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    /// Variance of the first feature of the second population (variance-shift).
    #[arg(long, default_value_t = 4.0)]
    pub factor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Directory receiving `x.csv` and `y.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Direction to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
