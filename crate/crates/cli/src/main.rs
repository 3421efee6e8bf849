//! `geoqml` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 malformed input or usage,
//! 3 invariant violation, 4 training divergence. Every failure prints one
//! line to stderr of the form `geoqml: error[<kind>]: <message>`.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "geoqml", version, about = "Riemannian and quantum-state geometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distances and means on SPD and Grassmann manifolds.
    #[command(subcommand)]
    Manifold(ManifoldCommand),
    /// Geometry of the states produced by a parameterized circuit.
    Quantum(QuantumArgs),
    /// Train and evaluate every model variant on the synthetic surrogate.
    Bench(BenchArgs),
    /// Generate a synthetic dataset as CSV.
    Dataset(DatasetArgs),
}

#[derive(Subcommand, Debug)]
enum ManifoldCommand {
    /// Pairwise distance matrix over every point in the input files.
    Distances(DistanceArgs),
    /// Mean of the SPD matrices in the input files.
    Mean(MeanArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    /// Affine-invariant SPD distance.
    Ai,
    /// Log-Euclidean SPD distance.
    Le,
    /// Grassmann geodesic distance (subspace files).
    Grassmann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeanMethod {
    Karcher,
    LogEuclidean,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    /// Input files; points are taken in file order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "ai")]
    pub metric: Metric,
    /// Write here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MeanArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "karcher")]
    pub method: MeanMethod,
    #[arg(long, default_value_t = geoqml::spd::DEFAULT_KARCHER_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = geoqml::spd::DEFAULT_KARCHER_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QuantumArgs {
    /// Circuit text file.
    pub circuit: PathBuf,
    /// Comma-separated parameter values (default: all zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    /// Input state file (default: |0…0⟩).
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Fubini-Study metric.
    #[arg(long)]
    pub fs_metric: bool,
    /// Quantum Fisher information of the density-matrix family.
    #[arg(long)]
    pub qfi: bool,
    /// Full quantum geometric tensor (real and imaginary parts).
    #[arg(long)]
    pub qgt: bool,
    /// Tangent rank at random parameter draws.
    #[arg(long)]
    pub tangent_rank: bool,
    /// Distance from the output state to the nearest product state.
    #[arg(long)]
    pub entanglement_distance: bool,
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = geoqml::geometry::DEFAULT_RANK_THRESHOLD)]
    pub rank_threshold: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Config file (`key = value` lines); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// JSON report path (stdout when omitted and `--table` is not given).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Print a plain-text results table to stdout.
    #[arg(long)]
    pub table: bool,
}

#[derive(Args, Debug)]
pub struct DatasetArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub in_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub out_dim: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Emit labelled Gaussian blobs with this many classes instead of
    /// regression targets.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub spread: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Manifold(ManifoldCommand::Distances(a)) => commands::manifold_distances(&a),
        Command::Manifold(ManifoldCommand::Mean(a)) => commands::manifold_mean(&a),
        Command::Quantum(a) => commands::quantum(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Dataset(a) => commands::dataset(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}
