mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chtest::{DetectorSpec, Gaussian};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

/// Error exponents, sensing designs, detectors and Monte Carlo runs for
/// anomaly detection with mixed observations.
#[derive(Debug, Parser)]
#[command(name = "chtest", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for randomized commands.
    #[arg(long, global = true, env = "CHTEST_SEED")]
    pub seed: Option<u64>,
    /// Write the result here instead of stdout; provenance goes to
    /// `<output>.provenance.json`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Display exponents in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chernoff information between two Gaussians, or IC/OC over an ensemble.
    Chernoff(ChernoffArgs),
    /// Generate or optimize a sensing design.
    Design {
        #[command(subcommand)]
        kind: DesignKind,
    },
    /// Error probability versus m for a scenario file.
    Simulate(SimulateArgs),
    /// Run one detector on a design and a set of measurements.
    Detect(DetectArgs),
    /// Measurements needed for a target error probability.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChernoffMode {
    /// Two scalar Gaussians `--p`, `--q`.
    Pair,
    /// Inner conditional information over `--ensemble`.
    Ic,
    /// Outer conditional information over `--ensemble`.
    Oc,
}

#[derive(Debug, Args)]
pub struct ChernoffArgs {
    #[arg(long, value_enum, default_value = "pair")]
    pub mode: ChernoffMode,
    /// First density as `mean,variance`.
    #[arg(long, value_parser = parse_gaussian, allow_hyphen_values = true)]
    pub p: Option<Gaussian>,
    #[arg(long, value_parser = parse_gaussian, allow_hyphen_values = true)]
    pub q: Option<Gaussian>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "p")]
    pub p_mean: Option<f64>,
    #[arg(long, conflicts_with = "p")]
    pub p_var: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "q")]
    pub q_mean: Option<f64>,
    #[arg(long, conflicts_with = "q")]
    pub q_var: Option<f64>,
    /// Evaluate the pair by numeric integration instead of the closed form.
    #[arg(long)]
    pub numeric: bool,
    /// Sensing ensemble JSON: `{"vectors": [[..]], "probabilities": [..]}`.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Normal distribution as `mean,variance`.
    #[arg(long, value_parser = parse_gaussian, allow_hyphen_values = true)]
    pub f1: Option<Gaussian>,
    /// Anomalous distribution as `mean,variance`.
    #[arg(long, value_parser = parse_gaussian, allow_hyphen_values = true)]
    pub f2: Option<Gaussian>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// One anomaly set, e.g. `0,3`; with `--w` restricts to that pair
    /// instead of the minimum over all pairs.
    #[arg(long, value_parser = parse_indices, requires = "w")]
    pub v: Option<::std::vec::Vec<usize>>,
    #[arg(long, value_parser = parse_indices, requires = "v")]
    pub w: Option<::std::vec::Vec<usize>>,
}

#[derive(Debug, Subcommand)]
pub enum DesignKind {
    /// Random 0/1 design with fixed measurement degree.
    Bipartite {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// Allow variable degrees to differ by one when degree·m/n is fractional.
        #[arg(long)]
        near_regular: bool,
    },
    /// The parity-check matrix of the (7,4) Hamming code.
    Hamming74,
    /// Coordinate measurements: full rounds plus random extras.
    Separate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
    /// All pair vectors (e_i − e_j)/√2 for a single mean anomaly.
    Permutation {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu2: f64,
        #[arg(long)]
        var: f64,
    },
    /// Best single vector between N(μ, Σ1) and N(μ, Σ2).
    OptimalMean {
        /// JSON matrix (array of rows).
        #[arg(long)]
        sigma1: PathBuf,
        #[arg(long)]
        sigma2: PathBuf,
    },
    /// Best single vector between N(μ1, Σ) and N(μ2, Σ).
    OptimalCov {
        #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
        mu1: ::std::vec::Vec<f64>,
        #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
        mu2: ::std::vec::Vec<f64>,
        #[arg(long)]
        sigma: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Paired comparison of two detectors (e.g. `clrt,slrt`) instead of the
    /// error curve.
    #[arg(long, value_parser = parse_pair)]
    pub compare: Option<(DetectorSpec, DetectorSpec)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorName {
    Lrt,
    Pairwise,
    Mp,
    Lasso,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Design JSON as written by `chtest design`, with or without the
    /// provenance wrapper.
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, value_parser = parse_gaussian, allow_hyphen_values = true)]
    pub f1: Gaussian,
    #[arg(long, value_parser = parse_gaussian, allow_hyphen_values = true)]
    pub f2: Gaussian,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "lrt")]
    pub detector: DetectorName,
    /// Measured values, comma separated, one per design row.
    #[arg(long, value_parser = parse_floats, allow_hyphen_values = true, conflicts_with = "truth")]
    pub values: Option<::std::vec::Vec<f64>>,
    /// Simulate measurements from this anomaly set using `--seed`.
    #[arg(long, value_parser = parse_indices)]
    pub truth: Option<::std::vec::Vec<usize>>,
    /// Log-threshold for the pairwise tournament.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub threshold: f64,
    /// LASSO penalty (default: the noise-scaled universal threshold).
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[arg(long, required_unless_present = "scenario")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "scenario")]
    pub k: Option<usize>,
    /// Error exponent in nats.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "scenario", conflicts_with = "scenario")]
    pub exponent: Option<f64>,
    /// Derive n, k and the exponent from a scenario file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

fn parse_indices(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

fn parse_gaussian(s: &str) -> Result<Gaussian, String> {
    match parse_floats(s)?.as_slice() {
        &[mean, var] => Gaussian::new(mean, var).map_err(|e| e.to_string()),
        _ => Err(format!("expected mean,variance but got '{s}'")),
    }
}

fn parse_pair(s: &str) -> Result<(DetectorSpec, DetectorSpec), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two detectors like clrt,slrt but got '{s}'"))?;
    let a = a.trim().parse::<DetectorSpec>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<DetectorSpec>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Chernoff(a) => commands::chernoff(&cli.global, &args, a),
        Command::Design { kind } => commands::design(&cli.global, &args, kind),
        Command::Simulate(a) => commands::simulate(&cli.global, &args, a),
        Command::Detect(a) => commands::detect(&cli.global, &args, a),
        Command::Complexity(a) => commands::complexity(&cli.global, &args, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
