//! `simmatch` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simmatch::synthbench::Category;
use simmatch::{Error, MatchConfig};

#[derive(Debug, Parser)]
#[command(name = "simmatch", version, about = "Robust point matching under similarity transforms")]
struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Match a model point file against a scene point file.
    Match(MatchArgs),
    /// Run the synthetic robustness benchmark.
    Bench(BenchArgs),
    /// Generate one synthetic model/scene pair with ground truth.
    Gen(GenArgs),
}

/// Matcher settings. A `--config` file is read first; flags override it.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON file with any subset of the matcher settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    mu_start: Option<f64>,
    #[arg(long)]
    s_lo: Option<f64>,
    #[arg(long)]
    s_hi: Option<f64>,
    #[arg(long)]
    lambda_step: Option<f64>,
    /// Match in data units instead of centering and scaling both clouds.
    #[arg(long)]
    no_normalize: bool,
}

impl ConfigArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<MatchConfig, Error> {
        let mut config = match &self.config {
            Some(path) => MatchConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => MatchConfig::default(),
        };
        let overrides = [
            (&mut config.mu, self.mu),
            (&mut config.mu_start, self.mu_start),
            (&mut config.s_lo, self.s_lo),
            (&mut config.s_hi, self.s_hi),
            (&mut config.lambda_step, self.lambda_step),
        ];
        for (field, value) in overrides {
            if let Some(v) = value {
                *field = v;
            }
        }
        if self.no_normalize {
            config.normalize = false;
        }
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct MatchArgs {
    model: PathBuf,
    scene: PathBuf,
    /// Output JSON path; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Ground-truth JSON written by `gen`; adds an accuracy field.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Run a baseline matcher instead of path following.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Baseline {
    Icp,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Base point file; the bundled shape if omitted.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Use only the first N base points.
    #[arg(long)]
    points: Option<usize>,
    /// Output directory for CSV and JSON files.
    #[arg(short, long, default_value = "bench-out")]
    output: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Suite seed; trial seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Categories to run (comma separated); all if omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_category)]
    categories: Vec<Category>,
    /// Comma-separated levels, replacing every category's default grid.
    #[arg(long, value_delimiter = ',')]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 60.0)]
    rotation_max_deg: f64,
    /// Also run a baseline on every trial.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// Report every runtime as zero so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Base point file.
    base: PathBuf,
    /// Output directory for model.txt, scene.txt and ground_truth.json.
    #[arg(short, long, default_value = "gen-out")]
    output: PathBuf,
    /// JSON trial specification; flags below are ignored when given.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_parser = parse_category, default_value = "noise")]
    category: Category,
    #[arg(long, default_value_t = 0.0)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60.0)]
    rotation_max_deg: f64,
    #[arg(long, default_value_t = 0.5)]
    min_scale: f64,
    #[arg(long, default_value_t = 1.5)]
    max_scale: f64,
}

fn parse_category(s: &str) -> Result<Category, String> {
    s.parse::<Category>().map_err(|e| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::DimensionMismatch { .. } => 3,
        Error::DegenerateCloud => 4,
        Error::Parse { .. }
        | Error::InvalidConfig(_)
        | Error::InvalidTrial(_)
        | Error::InvalidCloud(_)
        | Error::EmptyGroundTruth
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Match(args) => commands::run_match(args),
        Command::Bench(args) => commands::run_bench(args, cli.verbose),
        Command::Gen(args) => commands::run_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
