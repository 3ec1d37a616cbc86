//! `infoscape`: batch front end for mutual-information landscapes.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input (including bad
//! arguments), 3 input that parses but is not valid for the command, 4
//! optimizer non-convergence.

mod commands;
mod input;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use infoscape::gaussian::ScalarCovariance;
use infoscape::geometry::SamplingMeasure;
use infoscape::MinimizeOptions;

use commands::{MarginalSource, VolumeArgs};
use output::{render, Format};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Core(#[from] infoscape::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cannot write report: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } => 2,
            CliError::Core(infoscape::Error::NonConvergence { .. }) => 4,
            CliError::Core(_) | CliError::Invalid(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Measure {
    Corner,
    Simplex,
}

#[derive(Parser, Debug)]
#[command(name = "infoscape", version, about = "Mutual-information landscapes over fixed-marginal polytopes")]
struct Cli {
    /// Output format; `landscape` defaults to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Optimizer tolerance on the first-order gap.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Optimizer iteration budget.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimizer, decompositions and diagnostics of a joint distribution.
    Analyze {
        /// Table with columns s,x,y,p (CSV with header, or JSON records).
        input: PathBuf,
        /// Divide by the total mass instead of rejecting unnormalized input.
        #[arg(long)]
        renormalize: bool,
        /// Seed of the random points used by the linearity diagnostic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// I(S : X,Y) on a regular grid over the correlation domain.
    Landscape {
        /// Joint table whose pairwise marginals fix the domain.
        #[arg(long, conflicts_with_all = ["sx", "sy"], required_unless_present_all = ["sx", "sy"])]
        joint: Option<PathBuf>,
        /// Table with columns s,x,p.
        #[arg(long, requires = "sy")]
        sx: Option<PathBuf>,
        /// Table with columns s,y,p.
        #[arg(long, requires = "sx")]
        sy: Option<PathBuf>,
        /// Points per coordinate, endpoints included.
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
        grid: u32,
        #[arg(long)]
        renormalize: bool,
    },
    /// Admissible slopes, region and verdict for binary corner points.
    Discriminant {
        /// Corner point `s,t` of the first conditional table.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        p: (f64, f64),
        /// Optional second corner point.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        q: Option<(f64, f64)>,
    },
    /// Fraction of binary configurations with an interior minimizer.
    Volume {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = Measure::Corner)]
        measure: Measure,
        /// Skip the exact quadrature.
        #[arg(long)]
        no_exact: bool,
    },
    /// Scan the free covariance entry of a scalar Gaussian triple.
    #[command(allow_negative_numbers = true)]
    Gaussian { a: f64, b: f64, c: f64, d: f64, e: f64 },
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `s,t`")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut opts = MinimizeOptions::default();
    if let Some(t) = cli.tol {
        opts.tol = t;
    }
    if let Some(n) = cli.max_iters {
        opts.max_iters = n;
    }
    let json = |v: serde_json::Value| render(&v, cli.format.unwrap_or(Format::Json));
    match cli.command {
        Command::Analyze { input, renormalize, seed } => json(commands::analyze(&input, renormalize, &opts, seed)?),
        Command::Landscape { joint, sx, sy, grid, renormalize } => {
            let src = match (joint, sx, sy) {
                (Some(j), _, _) => MarginalSource::Joint(j),
                (None, Some(sx), Some(sy)) => MarginalSource::Pair { sx, sy },
                _ => return Err(CliError::Invalid("give --joint or both --sx and --sy".into())),
            };
            commands::landscape(&src, grid as usize, renormalize, &opts, cli.format.unwrap_or(Format::Csv))
        }
        Command::Discriminant { p, q } => json(commands::discriminant(p, q)?),
        Command::Volume { seed, samples, workers, measure, no_exact } => {
            let measure = match measure {
                Measure::Corner => SamplingMeasure::Corner,
                Measure::Simplex => SamplingMeasure::Simplex,
            };
            json(commands::volume(&VolumeArgs { seed, samples, workers, measure, exact: !no_exact })?)
        }
        Command::Gaussian { a, b, c, d, e } => json(commands::gaussian(ScalarCovariance { a, b, c, d, e })?),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
