//! `meshpref` command line: mesh ladders, experiment designs, the session
//! server, simulated observers and offline analysis.
//!
//! Every subcommand is a thin wrapper over `meshpref-core` or
//! `meshpref-server`. Failures print one `error: kind=<kind> message=<text>`
//! line and exit with status 1; usage errors exit with status 2.

mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{expand_config, parse_config};
pub use error::CliError;

/// Environment variable holding the default `serve` address.
pub const LISTEN_ENV: &str = "MESHPREF_LISTEN";

#[derive(Debug, Parser)]
#[command(
    name = "meshpref",
    version,
    about = "Paired-comparison experiments on 3D mesh quality",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simplify a mesh to each target triangle count and measure the error.
    Decimate(DecimateArgs),
    /// Print a structural report of a mesh.
    Validate(ValidateArgs),
    /// Build an experiment design from a list of meshes.
    Design(DesignArgs),
    /// Run the experiment server.
    Serve(ServeArgs),
    /// Simulate observer sessions as JSON Lines event logs.
    Simulate(SimulateArgs),
    /// Aggregate JSON Lines session logs into a report.
    Analyze(AnalyzeArgs),
    /// Render a saved JSON report in another format.
    Report(ReportArgs),
    /// Mean observables of simulated sessions over a range of β.
    Sweep(SweepArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` file whose keys mirror long flag names.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated triangle budgets.
    #[arg(long, value_delimiter = ',', required = true)]
    pub targets: Vec<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed of the error sampling; printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Surface samples per error measurement.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Comma-separated OBJ paths. A `_<digits>` suffix on the file stem gives
    /// the triangle count; otherwise the file is read.
    #[arg(long, value_delimiter = ',', required = true)]
    pub meshes: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "unlit")]
    pub shadings: Vec<String>,
    /// One texture for every mesh, or one per mesh.
    #[arg(long, value_delimiter = ',')]
    pub texture: Vec<String>,
    #[arg(long)]
    pub prompt: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "meshpref-data")]
    pub data_dir: PathBuf,
    #[arg(long, env = LISTEN_ENV, default_value = "127.0.0.1:8080")]
    pub listen: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// deterministic, guesser, logistic or shading_masked.
    #[arg(long, default_value = "logistic")]
    pub model: String,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sensitivity factor of unlit stimuli (shading_masked).
    #[arg(long)]
    pub unlit: Option<f64>,
    /// Sensitivity factor of Lambert-shaded stimuli (shading_masked).
    #[arg(long)]
    pub lambert: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Base seed; printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file, or `-` for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON Lines event log, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    /// none, shading or confidence.
    #[arg(long, default_value = "none")]
    pub group_by: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report written by `analyze --format json`, or `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated β values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub betas: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}
