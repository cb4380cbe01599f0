//! Batch commands over `<root>/<sequence>/<frame>.png` mask trees.
//!
//! Each `cmd_*` function takes a resolved [`RunConfig`] and a writer for its
//! human-readable summary, so the same code backs the binary and the tests.
//! Work is split per frame across a pool of `worker_count` threads; results
//! are collected back in frame order, so the thread count never changes an
//! output byte.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad arguments or paths,
//! 3 malformed data.

pub mod bench;
mod commands;
mod config;
pub mod fixtures;
pub mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::metrics::AggregationOrder;
use crate::morphology::SeShape;

pub use bench::{cmd_bench, BenchOptions};
pub use commands::{cmd_evaluate, cmd_fuse, cmd_postprocess, cmd_transform, TransformOptions};
pub use config::{default_workers, RunConfig};
pub use fixtures::{cmd_make_fixtures, FixtureOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Internal = 1,
    BadArguments = 2,
    MalformedData = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    pub fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        CliError {
            status,
            message: message.into(),
        }
    }

    pub fn bad_args(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::BadArguments, message)
    }

    pub fn bad_data(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::MalformedData, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::Internal, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Errors met while reading inputs are data problems; the rest are ours.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Manifest { .. }
            | Error::Config(_)
            | Error::InvalidTransform(_)
            | Error::InvalidSchedule(_)
            | Error::NonCanonicalFirstMember(_) => ExitStatus::BadArguments,
            Error::Io { .. } | Error::Encode { .. } => ExitStatus::Internal,
            _ => ExitStatus::MalformedData,
        };
        CliError::new(status, e.to_string())
    }
}

pub(crate) fn read_error(e: Error) -> CliError {
    CliError::bad_data(e.to_string())
}

pub(crate) fn write_error(e: Error) -> CliError {
    CliError::internal(e.to_string())
}

pub(crate) fn out_err(e: io::Error) -> CliError {
    CliError::internal(format!("writing output: {e}"))
}

fn parse_bool_flag(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

/// Flags shared by every subcommand. Unused ones are ignored.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Key-value (TOML) config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input mask root (repeatable where a command takes several).
    #[arg(long)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Ground-truth mask root.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Fusion manifest: one `<transform> <path>` member per line.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Where to write the JSON score report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Structuring element radius; 0 disables gap filling.
    #[arg(long)]
    pub kernel_radius: Option<usize>,
    /// square or disk.
    #[arg(long, value_parser = |s: &str| s.parse::<SeShape>().map_err(|e| e.to_string()))]
    pub se_shape: Option<SeShape>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = parse_bool_flag)]
    pub fill_background_only: Option<bool>,
    /// Comma-separated scale factors, starting at 1.
    #[arg(long)]
    pub scales: Option<String>,
    #[arg(long)]
    pub tolerance_fraction: Option<f64>,
    #[arg(long)]
    pub min_tolerance_px: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = parse_bool_flag)]
    pub exclude_first_frame: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_parser = parse_bool_flag)]
    pub exclude_last_frame: Option<bool>,
    /// hierarchical or pooled.
    #[arg(long, value_parser = parse_aggregation)]
    pub aggregation: Option<AggregationOrder>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_aggregation(s: &str) -> Result<AggregationOrder, String> {
    match s {
        "hierarchical" => Ok(AggregationOrder::Hierarchical),
        "pooled" => Ok(AggregationOrder::Pooled),
        _ => Err(format!("expected hierarchical or pooled, got `{s}`")),
    }
}

#[derive(Parser, Debug)]
#[command(name = "maskpost", version, about = "Gap filling, vote fusion and J/F evaluation for VOS mask trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fill background gaps between adjacent objects.
    Postprocess(CommonArgs),
    /// Plurality-vote the members listed in a manifest.
    Fuse(CommonArgs),
    /// Score predictions (--input) against ground truth (--gt).
    Evaluate(CommonArgs),
    /// Apply or undo a test-time augmentation on a tree.
    Transform {
        #[command(flatten)]
        common: CommonArgs,
        /// id, rot90, rot180, rot270, hflip or scale:<factor>.
        #[arg(long)]
        transform: String,
        #[arg(long)]
        inverse: bool,
        /// Original WIDTHxHEIGHT, used when undoing a rescale.
        #[arg(long)]
        original_size: Option<String>,
        /// Treat inputs as RGB frames (bilinear resize) instead of masks.
        #[arg(long)]
        rgb: bool,
    },
    /// Write seeded synthetic sequences with ground truth.
    MakeFixtures {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 4)]
        sequences: usize,
        #[arg(long, default_value_t = 8)]
        frames: usize,
        #[arg(long, default_value_t = 96)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
    },
    /// Time the dilation kernels.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1920)]
        width: usize,
        #[arg(long, default_value_t = 1080)]
        height: usize,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
    },
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Postprocess(c) => cmd_postprocess(&RunConfig::resolve(&c)?, out),
        Command::Fuse(c) => cmd_fuse(&RunConfig::resolve(&c)?, out),
        Command::Evaluate(c) => cmd_evaluate(&RunConfig::resolve(&c)?, out),
        Command::Transform {
            common,
            transform,
            inverse,
            original_size,
            rgb,
        } => {
            let opts = TransformOptions::parse(&transform, inverse, original_size.as_deref(), rgb)?;
            cmd_transform(&RunConfig::resolve(&common)?, &opts, out)
        }
        Command::MakeFixtures {
            common,
            sequences,
            frames,
            width,
            height,
        } => {
            let opts = FixtureOptions {
                sequences,
                frames,
                width,
                height,
            };
            cmd_make_fixtures(&RunConfig::resolve(&common)?, &opts, out)
        }
        Command::Bench {
            common,
            width,
            height,
            iterations,
        } => {
            let opts = BenchOptions {
                width,
                height,
                iterations,
            };
            cmd_bench(&RunConfig::resolve(&common)?, &opts, out)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::BadArguments.code()
            } else {
                ExitStatus::Success.code()
            };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(()) => ExitStatus::Success.code(),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.status.code()
        }
    }
}
