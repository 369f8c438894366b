//! The `depmatch` command line.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or input error.

mod artifacts;
mod commands;
mod config;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use artifacts::{sha256_hex, DirLock};
pub use config::{PathsConfig, PipelineConfig, DEFAULT_SEED};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{what} not found: {}{hint}", path.display())]
    Missing {
        what: String,
        path: PathBuf,
        /// Suggested fix, with leading separator; may be empty.
        hint: String,
    },

    #[error("artifact directory {} is locked by another process", .0.display())]
    Locked(PathBuf),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Missing { .. } => EXIT_USAGE,
            CliError::Locked(_) => EXIT_INTERNAL,
            CliError::Core(e) => match e {
                Error::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => EXIT_USAGE,
                Error::Io { .. } | Error::Numerical(_) | Error::External(_) => EXIT_INTERNAL,
                Error::Parse { .. }
                | Error::Validation(_)
                | Error::Config(_)
                | Error::Format(_) => EXIT_USAGE,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "depmatch",
    version,
    about = "Link vulnerability descriptions to the libraries they affect"
)]
pub struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every random choice; recorded in each manifest.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,

    /// Artifact directory (overrides the configured one).
    #[arg(long, global = true)]
    pub artifacts: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean the catalog and vulnerabilities and build the entity vocabulary.
    Ingest(IngestArgs),
    /// Build the inverted index over ingested library documents.
    Index,
    /// Train the coherence scorer on the training split.
    Train,
    /// Rank libraries for one vulnerability description.
    Query(QueryArgs),
    /// Score the test split and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Screening recall and end-to-end F1 over entity weights and pool sizes.
    Sweep(SweepArgs),
    /// Write a synthetic catalog and labeled vulnerabilities.
    GenFixture(GenFixtureArgs),
    /// Answer line-delimited JSON score requests on stdin with the trained model.
    ServeScorer,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Library catalog (JSONL or JSON array).
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Labeled vulnerabilities (JSONL or JSON array).
    #[arg(long)]
    pub vulns: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Vulnerability description.
    #[arg(conflicts_with = "cve", required_unless_present = "cve")]
    pub text: Option<String>,
    /// Look the description up among ingested vulnerabilities.
    #[arg(long)]
    pub cve: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Report the stage-one ranking; no model needed.
    #[arg(long)]
    pub screener_only: bool,
    /// Write every candidate score (JSONL) to this file.
    #[arg(long)]
    pub dump_scores: Option<PathBuf>,
    /// Rerank with an external scorer process instead of the trained model.
    #[arg(long, conflicts_with = "screener_only")]
    pub scorer_cmd: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Add zero-shot and full-shot sub-reports.
    #[arg(long)]
    pub zero_shot_split: bool,
    #[arg(long)]
    pub screener_only: bool,
    #[arg(long, value_delimiter = ',', default_values_t = crate::eval::DEFAULT_KS)]
    pub ks: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("1"), String::from("4"), String::from("entity-only")])]
    pub weights: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128, 256, 512, 1024])]
    pub candidate_nums: Vec<usize>,
    /// Skip reranking; F1 columns then describe the screener ranking.
    #[arg(long)]
    pub screener_only: bool,
    /// Sweep over every ingested vulnerability instead of the test split.
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Args)]
pub struct GenFixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub libraries: usize,
    #[arg(long, default_value_t = 40)]
    pub vulnerabilities: usize,
    /// Extra unrelated libraries appended to the catalog.
    #[arg(long, default_value_t = 0)]
    pub distractors: usize,
}

/// Parses `args` (program name first) and runs the command on real stdio.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match commands::dispatch(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_mapping() {
        let nf = CliError::Core(Error::Io {
            path: "x".into(),
            source: io::Error::from(io::ErrorKind::NotFound),
        });
        assert_eq!(nf.exit_code(), EXIT_USAGE);
        assert_eq!(
            CliError::Core(Error::Numerical("nan".into())).exit_code(),
            EXIT_INTERNAL
        );
        assert_eq!(
            CliError::Core(Error::Config("x".into())).exit_code(),
            EXIT_USAGE
        );
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(
            run_with(["depmatch", "frobnicate"], &mut o, &mut e),
            EXIT_USAGE
        );
        assert_eq!(run_with(["depmatch", "query"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run_with(["depmatch", "--help"], &mut o, &mut e), EXIT_OK);
    }
}
