//! Command-line front end for the micromaser battery simulator.

pub mod config;
pub mod figure;
pub mod output;
pub mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use micromaser::{run_protocol, Classification};

use config::{Format, RunConfig};
use output::{write_csv, write_json, write_summary, Summary};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_OVERFLOW: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] micromaser::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("truncation overflow: the state needs more than {n_max} Fock levels (data written up to collision {collisions})")]
    TruncationOverflow { n_max: usize, collisions: usize },
    #[error("{failed} verification check(s) failed")]
    Verification { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(micromaser::Error::InvalidParameter { .. }) => EXIT_CONFIG,
            CliError::TruncationOverflow { .. } => EXIT_OVERFLOW,
            CliError::Verification { .. } => EXIT_VERIFICATION,
            _ => 1,
        }
    }
}

/// Sidecar file holding the run summary next to a CSV trajectory.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".summary.json");
    PathBuf::from(name)
}

/// Runs one protocol and writes its trajectory.
///
/// CSV goes to `--out` with the summary in `<out>.summary.json` and on
/// standard output; without `--out` the CSV goes to standard output and the
/// summary to standard error. JSON output embeds the summary.
pub fn cmd_run(config: RunConfig) -> Result<Summary, CliError> {
    let run = config.with_file()?.resolve()?;
    let options = run.options;
    let (records, outcome) = run_protocol(&run.params, &options)?;
    let summary = Summary::new(&run.params, run.theta, &options, &records, &outcome);

    match (&run.format, &run.out) {
        (Format::Csv, Some(path)) => {
            write_csv(BufWriter::new(File::create(path)?), &records)?;
            write_summary(BufWriter::new(File::create(summary_path(path))?), &summary)?;
            write_summary(io::stdout().lock(), &summary)?;
        }
        (Format::Csv, None) => {
            write_csv(io::stdout().lock(), &records)?;
            write_summary(io::stderr().lock(), &summary)?;
        }
        (Format::Json, Some(path)) => write_json(BufWriter::new(File::create(path)?), &summary, &records)?,
        (Format::Json, None) => write_json(io::stdout().lock(), &summary, &records)?,
    }

    if outcome.classification == Classification::TruncationOverflow {
        return Err(CliError::TruncationOverflow {
            n_max: outcome.n_max_final,
            collisions: outcome.collisions_run,
        });
    }
    Ok(summary)
}

pub fn cmd_verify(suites: &[verify::Suite], steady: verify::SteadyStateArgs) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    let mut failed = 0;
    for &suite in suites {
        for line in verify::run_suite(suite, steady)? {
            writeln!(out, "{line}")?;
            failed += usize::from(!line.passes());
        }
    }
    if failed > 0 {
        return Err(CliError::Verification { failed });
    }
    Ok(())
}
