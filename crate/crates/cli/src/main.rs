use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use micromaser_cli::config::RunConfig;
use micromaser_cli::figure::{cmd_figure, DEFAULT_FIGURE_COLLISIONS};
use micromaser_cli::verify::{SteadyStateArgs, Suite};
use micromaser_cli::{cmd_run, cmd_verify, CliError};

const RUN_AFTER_HELP: &str = "\
Output columns (CSV header, and the keys of each JSON record):
  k           collision index, starting at 1
  energy      mean photon number <N>
  purity      Tr(rho^2)
  fano        variance / mean of the photon number; empty (CSV) or null (JSON) at the vacuum
  ergotropy   energy minus the energy of the passive state
  trace_leak  cumulative population lost at the Fock truncation
  n_max       truncation in use at this collision

The JSON document is {\"summary\": {...}, \"records\": [...]}. Summary keys:
classification, steady_window, collisions_run, cumulative_leak, n_max_final,
final_observables, params, theta, trapping, thresholds, thresholds_note.

Exit codes: 0 ok, 2 configuration error, 3 truncation overflow,
4 verification failure, 1 other errors.";

#[derive(Debug, Parser)]
#[command(name = "micromaser", version, about = "Micromaser quantum battery charged by a stream of qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one charging protocol from the vacuum and write its trajectory.
    #[command(after_help = RUN_AFTER_HELP)]
    Run(RunConfig),
    /// Write the data series of one figure plus a manifest.
    Figure {
        /// Figure number.
        #[arg(value_parser = clap::value_parser!(u8).range(1..=6))]
        id: u8,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FIGURE_COLLISIONS)]
        collisions: usize,
        #[arg(long, default_value_t = 1, value_name = "N")]
        decimate: usize,
        /// Series computed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run self-test suites and report residuals.
    Verify {
        /// Suites to run; all of them if none are given.
        #[arg(value_enum)]
        suites: Vec<Suite>,
        /// Qubit ground-state probability for the steady_states suite.
        #[arg(long, default_value_t = 0.25)]
        q: f64,
        /// Trap parameter m (theta = pi / sqrt(m)) for the steady_states suite.
        #[arg(long, default_value_t = 15)]
        m: u64,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(config) => cmd_run(config).map(|_| ()),
        Command::Figure {
            id,
            out,
            collisions,
            decimate,
            jobs,
        } => {
            let manifest = cmd_figure(id, &out, collisions, decimate, jobs)?;
            for s in &manifest.series {
                println!("{} {} {}", s.file, s.label, s.classification);
            }
            Ok(())
        }
        Command::Verify { suites, q, m } => {
            let suites = if suites.is_empty() {
                vec![Suite::Oracles, Suite::Invariants, Suite::SteadyStates]
            } else {
                suites
            };
            cmd_verify(&suites, SteadyStateArgs { q, m })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
