//! `qlink`: config-driven front end for the link simulator.
//!
//! Exit codes: 0 success, 2 invalid spec, 3 non-convergence, 4 I/O error,
//! 1 any other failure.

mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use run::{describe, run_experiment, RunError};
use spec::{validate_spec, Mode, Overrides};

#[derive(Parser)]
#[command(name = "qlink", version, about = "Atom-BEC entanglement link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Three-setting singlet-fidelity witness.
    Witness(Common),
    /// Nine-setting maximum-likelihood tomography.
    Tomography(Common),
    /// Fidelity versus storage time with a Gaussian decay fit.
    #[command(name = "decay-curve", alias = "decay_curve")]
    DecayCurve(Common),
    /// Efficiency chain and acquisition time.
    Budget(Common),
    /// Hanbury Brown-Twiss g2(0) of the source.
    G2(Common),
    /// Run whichever mode the config file names.
    Run(Common),
    /// Parse and validate a config, print the resolved spec, run nothing.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<u64>,
    /// Output directory (default: $QLINK_OUTPUT_DIR, else ./qlink-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

const EXIT_INVALID: u8 = 2;
const EXIT_NON_CONVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common, check_only) = match cli.command {
        Command::Witness(c) => (Some(Mode::Witness), c, false),
        Command::Tomography(c) => (Some(Mode::Tomography), c, false),
        Command::DecayCurve(c) => (Some(Mode::DecayCurve), c, false),
        Command::Budget(c) => (Some(Mode::Budget), c, false),
        Command::G2(c) => (Some(Mode::G2), c, false),
        Command::Run(c) => (None, c, false),
        Command::Check(c) => (None, c, true),
    };

    let text = match &common.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_IO);
            }
        },
        None => String::new(),
    };
    let overrides = Overrides { mode, seed: common.seed, shots: common.shots, output_dir: common.out };
    let spec = match validate_spec(&text, &overrides) {
        Ok(s) => s,
        Err(errors) => {
            for e in &errors.0 {
                eprintln!("error: {e}");
            }
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if check_only {
        println!("{}", serde_json::to_string_pretty(&spec).expect("spec serializes"));
        println!("spec_hash={}", spec.hash());
        return ExitCode::SUCCESS;
    }

    match run_experiment(&spec) {
        Ok(paths) => {
            println!("{}", describe(&paths));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                RunError::Io { .. } | RunError::Core(qlink::Error::Io(_)) => EXIT_IO,
                RunError::Core(qlink::Error::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
                RunError::Core(qlink::Error::InvalidParameter { .. }) => EXIT_INVALID,
                RunError::Core(_) => 1,
            })
        }
    }
}
