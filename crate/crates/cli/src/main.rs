//! `ace`: score forecasts with the advection and convection error.

mod commands;
mod config;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ace_core::AceError;

use crate::config::SolverArgs;

#[derive(Parser)]
#[command(
    name = "ace",
    version,
    about = "Advection and convection error for gridded forecasts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against truth, relative to an observation.
    ///
    /// Each of --obs, --truth and --pred is either one .npy file or a
    /// directory of them. Directories are paired by identical file names;
    /// a name missing from any of the three is an error. A 3-D array is a
    /// stack of frames, and frame t of each role forms one case.
    ///
    /// The JSON report goes to --out and a CSV with one row per case is
    /// written beside it with a .csv extension.
    Eval {
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Report path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-case AE and CE graymaps, each scaled from 0 to
        /// its own maximum.
        #[arg(long)]
        maps: Option<PathBuf>,
        /// Flat `key = value` file of solver and metric settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "ACE_JOBS")]
        jobs: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Extract the TV-L1 flow between two fields.
    ///
    /// The flow is backward: sampling --to at x + v(x) reproduces --from at
    /// x. A pattern that moves by (dx, dy) pixels from --from to --to gets a
    /// flow of about (dx, dy). x runs along columns, y along rows.
    Flow {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long)]
        out_vx: PathBuf,
        #[arg(long)]
        out_vy: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Generate a synthetic sequence with known motion and intensity change.
    ///
    /// Writes obs.npy (frame 0), truth.npy (frame 1), sequence.npy (all
    /// frames) and oracle.txt with the true dx, dy and convection rate.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Bad input detected by the command layer rather than the library.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<AceError>() {
            return if e.is_validation() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval {
            obs,
            truth,
            pred,
            out,
            maps,
            config,
            jobs,
            solver,
        } => commands::eval(commands::EvalArgs {
            obs,
            truth,
            pred,
            out,
            maps,
            config,
            jobs,
            solver,
        }),
        Command::Flow {
            from,
            to,
            out_vx,
            out_vy,
            config,
            solver,
        } => commands::flow(&from, &to, &out_vx, &out_vy, config.as_deref(), &solver),
        Command::Synth { spec, out } => commands::synth(&spec, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
