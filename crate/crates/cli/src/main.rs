//! `groupcast`: joint grouping and multicast beamforming via
//! semidefinite relaxation and randomized rounding.

use clap::{Parser, Subcommand};
use groupcast_cli::commands::{self, CommandError, ExperimentArgs};
use groupcast_cli::formats;
use groupcast_core::instance::Model;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "groupcast",
    version,
    about = "Joint user grouping and multicast beamforming: relaxation, rounding, bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a two-slot instance file: relaxation, rounding, ratio, bound.
    #[command(name = "solve-p1")]
    SolveP1 {
        /// Instance JSON file.
        instance: PathBuf,
        /// Rounding trials.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Trial stream seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the relaxation in solver form to this path.
        #[arg(long)]
        dump_sdp: Option<PathBuf>,
    },
    /// Solve a multi-slot instance file: relaxation, rounding, ratio, bound.
    #[command(name = "solve-p2")]
    SolveP2 {
        /// Instance JSON file.
        instance: PathBuf,
        /// Rounding trials.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Trial stream seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the relaxation in solver form to this path.
        #[arg(long)]
        dump_sdp: Option<PathBuf>,
    },
    /// Run many random realizations and persist ratio statistics.
    Experiment {
        /// Problem shape: p1 or p2.
        #[arg(long)]
        model: String,
        /// Channel field: real or complex.
        #[arg(long)]
        field: String,
        /// Users per realization.
        #[arg(long = "M")]
        m: usize,
        /// Channel dimension.
        #[arg(long = "N")]
        n: usize,
        /// Slot count (p2 only).
        #[arg(long = "Q")]
        q: Option<usize>,
        /// Per-user quotas, comma separated; one value broadcasts (p2 only).
        #[arg(long = "P", value_delimiter = ',')]
        p: Option<Vec<usize>>,
        /// Independent channel realizations.
        #[arg(long, default_value_t = 300)]
        realizations: usize,
        /// Rounding trials per realization.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Experiment seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report directory [default: $GROUPCAST_OUTPUT_DIR, then "."].
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Cap the worker pool (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Bracket the exact optimum of a small instance by enumeration.
    Oracle {
        /// Instance JSON file.
        instance: PathBuf,
        /// Randomized-upper-bound trials per subproblem.
        #[arg(long, default_value_t = 300)]
        trials: usize,
    },
    /// Print the approximation-guarantee constants for a problem shape.
    Bounds {
        /// Problem shape: p1 or p2.
        #[arg(long)]
        model: String,
        /// Users.
        #[arg(long = "M")]
        m: usize,
        /// Channel field: real or complex.
        #[arg(long, default_value = "real")]
        field: String,
        /// Slot count (p2 only).
        #[arg(long = "Q")]
        q: Option<usize>,
        /// Per-user quotas, comma separated; one value broadcasts (p2 only).
        #[arg(long = "P", value_delimiter = ',')]
        p: Option<Vec<usize>>,
    },
    /// Draw a random instance and print it in the instance file format.
    Generate {
        /// Problem shape: p1 or p2.
        #[arg(long)]
        model: String,
        /// Channel field: real or complex.
        #[arg(long)]
        field: String,
        /// Users.
        #[arg(long = "M")]
        m: usize,
        /// Channel dimension.
        #[arg(long = "N")]
        n: usize,
        /// Slot count (p2 only).
        #[arg(long = "Q")]
        q: Option<usize>,
        /// Per-user quotas, comma separated; one value broadcasts (p2 only).
        #[arg(long = "P", value_delimiter = ',')]
        p: Option<Vec<usize>>,
        /// Channel stream seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<String, CommandError> {
    match cli.command {
        Command::SolveP1 { instance, trials, seed, dump_sdp } => {
            commands::solve_command(Model::P1, &instance, trials, seed, dump_sdp.as_deref())
        }
        Command::SolveP2 { instance, trials, seed, dump_sdp } => {
            commands::solve_command(Model::P2, &instance, trials, seed, dump_sdp.as_deref())
        }
        Command::Experiment {
            model,
            field,
            m,
            n,
            q,
            p,
            realizations,
            trials,
            seed,
            output_dir,
            threads,
        } => commands::experiment_command(&ExperimentArgs {
            model,
            field,
            m,
            n,
            q,
            p,
            realizations,
            trials,
            seed,
            output_dir,
            threads,
        }),
        Command::Oracle { instance, trials } => commands::oracle_command(&instance, trials),
        Command::Bounds { model, m, field, q, p } => commands::bounds_command(
            commands::parse_model(&model)?,
            m,
            commands::parse_field(&field)?,
            q,
            p.as_deref(),
        ),
        Command::Generate { model, field, m, n, q, p, seed } => commands::generate_command(
            commands::parse_model(&model)?,
            commands::parse_field(&field)?,
            m,
            n,
            q,
            p.as_deref(),
            seed,
        ),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(stdout_text) => print!("{stdout_text}"),
        Err(e) => {
            eprint!("{}", formats::pretty(&e.payload));
            std::process::exit(e.exit_code);
        }
    }
}
