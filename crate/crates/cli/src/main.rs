//! Command-line front end: run sessions from config files, print the
//! six-state transform table, and run the invariant self-checks.
//!
//! Exit codes: 0 on success, 1 when an invariant fails or the session
//! cannot produce a key error rate, 2 on configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use poltrack::config::{load_config, parse_overrides};
use poltrack::report::{
    render_transform_table, transform_table, transform_table_csv, write_outputs,
    DEFAULT_TABLE_ANGLES,
};
use poltrack::session::{run_session, SessionError};
use poltrack::tracking::VerdetMedium;
use poltrack::verify::{all_passed, run_invariant_checks};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "poltrack",
    version,
    about = "Polarization-tracked key distribution over a rotating channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a session and write pulses.csv and summary.json.
    Run {
        /// Session config file (flat `section.key = value` lines).
        #[arg(long)]
        config: PathBuf,
        /// Overrides run.seed from the file and any KEY=VALUE override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, created if absent.
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
        /// KEY=VALUE pairs applied on top of the config file.
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print where each named state lands under both tracked modes.
    Table {
        /// Emit CSV with full Jones vectors instead of the text table.
        #[arg(long)]
        csv: bool,
        /// Channel angles to tabulate, radians (defaults to 0.4, 1.1, 2.7).
        #[arg(long = "theta", value_name = "RADIANS")]
        thetas: Vec<f64>,
    },
    /// Run the algebraic invariant self-checks.
    Verify,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            output_dir,
            overrides,
        } => run_command(&config, seed, &output_dir, &overrides),
        Command::Table { csv, thetas } => table_command(csv, &thetas),
        Command::Verify => verify_command(),
    }
}

fn run_command(
    config_path: &Path,
    seed: Option<u64>,
    output_dir: &Path,
    override_args: &[String],
) -> ExitCode {
    let overrides = match parse_overrides(override_args) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut config = match load_config(config_path, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }

    let result = match run_session(&config) {
        Ok(r) => r,
        Err(SessionError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };

    let (csv_path, json_path) = match write_outputs(output_dir, &config, &result) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };

    println!("wrote {} and {}", csv_path.display(), json_path.display());
    let s = &result.stats;
    match s.qber_overall {
        Some(q) => {
            println!(
                "pulses {} received {} sifted {} qber {:.6}",
                s.pulses, s.received, s.sifted, q
            );
            ExitCode::SUCCESS
        }
        None => {
            eprintln!("error: no sifted bits, cannot estimate an error rate");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn table_command(csv: bool, thetas: &[f64]) -> ExitCode {
    let thetas = if thetas.is_empty() {
        DEFAULT_TABLE_ANGLES.to_vec()
    } else {
        thetas.to_vec()
    };
    // Unit-strength reference medium: the arrival map is what the table is
    // about, not a particular rod.
    let medium = VerdetMedium::new(1.0, 1.0).expect("unit medium is valid");
    let entries = match transform_table(&thetas, &medium) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if csv {
        print!("{}", transform_table_csv(&entries));
    } else {
        print!("{}", render_transform_table(&entries));
    }
    ExitCode::SUCCESS
}

fn verify_command() -> ExitCode {
    let reports = run_invariant_checks();
    for r in &reports {
        if r.passed {
            println!("PASS {}", r.name);
        } else {
            println!("FAIL {}: {}", r.name, r.detail);
        }
    }
    if all_passed(&reports) {
        println!("all {} checks passed", reports.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}
