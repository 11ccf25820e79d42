use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use ergopt_cli::commands::{self, EXIT_ERROR};
use ergopt_cli::{parse_system_file, SystemSpec};

/// Zero-temperature ergodic optimization for locally constant potentials on
/// subshifts of finite type.
#[derive(Parser)]
#[command(name = "ergopt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal average, subaction, Aubry components, barrier matrix and lambda.
    Analyze { file: PathBuf },
    /// Pressure sweep of the normalized potential, written as CSV.
    Pressure {
        file: PathBuf,
        #[arg(long)]
        beta_min: Option<f64>,
        #[arg(long)]
        beta_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        precision_bits: Option<usize>,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the empirical decay rate of P - h with lambda.
    Verify {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Recompute every quantity by brute force and compare.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        max_length: Option<usize>,
    },
}

fn load(path: &Path) -> Result<SystemSpec> {
    Ok(parse_system_file(path)?)
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<u8> {
    match cli.command {
        Command::Analyze { file } => commands::cmd_analyze(&file, &load(&file)?, out),
        Command::Pressure {
            file,
            beta_min,
            beta_max,
            steps,
            precision_bits,
            out: csv_out,
        } => {
            let mut spec = load(&file)?;
            let o = &mut spec.options;
            o.beta_min = beta_min.or(o.beta_min);
            o.beta_max = beta_max.or(o.beta_max);
            o.beta_steps = steps.or(o.beta_steps);
            o.precision_bits = precision_bits.or(o.precision_bits);
            commands::cmd_pressure(&spec, csv_out.as_deref(), out)
        }
        Command::Verify { file, tol } => {
            let mut spec = load(&file)?;
            spec.options.tol_verify = tol.or(spec.options.tol_verify);
            commands::cmd_verify(&spec, out)
        }
        Command::Oracle { file, max_length } => {
            let spec = load(&file)?;
            commands::cmd_oracle(&spec, &file.display().to_string(), max_length, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code)
}
