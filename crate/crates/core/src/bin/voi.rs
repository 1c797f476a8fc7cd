use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use latent_voi::figures::{reproduce_figure, Figure, FigureSet};
use latent_voi::scenario::{parse_scenario, Units};
use latent_voi::trace::{provenance, run_trace, write_csv};
use latent_voi::verify::{exit_code, verify, VerifyOptions, DEFAULT_SAMPLES};
use latent_voi::VoiError;

/// Value of information for Ornstein-Uhlenbeck status updates.
#[derive(Parser)]
#[command(name = "voi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario over its time grid and write a CSV trace.
    Eval {
        scenario: PathBuf,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report information in bits instead of nats.
        #[arg(long)]
        bits: bool,
    },
    /// Write the data files of one figure.
    Figure {
        /// fig4, fig5, fig6 or fig7.
        name: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Read figure scenarios from this directory instead of the built-in copies.
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
    },
    /// Run the oracle checks on a scenario and print a JSON report.
    Verify {
        scenario: PathBuf,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Master seed (default: the scenario's, else 0).
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<u8, VoiError> {
    match cli.command {
        Command::Eval { scenario, out, bits } => {
            let mut s = parse_scenario(&scenario)?;
            if bits {
                s.units = Units::Bits;
            }
            let trace = run_trace(&s)?;
            let header = provenance(&s, s.units);
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_csv(&trace, s.units, &header, &mut buf)?;
                    std::fs::write(&path, buf)
                        .map_err(|e| VoiError::Io(format!("{}: {e}", path.display())))?;
                }
                None => write_csv(&trace, s.units, &header, std::io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Figure {
            name,
            out_dir,
            scenario_dir,
        } => {
            let figure: Figure = name.parse()?;
            let set = scenario_dir.map(FigureSet::from_dir).unwrap_or_default();
            for path in reproduce_figure(figure, &set, &out_dir)? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Verify {
            scenario,
            samples,
            seed,
        } => {
            let s = parse_scenario(&scenario)?;
            let options = VerifyOptions {
                samples,
                seed,
                ..VerifyOptions::default()
            };
            let report = verify(&s, &options)?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", report.to_json())?;
            Ok(if report.passed { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
