//! `borninfeld`: Born–Infeld two-charge potentials and hydrogen level shifts.

mod commands;
mod config;
mod verify;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::{ConfigError, FileConfig, GridKeys, RadialKeys, RunConfig, ToleranceKeys, KEYS_HELP, OUT_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "borninfeld",
    version,
    about = "Born-Infeld electrostatics of a proton-electron pair and its hydrogen spectrum",
    after_long_help = KEYS_HELP,
    after_help = "Exit status: 0 success, 1 usage or configuration error, 2 numerical failure, 3 I/O failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the isolated-charge potential as `s,phi` CSV.
    Single {
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// Distance(s) from the charge.
        #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
        s: Vec<f64>,
    },
    /// Compare the two axial line integrals and a loop circulation over the
    /// beta and r lists; writes audit.csv.
    Audit(RunArgs),
    /// Tabulate V(r) for every beta: variational solves (with solution
    /// files) or line integrals, depending on `method`.
    Minimize(RunArgs),
    /// Hydrogen levels and shifts for a potential table.
    Spectrum(RunArgs),
    /// Run the invariant checks at desk scale.
    Verify {
        /// Also check that this solution file round-trips.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Test hook: multiply the centrifugal term by this factor.
        #[arg(long, hide = true)]
        centrifugal_scale: Option<f64>,
    },
}

/// Flags shared by the sweep commands; each overrides the config key of the same name.
#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config file (see `--help` for the keys).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory [env: BORNINFELD_OUT].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    r: Option<Vec<f64>>,
    /// variational, path_A or path_B.
    #[arg(long)]
    method: Option<String>,
    /// Potential table for `spectrum`.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    n_rho: Option<usize>,
    #[arg(long)]
    n_z: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    extent_factor: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    r_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    r_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    ell_max: Option<u32>,
    /// Minimizer tolerance.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Line-integral tolerance.
    #[arg(long, allow_negative_numbers = true)]
    quad_tol: Option<f64>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, Failure> {
        let mut file = match &self.config {
            Some(path) => FileConfig::load(path).map_err(|e| match e {
                ConfigError::Invalid(m) => Failure::Config(m),
                ConfigError::Io(m) => Failure::Io(m),
            })?,
            None => FileConfig::default(),
        };
        file.overlay(FileConfig {
            beta: self.beta,
            r: self.r,
            method: self.method,
            table: self.table,
            output_dir: self.out,
            threads: self.threads,
            grid: GridKeys {
                n_rho: self.n_rho,
                n_z: self.n_z,
                extent_factor: self.extent_factor,
            },
            radial: RadialKeys {
                r_min: self.r_min,
                r_max: self.r_max,
                points: self.points,
                n_max: self.n_max,
                ell_max: self.ell_max,
            },
            tolerances: ToleranceKeys {
                minimizer: self.tol,
                max_iterations: self.max_iterations,
                quadrature: self.quad_tol,
            },
        });
        let env = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        RunConfig::resolve(&file, env).map_err(Failure::Config)
    }
}

fn print(text: &str) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| Failure::Io(format!("cannot write to standard output: {e}")))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Single { beta, s } => print(&commands::single(beta, &s)?),
        Command::Audit(args) => {
            let cfg = args.resolve()?;
            let (csv, outcome) = commands::audit(&cfg);
            print(&csv)?;
            outcome
        }
        Command::Minimize(args) => print(&commands::minimize(&args.resolve()?)?),
        Command::Spectrum(args) => print(&commands::spectrum(&args.resolve()?)?),
        Command::Verify {
            solution,
            centrifugal_scale,
        } => {
            let options = verify::VerifyOptions {
                centrifugal_scale,
                solution,
            };
            let mut printed = Ok(());
            let checks = verify::run(&options, |c| {
                if printed.is_ok() {
                    printed = print(&format!("{}\n", c.line()));
                }
            });
            printed?;
            let failed = checks.iter().filter(|c| c.status == verify::Status::Fail).count();
            if failed > 0 {
                Err(Failure::Numerical(format!("{failed} check(s) failed")))
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
