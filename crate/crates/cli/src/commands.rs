use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use borninfeld::extraction::{extract_path, extract_variational, Method, RadialPotential};
use borninfeld::fields::{circulation, exact_born_potential, AxialPath, Path as LinePath};
use borninfeld::minimizer::{build_grid, minimize_with, write_solution, MinimizerOptions, Progress};
use borninfeld::schrodinger::RadialSolver;
use borninfeld::{DipoleConfig, Error};
use rayon::prelude::*;

use crate::config::RunConfig;

/// How a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        fn io(e: &Error) -> bool {
            match e {
                Error::Io(_) => true,
                Error::Sample { source, .. } => io(source),
                _ => false,
            }
        }
        let message = e.to_string();
        if io(&e) {
            Failure::Io(message)
        } else if e.is_numerical() {
            Failure::Numerical(message)
        } else {
            Failure::Config(message)
        }
    }
}

pub type Outcome = Result<(), Failure>;

fn io_failure(what: &str, path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("cannot {what} {}: {e}", path.display()))
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure("create", dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure("write", path, e))
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::Config(format!("cannot start worker pool: {e}")))
}

/// `s,phi` rows of the isolated-charge potential.
pub fn single(beta: f64, s: &[f64]) -> Result<String, Failure> {
    let mut out = String::from("s,phi\n");
    for &x in s {
        let phi = exact_born_potential(x, beta)?;
        let _ = writeln!(out, "{x},{phi}");
    }
    Ok(out)
}

/// Loop used for the audit's circulation column: the meridian rectangle
/// `ρ ∈ [r/20, r]`, `z ∈ [0, r]`, beside the proton.
pub fn audit_loop(r: f64) -> Result<LinePath, Error> {
    LinePath::meridian_rectangle((r / 20.0, r), (0.0, r))
}

fn audit_row(beta: f64, r: f64, tol: f64) -> Result<[f64; 4], Error> {
    let cfg = DipoleConfig::new(r, beta)?;
    let (_, a) = extract_path(&cfg, AxialPath::A, tol)?;
    let (_, b) = extract_path(&cfg, AxialPath::B, tol)?;
    let c = circulation(&audit_loop(r)?, &cfg, tol)?;
    Ok([a, b, a - b, c])
}

/// Writes `audit.csv` and returns its text. Failed rows keep their place
/// with empty value fields; any failure makes the outcome numerical.
pub fn audit(cfg: &RunConfig) -> (String, Outcome) {
    if let Err(m) = cfg.require_sweep() {
        return (String::new(), Err(Failure::Config(m)));
    }
    let points: Vec<(f64, f64)> = cfg
        .beta
        .iter()
        .flat_map(|&b| cfg.r.iter().map(move |&r| (b, r)))
        .collect();
    let workers = match pool(cfg.threads) {
        Ok(p) => p,
        Err(f) => return (String::new(), Err(f)),
    };
    let rows: Vec<Result<[f64; 4], Error>> = workers.install(|| {
        points
            .par_iter()
            .map(|&(b, r)| audit_row(b, r, cfg.quadrature_tolerance))
            .collect()
    });
    let mut out = String::from("beta,r,V_A,V_B,delta,circulation\n");
    let mut failed = 0;
    for (&(b, r), row) in points.iter().zip(&rows) {
        match row {
            Ok(v) => {
                let _ = writeln!(out, "{b},{r},{:.17e},{:.17e},{:.17e},{:.17e}", v[0], v[1], v[2], v[3]);
            }
            Err(e) => {
                failed += 1;
                eprintln!("audit: beta={b} r={r}: {e}");
                let _ = writeln!(out, "{b},{r},,,,");
            }
        }
    }
    let written = prepare_dir(&cfg.output_dir).and_then(|_| write_file(&cfg.output_dir.join("audit.csv"), &out));
    let outcome = match written {
        Err(f) => Err(f),
        Ok(()) if failed > 0 => Err(Failure::Numerical(format!("{failed} audit row(s) failed"))),
        Ok(()) => Ok(()),
    };
    (out, outcome)
}

pub fn solution_file(dir: &Path, beta: f64, r: f64) -> PathBuf {
    dir.join(format!("solution_beta{beta}_r{r}.txt"))
}

pub fn potential_file(dir: &Path, beta: f64, method: Method) -> PathBuf {
    dir.join(format!("potential_beta{beta}_{method}.csv"))
}

pub fn spectrum_file(dir: &Path, beta: f64, method: Method) -> PathBuf {
    dir.join(format!("spectrum_beta{beta}_{method}.csv"))
}

/// Progress lines go to standard error every this many iterations.
const PROGRESS_EVERY: usize = 10;

fn variational_point(cfg: &RunConfig, beta: f64, r: f64) -> Result<(f64, f64), Failure> {
    let dipole = DipoleConfig::new(r, beta)?;
    let grid = build_grid(&dipole, cfg.n_rho, cfg.n_z, cfg.extent_factor)?;
    let options = MinimizerOptions {
        tolerance: cfg.tolerance,
        max_iterations: cfg.max_iterations,
        ..MinimizerOptions::default()
    };
    let mut report = |p: &Progress| {
        if p.iteration % PROGRESS_EVERY == 0 {
            eprintln!(
                "minimize beta={beta} r={r}: iteration {} gradient {:.3e} action {:.12e}",
                p.iteration, p.gradient_norm, p.action
            );
        }
    };
    let sol = minimize_with(&grid, &dipole, &options, Some(&mut report))?;
    let path = solution_file(&cfg.output_dir, beta, r);
    write_solution(&sol, &path)?;
    let sample = extract_variational(&sol)?;
    let rep = sol.report();
    eprintln!(
        "minimize beta={beta} r={r}: done after {} iterations, gradient {:.3e}, V = {:.12e}",
        rep.iterations, rep.gradient_norm, sample.1
    );
    Ok(sample)
}

/// Tabulates `V_β(r)` for every `β`, writing solution files (variational
/// method only) and one table per `β`. Returns the tables concatenated
/// under a single header.
pub fn minimize(cfg: &RunConfig) -> Result<String, Failure> {
    cfg.require_sweep().map_err(Failure::Config)?;
    prepare_dir(&cfg.output_dir)?;
    let points: Vec<(f64, f64)> = cfg
        .beta
        .iter()
        .flat_map(|&b| cfg.r.iter().map(move |&r| (b, r)))
        .collect();
    let workers = pool(cfg.threads)?;
    let samples: Vec<(f64, f64)> = workers.install(|| {
        points
            .par_iter()
            .map(|&(b, r)| match cfg.method {
                Method::Variational => variational_point(cfg, b, r),
                Method::PathA => Ok(extract_path(&DipoleConfig::new(r, b)?, AxialPath::A, cfg.quadrature_tolerance)?),
                Method::PathB => Ok(extract_path(&DipoleConfig::new(r, b)?, AxialPath::B, cfg.quadrature_tolerance)?),
            })
            .collect::<Result<_, _>>()
    })?;
    let mut all = String::from("r,V,beta,method\n");
    for (k, &beta) in cfg.beta.iter().enumerate() {
        let chunk = &samples[k * cfg.r.len()..(k + 1) * cfg.r.len()];
        let table = RadialPotential::new(chunk, beta, cfg.method)?;
        let csv = table.to_csv();
        write_file(&potential_file(&cfg.output_dir, beta, cfg.method), &csv)?;
        all.extend(csv.lines().skip(1).map(|l| format!("{l}\n")));
    }
    Ok(all)
}

/// Levels of the potential table named by `cfg.table`.
pub fn spectrum(cfg: &RunConfig) -> Result<String, Failure> {
    let path = cfg
        .table
        .as_ref()
        .ok_or_else(|| Failure::Config("key `table` is required (config file or --table)".into()))?;
    let table = RadialPotential::read_csv(path)?;
    cfg.mesh.validate()?;
    let result = RadialSolver::new(cfg.mesh).spectrum(&table, cfg.n_max, cfg.ell_max)?;
    let csv = result.to_csv();
    prepare_dir(&cfg.output_dir)?;
    write_file(&spectrum_file(&cfg.output_dir, result.beta, result.method), &csv)?;
    Ok(csv)
}
