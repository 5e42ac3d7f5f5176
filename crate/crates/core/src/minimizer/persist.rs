//! Plain-text solution files.
//!
//! ```text
//! # borninfeld-solution v1
//! # r=2 beta=0.3 n_rho=129 n_z=129 rho_max=20 z_max=21.333333333333332
//! 0.0000000000000000e0
//! ...
//! ```
//!
//! One node value per line, `z` outer and `ρ` inner, 17 significant digits,
//! so reading back reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{gradient_norm, residual_of, ConvergenceReport, PotentialSolution, Problem, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::fields::DipoleConfig;
use crate::minimizer::AxisymGrid;

const MAGIC: &str = "# borninfeld-solution v1";

pub fn write_solution(sol: &PotentialSolution, path: &Path) -> Result<()> {
    let g = sol.grid();
    let mut out = String::with_capacity(26 * g.len() + 128);
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(
        out,
        "# r={} beta={} n_rho={} n_z={} rho_max={} z_max={}",
        sol.config().separation(),
        sol.config().beta(),
        g.n_rho(),
        g.n_z(),
        g.rho_max(),
        g.z_max()
    );
    for v in sol.phi() {
        let _ = writeln!(out, "{v:.16e}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a solution file. The convergence report is recomputed from the
/// stored values (iterations and wall time are zero).
pub fn read_solution(path: &Path) -> Result<PotentialSolution> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad(1, format!("expected header `{MAGIC}`")));
    }
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| bad(2, "missing parameter line".into()))?;

    let keys = ["r", "beta", "n_rho", "n_z", "rho_max", "z_max"];
    let mut vals = [""; 6];
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != keys.len() {
        return Err(bad(2, format!("expected {} parameters, found {}", keys.len(), fields.len())));
    }
    for (slot, (field, key)) in vals.iter_mut().zip(fields.iter().zip(keys)) {
        *slot = field
            .strip_prefix(key)
            .and_then(|f| f.strip_prefix('='))
            .ok_or_else(|| bad(2, format!("expected `{key}=`, found `{field}`")))?;
    }
    let real = |k: usize| -> Result<f64> {
        vals[k]
            .parse()
            .map_err(|_| bad(2, format!("{} is not a number: `{}`", keys[k], vals[k])))
    };
    let count = |k: usize| -> Result<usize> {
        vals[k]
            .parse()
            .map_err(|_| bad(2, format!("{} is not a count: `{}`", keys[k], vals[k])))
    };
    let cfg = DipoleConfig::new(real(0)?, real(1)?).map_err(|e| bad(2, e.to_string()))?;
    let grid = AxisymGrid::from_extents(&cfg, count(2)?, count(3)?, real(4)?, real(5)?)
        .map_err(|e| bad(2, e.to_string()))?;

    let mut phi = Vec::with_capacity(grid.len());
    for (k, line) in lines.enumerate() {
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| bad(k + 3, format!("not a number: `{line}`")))?;
        if !v.is_finite() {
            return Err(bad(k + 3, format!("non-finite value `{line}`")));
        }
        phi.push(v);
    }
    if phi.len() != grid.len() {
        return Err(bad(
            phi.len() + 3,
            format!("expected {} node values, found {}", grid.len(), phi.len()),
        ));
    }

    let problem = Problem::new(&grid, cfg.beta(), 2.0);
    let action = problem.action(&phi).map_err(|e| bad(0, e.to_string()))?;
    let norm = gradient_norm(&problem, &phi)?;
    let report = ConvergenceReport {
        iterations: 0,
        gradient_norm: norm,
        action,
        el_residual: residual_of(&problem, &phi)?,
        wall_time: 0.0,
        tolerance: DEFAULT_TOLERANCE,
        converged: norm <= DEFAULT_TOLERANCE,
    };
    Ok(PotentialSolution {
        grid,
        cfg,
        phi,
        report,
    })
}
