//! Variational solve of the two-charge problem on the axisymmetric quadrant.
//!
//! The rescaled action `Ã = ∫ [(1 − √(1 − β⁴|∇φ|²))/β⁴] − 4π(δ_p − δ_e)φ`
//! is minimized over node values by a damped Newton-type iteration. The
//! half-space `z < 0` is folded in through antisymmetry, which doubles both
//! the field energy and the source term.
//!
//! Boundary conditions: `φ = 0` on `z = 0`, natural (zero flux) on the axis,
//! and the analytic Coulomb pair on the outer row and column.

mod band;
mod functional;
mod grid;
mod persist;
mod poisson;

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{exact_born_potential, DipoleConfig};
pub use functional::SATURATION_MARGIN;
use functional::Problem;
pub use grid::{build_grid, AxisymGrid, MIN_EXTENT, MIN_NODES};
pub use persist::{read_solution, write_solution};
use poisson::PoissonSolver;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Saturation level the feasibility repair aims for.
const REPAIR_TARGET: f64 = 1.0 - 1e-3;
const ARMIJO: f64 = 1e-4;
/// Iteration cap of the dual warm start.
const DUAL_ITERATIONS: usize = 200;

/// Summary of a minimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// `max |H⁻¹ g|` over free nodes, `H` being the Hessian of the action:
    /// the size of the Newton correction in units of potential.
    pub gradient_norm: f64,
    pub action: f64,
    /// Discrete Euler–Lagrange residual away from the charge, see [`el_residual`].
    pub el_residual: f64,
    /// Seconds.
    pub wall_time: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Starting point for [`minimize_with`]. Boundary values are always
/// overwritten with the Coulomb trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Initialization {
    Zero,
    /// Analytic Coulomb pair, clipped at the charge node.
    CoulombPair,
    /// Superposition of the two isolated Born–Infeld potentials.
    #[default]
    BornSuperposition,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub init: Initialization,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            init: Initialization::default(),
        }
    }
}

impl MinimizerOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }
}

/// State passed to the observer after every accepted step (and once before the first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub iteration: usize,
    pub gradient_norm: f64,
    pub action: f64,
    /// Accurate `Ã(new) − Ã(old)`; zero before the first step.
    pub action_change: f64,
}

/// Converged potential on the quadrant grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSolution {
    grid: AxisymGrid,
    cfg: DipoleConfig,
    phi: Vec<f64>,
    report: ConvergenceReport,
}

impl PotentialSolution {
    pub fn grid(&self) -> &AxisymGrid {
        &self.grid
    }

    pub fn config(&self) -> &DipoleConfig {
        &self.cfg
    }

    /// Node values, `z` outer and `ρ` inner.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn report(&self) -> &ConvergenceReport {
        &self.report
    }

    /// Value at the proton node.
    pub fn proton_value(&self) -> f64 {
        self.phi[self.grid.source_index()]
    }

    /// Bilinear interpolation at `(ρ, z)`, extended to `z < 0` by antisymmetry.
    pub fn value_at(&self, rho: f64, z: f64) -> Result<f64> {
        if z < 0.0 {
            Ok(-self.grid.interpolate(&self.phi, rho, -z)?)
        } else {
            self.grid.interpolate(&self.phi, rho, z)
        }
    }

    pub fn into_phi(self) -> Vec<f64> {
        self.phi
    }
}

fn check_grid(phi: &[f64], grid: &AxisymGrid) -> Result<()> {
    if phi.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} node values, got {}",
            grid.len(),
            phi.len()
        )));
    }
    if let Some(k) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("node value {k} is not finite")));
    }
    Ok(())
}

/// Rescaled action of the full (mirrored) configuration.
pub fn scaled_action(phi: &[f64], grid: &AxisymGrid, cfg: &DipoleConfig) -> Result<f64> {
    check_grid(phi, grid)?;
    Problem::new(grid, cfg.beta(), 2.0).action(phi)
}

/// Gradient of [`scaled_action`] with respect to the node values.
/// Entries of fixed nodes are zero.
pub fn action_gradient(phi: &[f64], grid: &AxisymGrid, cfg: &DipoleConfig) -> Result<Vec<f64>> {
    check_grid(phi, grid)?;
    let mut g = vec![0.0; grid.len()];
    Problem::new(grid, cfg.beta(), 2.0).gradient(phi, &mut g)?;
    Ok(g)
}

/// Analytic Coulomb pair `1/|s − s_p| − 1/|s − s_e|` at every node. The
/// proton node, where it diverges, takes the value of its radial neighbour.
pub fn coulomb_pair_values(grid: &AxisymGrid, cfg: &DipoleConfig) -> Vec<f64> {
    let half = 0.5 * cfg.separation();
    let pair = |rho: f64, z: f64| 1.0 / rho.hypot(z - half) - 1.0 / rho.hypot(z + half);
    let mut phi = node_map(grid, |i, j| pair(grid.rho(i), grid.z(j)));
    phi[grid.source_index()] = pair(grid.rho(1), grid.z(grid.source_row()));
    phi
}

fn node_map<F: Fn(usize, usize) -> f64 + Sync>(grid: &AxisymGrid, f: F) -> Vec<f64> {
    let n = grid.n_rho();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = f(i, j);
        }
    });
    out
}

fn born_values(grid: &AxisymGrid, beta: f64, centres: &[(f64, f64)]) -> Result<Vec<f64>> {
    let n = grid.n_rho();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(j, row)| -> Result<()> {
            for (i, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for &(zc, q) in centres {
                    let d = grid.rho(i).hypot(grid.z(j) - zc);
                    s += q * exact_born_potential(d, beta)?;
                }
                *v = s;
            }
            Ok(())
        })?;
    Ok(out)
}

/// Minimizes with the default options except for `tol` and an optional start.
pub fn minimize(
    grid: &AxisymGrid,
    cfg: &DipoleConfig,
    tol: f64,
    init: Option<&[f64]>,
) -> Result<PotentialSolution> {
    let mut options = MinimizerOptions::with_tolerance(tol);
    if let Some(phi) = init {
        options.init = Initialization::Given(phi.to_vec());
    }
    minimize_with(grid, cfg, &options, None)
}

/// Full-control minimization. `observer` is called after every accepted step.
pub fn minimize_with(
    grid: &AxisymGrid,
    cfg: &DipoleConfig,
    options: &MinimizerOptions,
    observer: Option<&mut dyn FnMut(&Progress)>,
) -> Result<PotentialSolution> {
    check_options(options)?;
    let problem = Problem::new(grid, cfg.beta(), 2.0);
    let boundary = coulomb_pair_values(grid, cfg);
    let start = match &options.init {
        Initialization::Zero => vec![0.0; grid.len()],
        Initialization::CoulombPair => boundary.clone(),
        Initialization::BornSuperposition => {
            if cfg.beta() == 0.0 {
                boundary.clone()
            } else {
                let half = 0.5 * cfg.separation();
                born_values(grid, cfg.beta(), &[(half, 1.0), (-half, -1.0)])?
            }
        }
        Initialization::Given(phi) => {
            check_grid(phi, grid)?;
            phi.clone()
        }
    };
    let (phi, report) = solve(&problem, &boundary, start, options, observer)?;
    Ok(PotentialSolution {
        grid: *grid,
        cfg: *cfg,
        phi,
        report,
    })
}

fn check_options(options: &MinimizerOptions) -> Result<()> {
    if !(options.tolerance > 0.0 && options.tolerance.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {}",
            options.tolerance
        )));
    }
    Ok(())
}

/// Potential at the charge node for a single proton on `grid`, with the
/// isolated Born–Infeld potential imposed on every boundary, `z = 0`
/// included. This is the same-grid self-value that turns a two-charge
/// solution into an interaction energy.
pub(crate) fn isolated_charge_value(
    grid: &AxisymGrid,
    cfg: &DipoleConfig,
    options: &MinimizerOptions,
) -> Result<(f64, ConvergenceReport)> {
    check_options(options)?;
    let problem = Problem::new(grid, cfg.beta(), 1.0);
    let half = 0.5 * cfg.separation();
    let mut boundary = if cfg.beta() == 0.0 {
        node_map(grid, |i, j| 1.0 / grid.rho(i).hypot(grid.z(j) - half))
    } else {
        born_values(grid, cfg.beta(), &[(half, 1.0)])?
    };
    let src = grid.source_index();
    if cfg.beta() == 0.0 {
        boundary[src] = boundary[src + 1];
    }
    let start = boundary.clone();
    let mut opts = options.clone();
    opts.init = Initialization::Zero;
    let (phi, report) = solve(&problem, &boundary, start, &opts, None)?;
    Ok((phi[src], report))
}

/// Largest `β⁴|∇_h φ|²` over the cells of `sol`.
pub fn max_saturation(sol: &PotentialSolution) -> f64 {
    Problem::new(&sol.grid, sol.cfg.beta(), 2.0).max_saturation(&sol.phi).0
}

/// Weighted RMS of the discrete divergence of `D_h` over the free nodes,
/// leaving out a two-cell neighbourhood of the charge node.
///
/// The divergence is the field part of the action gradient divided by the
/// node's dual volume, so it is the same stencil the minimizer drives to zero.
pub fn el_residual(sol: &PotentialSolution) -> f64 {
    residual_of(&Problem::new(&sol.grid, sol.cfg.beta(), 2.0), &sol.phi).unwrap_or(f64::NAN)
}

fn residual_of(problem: &Problem<'_>, phi: &[f64]) -> Result<f64> {
    let g = problem.grid;
    let mut grad = vec![0.0; g.len()];
    problem.field_gradient(phi, &mut grad)?;
    let row = g.source_row() as isize;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..g.n_z() {
        for i in 0..g.n_rho() {
            if g.is_fixed(i, j) || i <= 2 && (j as isize - row).abs() <= 2 {
                continue;
            }
            let v = problem.node_volume(i, j);
            let res = grad[g.index(i, j)] / v;
            num += res * res * v;
            den += v;
        }
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { 0.0 })
}

/// Overwrites the fixed nodes of `phi` with `boundary` and, if the result is
/// infeasible, blends it toward the discrete harmonic field with the same
/// boundary values until it is comfortably feasible.
fn repair(
    problem: &Problem<'_>,
    poisson: &PoissonSolver,
    boundary: &[f64],
    mut phi: Vec<f64>,
) -> Result<Vec<f64>> {
    let g = problem.grid;
    impose(g, boundary, &mut phi);
    if problem.max_saturation(&phi).0 <= 1.0 - 2.0 * SATURATION_MARGIN {
        return Ok(phi);
    }
    let mut fixed_only = boundary.to_vec();
    for j in 0..g.n_z() {
        for i in 0..g.n_rho() {
            if !g.is_fixed(i, j) {
                fixed_only[g.index(i, j)] = 0.0;
            }
        }
    }

    // Harmonic field with the same boundary data: b − H₀⁻¹ ∇E₀(b).
    let maxwell = Problem::new(g, 0.0, problem.multiplicity);
    let mut grad = vec![0.0; g.len()];
    maxwell.field_gradient(&fixed_only, &mut grad)?;
    maxwell.zero_fixed(&mut grad);
    let mut corr = vec![0.0; g.len()];
    poisson.solve(&grad, &mut corr);
    let harmonic: Vec<f64> = fixed_only.iter().zip(&corr).map(|(b, c)| b - c).collect();

    let mut theta = 1.0;
    for _ in 0..60 {
        theta *= 0.5;
        let trial: Vec<f64> = harmonic
            .iter()
            .zip(&phi)
            .map(|(h, p)| h + theta * (p - h))
            .collect();
        if problem.max_saturation(&trial).0 <= REPAIR_TARGET {
            return Ok(trial);
        }
    }
    let (value, (i, j)) = problem.max_saturation(&harmonic);
    if value < 1.0 - SATURATION_MARGIN {
        Ok(harmonic)
    } else {
        Err(Error::Constraint { i, j, value })
    }
}

fn impose(grid: &AxisymGrid, boundary: &[f64], phi: &mut [f64]) {
    for j in 0..grid.n_z() {
        for i in 0..grid.n_rho() {
            if grid.is_fixed(i, j) {
                let k = grid.index(i, j);
                phi[k] = boundary[k];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(4096)
        .zip(b.par_chunks(4096))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Improves the feasible start `x` by Newton's method on the dual problem:
/// minimize `G(D) = Σ w [H(D) − D·C φ_B]` over quadrant fluxes obeying the
/// discrete Gauss law, the potential being the multiplier. `G` is smooth and
/// convex for any `D`, so this copes with cells driven to the brink of
/// saturation (flux tubes between close charges), where Newton on the
/// potential crawls. `x` is replaced whenever a multiplier is feasible with
/// a smaller action, so it may come back infeasible only if it went in
/// infeasible. Returns the number of iterations.
fn dual_start(
    problem: &Problem<'_>,
    poisson: &PoissonSolver,
    boundary: &[f64],
    x: &mut Vec<f64>,
    options: &MinimizerOptions,
) -> Result<usize> {
    let g = problem.grid;
    let n = g.len();
    let mut fixed_only = boundary.to_vec();
    for j in 0..g.n_z() {
        for i in 0..g.n_rho() {
            if !g.is_fixed(i, j) {
                fixed_only[g.index(i, j)] = 0.0;
            }
        }
    }

    // Project the flux of `x` onto the Gauss constraint with the Maxwell
    // operator. An infeasible `x` contributes its field in place of a flux.
    let maxwell = Problem::new(g, 0.0, problem.multiplicity);
    let feasible = problem.max_saturation(x).0 <= 1.0 - 2.0 * SATURATION_MARGIN;
    let source = if feasible { problem } else { &maxwell };
    let mut flux = source.flux(x)?;
    let mut grad = vec![0.0; n];
    source.gradient(x, &mut grad)?;
    let mut chi = vec![0.0; n];
    poisson.solve(&grad, &mut chi);
    for (d, c) in flux.iter_mut().zip(maxwell.flux(&chi)?) {
        d.iter_mut().zip(c).for_each(|(a, b)| *a -= b);
    }

    let mut best = if feasible { problem.action(x)? } else { f64::INFINITY };
    let mut phi = vec![0.0; n];
    for iteration in 0..DUAL_ITERATIONS.min(options.max_iterations) {
        let (matrix, rhs) = problem.newton_system(&fixed_only, &flux);
        let mut packed = problem.pack(&rhs);
        matrix.cholesky()?.solve(&mut packed);
        problem.unpack(&packed, &mut phi);
        phi.iter_mut().zip(&fixed_only).for_each(|(p, b)| *p += b);

        if problem.max_saturation(&phi).0 <= 1.0 - 2.0 * SATURATION_MARGIN {
            let action = problem.action(&phi)?;
            if action < best {
                let settled = best - action <= 1e-15 * action.abs();
                best = action;
                x.copy_from_slice(&phi);
                if settled {
                    return Ok(iteration + 1);
                }
            }
        }

        let step = problem.flux_step(&phi, &flux);
        let (_, slope) = problem.dual_change(&fixed_only, &flux, &step, 0.0);
        if !(slope < 0.0) {
            return Ok(iteration + 1);
        }
        let mut alpha = 1.0;
        while problem.dual_change(&fixed_only, &flux, &step, alpha).0 > ARMIJO * alpha * slope {
            alpha *= 0.5;
            if alpha < 1e-30 {
                return Ok(iteration + 1);
            }
        }
        for (d, s) in flux.iter_mut().zip(&step) {
            d.iter_mut().zip(s).for_each(|(a, b)| *a += alpha * b);
        }
    }
    Ok(DUAL_ITERATIONS.min(options.max_iterations))
}

/// Newton's method with feasibility-preserving backtracking and an Armijo
/// test on the accurately computed action change.
fn solve(
    problem: &Problem<'_>,
    boundary: &[f64],
    start: Vec<f64>,
    options: &MinimizerOptions,
    mut observer: Option<&mut dyn FnMut(&Progress)>,
) -> Result<(Vec<f64>, ConvergenceReport)> {
    let clock = Instant::now();
    let n = problem.grid.len();
    let poisson = PoissonSolver::new(problem);
    let nonlinear = problem.beta > 0.0;
    let mut x = match repair(problem, &poisson, boundary, start.clone()) {
        Ok(x) => x,
        // The dual start below does not need a feasible point.
        Err(Error::Constraint { .. }) if nonlinear => {
            let mut x = start;
            impose(problem.grid, boundary, &mut x);
            x
        }
        Err(e) => return Err(e),
    };
    let mut iteration = 0;
    if nonlinear {
        iteration = dual_start(problem, &poisson, boundary, &mut x, options)?;
        x = repair(problem, &poisson, boundary, x)?;
    }

    let mut f = problem.action(&x)?;
    let mut g = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut last_change = 0.0;

    let finish = |x: &[f64], iterations: usize, norm: f64, converged: bool| -> Result<ConvergenceReport> {
        Ok(ConvergenceReport {
            iterations,
            gradient_norm: norm,
            action: problem.action(x)?,
            el_residual: residual_of(problem, x)?,
            wall_time: clock.elapsed().as_secs_f64(),
            tolerance: options.tolerance,
            converged,
        })
    };

    loop {
        problem.gradient(&x, &mut g)?;
        let norm = newton_direction(problem, &poisson, &x, &g, &mut dir)?;
        if let Some(obs) = observer.as_deref_mut() {
            obs(&Progress {
                iteration,
                gradient_norm: norm,
                action: f,
                action_change: last_change,
            });
        }
        if norm <= options.tolerance {
            let report = finish(&x, iteration, norm, true)?;
            return Ok((x, report));
        }
        if iteration >= options.max_iterations {
            let report = finish(&x, iteration, norm, false)?;
            return Err(Error::NonConvergence(Box::new(report)));
        }

        let slope = dot(&g, &dir);
        let mut alpha = 1.0;
        let df = loop {
            match problem.action_change(&x, &dir, alpha) {
                Ok(df) if df <= ARMIJO * alpha * slope => break Some(df),
                Ok(_) | Err(Error::Constraint { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                break None;
            }
        };
        let Some(df) = df else {
            let report = finish(&x, iteration, norm, false)?;
            return Err(Error::NonConvergence(Box::new(report)));
        };

        x.iter_mut().zip(&dir).for_each(|(a, d)| *a += alpha * d);
        f += df;
        last_change = df;
        iteration += 1;
    }
}

/// Newton correction `−H⁻¹ g` at `x` into `dir`, returning `max |dir|`, the
/// scaled gradient norm. Falls back to the Maxwell-limit Hessian when the
/// exact one cannot be factorized or fails to give a descent direction.
fn newton_direction(
    problem: &Problem<'_>,
    poisson: &PoissonSolver,
    x: &[f64],
    g: &[f64],
    dir: &mut [f64],
) -> Result<f64> {
    if problem.beta > 0.0 {
        let (matrix, rhs) = problem.newton_system(x, &problem.flux(x)?);
        if let Ok(factor) = matrix.cholesky() {
            let mut packed = problem.pack(&rhs);
            factor.solve(&mut packed);
            problem.unpack(&packed, dir);
            if dot(g, dir) < 0.0 || g.iter().all(|&v| v == 0.0) {
                return Ok(max_abs(dir));
            }
        }
    }
    poisson.solve(g, dir);
    dir.iter_mut().for_each(|d| *d = -*d);
    Ok(max_abs(dir))
}

/// Scaled gradient norm of `phi`, see [`ConvergenceReport::gradient_norm`].
fn gradient_norm(problem: &Problem<'_>, phi: &[f64]) -> Result<f64> {
    let n = problem.grid.len();
    let mut g = vec![0.0; n];
    problem.gradient(phi, &mut g)?;
    let mut dir = vec![0.0; n];
    newton_direction(problem, &PoissonSolver::new(problem), phi, &g, &mut dir)
}
