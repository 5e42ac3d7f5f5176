//! Bound states of the reduced radial equation
//! `−½u″ + [ℓ(ℓ+1)/(2r²) + V(r)]u = Eu` in hartree atomic units.
//!
//! The equation is discretized on a uniform mesh in `x = ln(r/r_min)`. With
//! `u = √r·w` it becomes the symmetric tridiagonal pencil
//! `(−½∂ₓ² + ⅛ + ℓ(ℓ+1)/2 + r²V) w = E r² w`, whose entries stay of order
//! `1/h²` all the way down to `r_min`. Eigenvalues come from Sturm-count
//! bisection on that pencil and eigenvectors from inverse iteration.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extraction::{Method, RadialPotential};

/// A central potential `V(r)`, `r > 0`.
pub trait CentralPotential: Sync {
    fn value(&self, r: f64) -> f64;
}

/// `V = −1/r`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Coulomb;

impl CentralPotential for Coulomb {
    fn value(&self, r: f64) -> f64 {
        -1.0 / r
    }
}

impl CentralPotential for RadialPotential {
    fn value(&self, r: f64) -> f64 {
        RadialPotential::value(self, r)
    }
}

impl<F: Fn(f64) -> f64 + Sync> CentralPotential for F {
    fn value(&self, r: f64) -> f64 {
        self(r)
    }
}

/// Logarithmic mesh on `[r_min, r_max]` with `points` interior nodes;
/// `u` vanishes at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMesh {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for RadialMesh {
    fn default() -> Self {
        Self {
            r_min: 1e-8,
            r_max: 80.0,
            points: 8000,
        }
    }
}

impl RadialMesh {
    pub fn new(r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        let mesh = Self { r_min, r_max, points };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(Error::InvalidInput(format!("r_min must be positive, got {}", self.r_min)));
        }
        if !(self.r_max > self.r_min && self.r_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "r_max must exceed r_min, got r_min = {}, r_max = {}",
                self.r_min, self.r_max
            )));
        }
        if self.points < 3 {
            return Err(Error::InvalidInput(format!(
                "a radial mesh needs at least 3 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    /// Spacing in `ln r`.
    pub fn step(&self) -> f64 {
        (self.r_max / self.r_min).ln() / (self.points + 1) as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r_min * ((i + 1) as f64 * self.step()).exp()
    }

    /// Radii of the interior nodes.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.radius(i)).collect()
    }

    /// `∫ f g dr` for functions sampled on the nodes.
    pub fn overlap(&self, f: &[f64], g: &[f64]) -> f64 {
        let h = self.step();
        (0..self.points).map(|i| self.radius(i) * f[i] * g[i]).sum::<f64>() * h
    }
}

/// An eigenvalue with its eigenfunction `u` on the mesh nodes, normalized
/// so that `∫u² dr = 1` and positive near the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    pub u: Vec<f64>,
}

/// Radial eigensolver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolver {
    pub mesh: RadialMesh,
    /// Multiplies the centrifugal term. Always 1 except in tests that check
    /// the spectrum is sensitive to it.
    pub centrifugal_scale: f64,
}

impl Default for RadialSolver {
    fn default() -> Self {
        Self::new(RadialMesh::default())
    }
}

struct Pencil {
    a: Vec<f64>,
    b: Vec<f64>,
    off: f64,
}

impl Pencil {
    /// Number of eigenvalues below `lambda`.
    fn count_below(&self, lambda: f64) -> usize {
        let off2 = self.off * self.off;
        let mut negative = 0;
        let mut q = 1.0;
        for i in 0..self.a.len() {
            let mut d = self.a[i] - lambda * self.b[i];
            if i > 0 {
                d -= off2 / q;
            }
            if d == 0.0 {
                d = -f64::EPSILON * self.off.abs();
            }
            if d < 0.0 {
                negative += 1;
            }
            q = d;
        }
        negative
    }

    /// `k`-th eigenvalue (from 0) in `(lo, hi)`, given `count_below(lo) ≤ k < count_below(hi)`.
    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(A − λB) x = rhs` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, lambda: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.a.len();
        let tiny = f64::EPSILON * self.off.abs();
        // Row i of the eliminated system: d[i] x[i] + u1[i] x[i+1] + u2[i] x[i+2] = y[i].
        let mut d = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut y = rhs.to_vec();
        // Current pending row: (diag, upper, rhs) still to be pivoted against row i+1.
        let mut cd = self.a[0] - lambda * self.b[0];
        let mut cu = self.off;
        for i in 0..n - 1 {
            let below_d = self.off;
            let below_u = self.a[i + 1] - lambda * self.b[i + 1];
            let below_u2 = if i + 2 < n { self.off } else { 0.0 };
            if cd.abs() >= below_d.abs() {
                let piv = if cd == 0.0 { tiny } else { cd };
                let m = below_d / piv;
                d[i] = piv;
                u1[i] = cu;
                u2[i] = 0.0;
                let yi = y[i];
                y[i + 1] -= m * yi;
                cd = below_u - m * cu;
                cu = below_u2;
            } else {
                let m = cd / below_d;
                d[i] = below_d;
                u1[i] = below_u;
                u2[i] = below_u2;
                y.swap(i, i + 1);
                let yi = y[i];
                y[i + 1] -= m * yi;
                cd = cu - m * below_u;
                cu = -m * below_u2;
            }
        }
        d[n - 1] = if cd == 0.0 { tiny } else { cd };
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        x
    }
}

impl RadialSolver {
    pub fn new(mesh: RadialMesh) -> Self {
        Self {
            mesh,
            centrifugal_scale: 1.0,
        }
    }

    fn pencil(&self, v: &dyn CentralPotential, ell: u32) -> Pencil {
        let h = self.mesh.step();
        let l = ell as f64;
        let base = 1.0 / (h * h) + 0.125 + self.centrifugal_scale * l * (l + 1.0) / 2.0;
        let (a, b): (Vec<f64>, Vec<f64>) = self
            .mesh
            .radii()
            .into_iter()
            .map(|r| (base + r * r * v.value(r), r * r))
            .unzip();
        Pencil {
            a,
            b,
            off: -0.5 / (h * h),
        }
    }

    /// The `count` lowest bound states for angular momentum `ell`.
    pub fn solve(&self, v: &dyn CentralPotential, ell: u32, count: usize) -> Result<Vec<Eigenpair>> {
        self.mesh.validate()?;
        if count == 0 {
            return Err(Error::InvalidInput("count must be at least 1".into()));
        }
        let pencil = self.pencil(v, ell);
        if let Some(bad) = pencil.a.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "potential is not finite at r = {}",
                self.mesh.radius(bad)
            )));
        }
        let bound = pencil.count_below(0.0);
        let mut lo = -1.0;
        while pencil.count_below(lo) > 0 {
            lo *= 2.0;
        }
        let found = bound.min(count);
        let energies: Vec<f64> = (0..found).map(|k| pencil.bisect(k, lo, 0.0)).collect();
        if bound < count {
            return Err(Error::MissingStates {
                ell,
                requested: count,
                found: energies,
            });
        }
        Ok(energies
            .into_iter()
            .map(|e| Eigenpair {
                energy: e,
                u: self.eigenfunction(&pencil, e),
            })
            .collect())
    }

    fn eigenfunction(&self, pencil: &Pencil, energy: f64) -> Vec<f64> {
        let n = pencil.a.len();
        let mut w = vec![1.0; n];
        for _ in 0..3 {
            let rhs: Vec<f64> = w.iter().zip(&pencil.b).map(|(x, b)| x * b).collect();
            w = pencil.shifted_solve(energy, &rhs);
            let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            w.iter_mut().for_each(|x| *x /= scale);
        }
        let radii = self.mesh.radii();
        let mut u: Vec<f64> = w.iter().zip(&radii).map(|(x, r)| x * r.sqrt()).collect();
        let norm = self.mesh.overlap(&u, &u).sqrt();
        let peak = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = u.iter().find(|x| x.abs() > 1e-6 * peak).copied().unwrap_or(1.0);
        let scale = first.signum() / norm;
        u.iter_mut().for_each(|x| *x *= scale);
        u
    }

    /// Levels `n ≤ n_max` for each `ℓ ≤ ell_max`, with shifts against `−1/r`
    /// solved on the same mesh.
    pub fn spectrum(&self, v: &RadialPotential, n_max: u32, ell_max: u32) -> Result<SpectrumResult> {
        if ell_max >= n_max {
            return Err(Error::InvalidInput(format!(
                "ell_max ({ell_max}) must be below n_max ({n_max})"
            )));
        }
        let rows: Vec<Vec<Level>> = (0..=ell_max)
            .into_par_iter()
            .map(|ell| {
                let count = (n_max - ell) as usize;
                let levels = self.solve(v, ell, count)?;
                let baseline = self.solve(&Coulomb, ell, count)?;
                Ok(levels
                    .iter()
                    .zip(&baseline)
                    .enumerate()
                    .map(|(k, (p, c))| Level {
                        n: ell + 1 + k as u32,
                        ell,
                        energy: p.energy,
                        shift: p.energy - c.energy,
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(SpectrumResult {
            levels: rows.into_iter().flatten().collect(),
            beta: v.beta(),
            method: v.method(),
            mesh: self.mesh,
        })
    }
}

/// [`RadialSolver::solve`] with the unmodified centrifugal term.
pub fn solve_radial(
    v: &dyn CentralPotential,
    ell: u32,
    count: usize,
    mesh: &RadialMesh,
) -> Result<Vec<Eigenpair>> {
    RadialSolver::new(*mesh).solve(v, ell, count)
}

pub fn spectrum_shifts(v: &RadialPotential, n_max: u32, ell_max: u32, mesh: &RadialMesh) -> Result<SpectrumResult> {
    RadialSolver::new(*mesh).spectrum(v, n_max, ell_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub n: u32,
    pub ell: u32,
    pub energy: f64,
    /// `E − E_C` with `E_C` the Coulomb level on the same mesh.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Sorted by `ell`, then `n`.
    pub levels: Vec<Level>,
    pub beta: f64,
    pub method: Method,
    pub mesh: RadialMesh,
}

impl SpectrumResult {
    pub fn level(&self, n: u32, ell: u32) -> Option<&Level> {
        self.levels.iter().find(|l| l.n == n && l.ell == ell)
    }

    /// CSV with header `n,ell,E,shift,beta,method`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,ell,E,shift,beta,method\n");
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e},{}",
                l.n, l.ell, l.energy, l.shift, self.beta, self.method
            );
        }
        out
    }

    pub fn write_csv(&self, path: &FsPath) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
