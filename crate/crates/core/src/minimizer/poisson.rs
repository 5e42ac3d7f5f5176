//! Direct solver for the `β = 0` Hessian of the discrete functional.
//!
//! With the corner-quadrant quadrature the Maxwell-limit Hessian on the free
//! nodes separates as `m·(A ⊗ I + K ⊗ T)`: `A` is tridiagonal in `ρ`, `K` is
//! diagonal in `ρ` and `T` is the Dirichlet second difference in `z`. A sine
//! transform in `z` diagonalizes `T`, leaving one tridiagonal system per mode.
//! It gives the harmonic field used by the feasibility repair and the fallback
//! Newton direction.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::functional::Problem;
use super::grid::AxisymGrid;

#[derive(Debug, Clone)]
pub(crate) struct PoissonSolver {
    n_rho: usize,
    /// Free columns `0..n_free_rho` and free rows `1..=n_free_z`.
    n_free_rho: usize,
    n_free_z: usize,
    /// Orthonormal DST-I matrix, row major.
    sine: Vec<f64>,
    /// Per mode: Thomas-algorithm sub-diagonal multipliers and pivots.
    lower: Vec<Vec<f64>>,
    pivot: Vec<Vec<f64>>,
    off: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(problem: &Problem<'_>) -> Self {
        let g: &AxisymGrid = problem.grid;
        let (hr, hz) = (g.h_rho(), g.h_z());
        let n = g.n_rho() - 1;
        let mz = g.n_z() - 2;
        let m = problem.multiplicity;

        let weights: Vec<(f64, f64)> = (0..g.n_rho() - 1).map(|i| problem.quadrant_weights(i)).collect();
        let k_rho: Vec<f64> = weights.iter().map(|&(w, e)| 2.0 * (w + e) / (hr * hr)).collect();
        let k_z: Vec<f64> = (0..n)
            .map(|i| {
                let west = weights[i].0;
                let east = if i > 0 { weights[i - 1].1 } else { 0.0 };
                2.0 * (west + east) / (hz * hz)
            })
            .collect();

        let diag: Vec<f64> = (0..n)
            .map(|i| m * (k_rho[i] + if i > 0 { k_rho[i - 1] } else { 0.0 }))
            .collect();
        let off: Vec<f64> = (0..n.saturating_sub(1)).map(|i| -m * k_rho[i]).collect();

        let scale = (2.0 / (mz + 1) as f64).sqrt();
        let mut sine = vec![0.0; mz * mz];
        for k in 0..mz {
            for j in 0..mz {
                sine[k * mz + j] =
                    scale * (PI * ((k + 1) * (j + 1)) as f64 / (mz + 1) as f64).sin();
            }
        }

        let (lower, pivot): (Vec<_>, Vec<_>) = (0..mz)
            .map(|k| {
                let lambda = 2.0 - 2.0 * (PI * (k + 1) as f64 / (mz + 1) as f64).cos();
                let mut piv = vec![0.0; n];
                let mut low = vec![0.0; n];
                piv[0] = diag[0] + m * lambda * k_z[0];
                for i in 1..n {
                    low[i] = off[i - 1] / piv[i - 1];
                    piv[i] = diag[i] + m * lambda * k_z[i] - low[i] * off[i - 1];
                }
                (low, piv)
            })
            .unzip();

        Self {
            n_rho: g.n_rho(),
            n_free_rho: n,
            n_free_z: mz,
            sine,
            lower,
            pivot,
            off,
        }
    }

    /// `z ↦ S z` on the free block, `src` and `dst` both `n_free_z × n_free_rho`.
    fn transform(&self, src: &[f64], dst: &mut [f64]) {
        let (n, mz) = (self.n_free_rho, self.n_free_z);
        dst.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            row.fill(0.0);
            let s = &self.sine[k * mz..(k + 1) * mz];
            for (j, &c) in s.iter().enumerate() {
                let from = &src[j * n..(j + 1) * n];
                for (d, &v) in row.iter_mut().zip(from) {
                    *d += c * v;
                }
            }
        });
    }

    /// Solves `H x = b` for the free nodes; fixed entries of `x` are set to 0.
    /// Both vectors use the full grid layout.
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let (n, mz, nr) = (self.n_free_rho, self.n_free_z, self.n_rho);
        let mut packed = vec![0.0; n * mz];
        for j in 0..mz {
            packed[j * n..(j + 1) * n].copy_from_slice(&b[(j + 1) * nr..(j + 1) * nr + n]);
        }
        let mut modes = vec![0.0; n * mz];
        self.transform(&packed, &mut modes);

        modes.par_chunks_mut(n).enumerate().for_each(|(k, y)| {
            let (low, piv) = (&self.lower[k], &self.pivot[k]);
            for i in 1..n {
                y[i] -= low[i] * y[i - 1];
            }
            y[n - 1] /= piv[n - 1];
            for i in (0..n - 1).rev() {
                y[i] = (y[i] - self.off[i] * y[i + 1]) / piv[i];
            }
        });

        self.transform(&modes, &mut packed);
        x.fill(0.0);
        for j in 0..mz {
            x[(j + 1) * nr..(j + 1) * nr + n].copy_from_slice(&packed[j * n..(j + 1) * n]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::DipoleConfig;

    #[test]
    fn inverts_the_maxwell_hessian() {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let g = AxisymGrid::build(&cfg, 19, 23, 5.0).unwrap();
        let p = Problem::new(&g, 0.0, 2.0);
        let solver = PoissonSolver::new(&p);

        // The field gradient is linear at β = 0, so it applies the Hessian.
        let mut x = vec![0.0; g.len()];
        for (k, v) in x.iter_mut().enumerate() {
            *v = ((k * 37 % 101) as f64 / 101.0) - 0.5;
        }
        p.zero_fixed(&mut x);
        let mut hx = vec![0.0; g.len()];
        p.field_gradient(&x, &mut hx).unwrap();
        p.zero_fixed(&mut hx);

        let mut back = vec![0.0; g.len()];
        solver.solve(&hx, &mut back);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }
}
