//! Discretized, rescaled Born–Infeld action on the axisymmetric quadrant.
//!
//! Each cell is split into four quadrants, one per corner. A quadrant's
//! gradient is built from the two cell edges meeting at its corner, and its
//! weight is the exact volume `2π ρ_q (h_ρ/2)(h_z/2)` of the revolved
//! quadrant, `ρ_q` being the quadrant-centre radius (`h_ρ/4` on the axis).
//! At `β = 0` this reproduces the standard five-point finite-volume
//! Laplacian in cylindrical coordinates.
//!
//! The integrand `(1 − √(1 − β⁴t))/β⁴` with `t = |∇φ|²` is evaluated as
//! `t / (1 + √(1 − β⁴t))`, which is exact at `β = 0` and loses no precision
//! for small `β`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::band::SymmetricBand;
use super::grid::AxisymGrid;
use crate::error::{Error, Result};

/// Cells may approach saturation only up to `β⁴|∇φ|² ≤ 1 − SATURATION_MARGIN`.
pub const SATURATION_MARGIN: f64 = 1e-12;

/// Smallest factor by which one step may shrink a quadrant's slack `1 − β⁴|∇φ|²`.
pub const BOUNDARY_FRACTION: f64 = 0.05;

/// A discrete variational problem: functional, source and fixed-node layout.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Problem<'a> {
    pub grid: &'a AxisymGrid,
    pub beta: f64,
    /// Overall multiplier; 2 when the mirrored half-space is folded in.
    pub multiplicity: f64,
}

/// Corner layout of a cell: 0 = (i, j), 1 = (i+1, j), 2 = (i, j+1), 3 = (i+1, j+1).
/// Edges are numbered bottom, top, left, right as returned by `edges`.
const EDGE_NODES: [(usize, usize); 4] = [(0, 1), (2, 3), (0, 2), (1, 3)];

struct Quadrant {
    x_edge: usize,
    y_edge: usize,
    east: bool,
}

/// South-west, south-east, north-west, north-east.
const QUADRANTS: [Quadrant; 4] = [
    Quadrant { x_edge: 0, y_edge: 2, east: false },
    Quadrant { x_edge: 0, y_edge: 3, east: true },
    Quadrant { x_edge: 1, y_edge: 2, east: false },
    Quadrant { x_edge: 1, y_edge: 3, east: true },
];

#[derive(Debug, Clone, Copy)]
struct CellGeometry {
    inv_hr: f64,
    inv_hz: f64,
    /// Quadrant weights for the west and east halves of each cell column.
    west: f64,
    east: f64,
}

/// `f(t)` and `f'(t)` of the rescaled integrand.
#[inline]
fn integrand(t: f64, beta4: f64) -> (f64, f64) {
    let s = (1.0 - beta4 * t).sqrt();
    (t / (1.0 + s), 0.5 / s)
}

impl<'a> Problem<'a> {
    pub fn new(grid: &'a AxisymGrid, beta: f64, multiplicity: f64) -> Self {
        Self {
            grid,
            beta,
            multiplicity,
        }
    }

    fn beta4(&self) -> f64 {
        let b2 = self.beta * self.beta;
        b2 * b2
    }

    fn limit(&self) -> f64 {
        1.0 - SATURATION_MARGIN
    }

    fn cell(&self, i: usize) -> CellGeometry {
        let g = self.grid;
        let (hr, hz) = (g.h_rho(), g.h_z());
        let quarter = 0.25 * hr * hz;
        CellGeometry {
            inv_hr: 1.0 / hr,
            inv_hz: 1.0 / hz,
            west: 2.0 * PI * (g.rho(i) + 0.25 * hr) * quarter,
            east: 2.0 * PI * (g.rho(i + 1) - 0.25 * hr) * quarter,
        }
    }

    /// Quadrant weights `(west, east)` of cell column `i`.
    pub fn quadrant_weights(&self, i: usize) -> (f64, f64) {
        let c = self.cell(i);
        (c.west, c.east)
    }

    /// Edge differences `(bottom, top, left, right)` of cell `(i, j)`.
    #[inline]
    fn edges(&self, phi: &[f64], i: usize, j: usize, c: &CellGeometry) -> [f64; 4] {
        let n = self.grid.n_rho();
        let k = j * n + i;
        let (p00, p10, p01, p11) = (phi[k], phi[k + 1], phi[k + n], phi[k + n + 1]);
        [
            (p10 - p00) * c.inv_hr,
            (p11 - p01) * c.inv_hr,
            (p01 - p00) * c.inv_hz,
            (p11 - p10) * c.inv_hz,
        ]
    }

    fn violation(&self, i: usize, j: usize, t: f64) -> Error {
        Error::Constraint {
            i,
            j,
            value: self.beta4() * t,
        }
    }

    /// Largest `β⁴|∇φ|²` over all quadrants, with the cell where it occurs.
    pub fn max_saturation(&self, phi: &[f64]) -> (f64, (usize, usize)) {
        let g = self.grid;
        let beta4 = self.beta4();
        let mut worst = (0.0, (0, 0));
        for j in 0..g.n_z() - 1 {
            for i in 0..g.n_rho() - 1 {
                let c = self.cell(i);
                let [a, b, l, r] = self.edges(phi, i, j, &c);
                let t = (a * a).max(b * b) + (l * l).max(r * r);
                if beta4 * t > worst.0 {
                    worst = (beta4 * t, (i, j));
                }
            }
        }
        worst
    }

    /// Field part of the functional (no source term), summed row by row.
    fn field_energy(&self, phi: &[f64]) -> Result<f64> {
        let g = self.grid;
        let beta4 = self.beta4();
        let limit = self.limit();
        let rows: Vec<Result<f64>> = (0..g.n_z() - 1)
            .into_par_iter()
            .map(|j| {
                let mut sum = 0.0;
                for i in 0..g.n_rho() - 1 {
                    let c = self.cell(i);
                    let [a, b, l, r] = self.edges(phi, i, j, &c);
                    for (t, w) in [
                        (a * a + l * l, c.west),
                        (a * a + r * r, c.east),
                        (b * b + l * l, c.west),
                        (b * b + r * r, c.east),
                    ] {
                        if beta4 * t > limit {
                            return Err(self.violation(i, j, t));
                        }
                        sum += w * integrand(t, beta4).0;
                    }
                }
                Ok(sum)
            })
            .collect();
        let mut total = 0.0;
        for row in rows {
            total += row?;
        }
        Ok(total)
    }

    /// `Ã[φ] = m·(Σ_q w_q f(t_q) − 4π φ(source))`.
    pub fn action(&self, phi: &[f64]) -> Result<f64> {
        let src = phi[self.grid.source_index()];
        Ok(self.multiplicity * (self.field_energy(phi)? - 4.0 * PI * src))
    }

    /// Gradient of the field part only, on every node (fixed ones included).
    pub fn field_gradient(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        let g = self.grid;
        let (nr, nz) = (g.n_rho(), g.n_z());
        let beta4 = self.beta4();
        let limit = self.limit();
        let m = self.multiplicity;

        // Per-cell partial derivatives with respect to the four edge differences,
        // already divided by the edge length.
        let mut partials = vec![[0.0f64; 4]; (nr - 1) * (nz - 1)];
        partials
            .par_chunks_mut(nr - 1)
            .enumerate()
            .try_for_each(|(j, row)| -> Result<()> {
                for (i, out) in row.iter_mut().enumerate() {
                    let c = self.cell(i);
                    let [a, b, l, r] = self.edges(phi, i, j, &c);
                    let mut fp = [0.0; 4];
                    for (q, t) in [a * a + l * l, a * a + r * r, b * b + l * l, b * b + r * r]
                        .into_iter()
                        .enumerate()
                    {
                        if beta4 * t > limit {
                            return Err(self.violation(i, j, t));
                        }
                        fp[q] = integrand(t, beta4).1;
                    }
                    let [sw, se, nw, ne] = fp;
                    *out = [
                        2.0 * a * (c.west * sw + c.east * se) * c.inv_hr * m,
                        2.0 * b * (c.west * nw + c.east * ne) * c.inv_hr * m,
                        2.0 * l * c.west * (sw + nw) * c.inv_hz * m,
                        2.0 * r * c.east * (se + ne) * c.inv_hz * m,
                    ];
                }
                Ok(())
            })?;

        out.par_chunks_mut(nr).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                let cell = |ci: usize, cj: usize| partials[cj * (nr - 1) + ci];
                // Node as the south-west corner of cell (i, j).
                if i < nr - 1 && j < nz - 1 {
                    let [a, _, l, _] = cell(i, j);
                    s -= a + l;
                }
                // South-east corner of cell (i−1, j).
                if i > 0 && j < nz - 1 {
                    let [a, _, _, r] = cell(i - 1, j);
                    s += a - r;
                }
                // North-west corner of cell (i, j−1).
                if i < nr - 1 && j > 0 {
                    let [_, b, l, _] = cell(i, j - 1);
                    s += l - b;
                }
                // North-east corner of cell (i−1, j−1).
                if i > 0 && j > 0 {
                    let [_, b, _, r] = cell(i - 1, j - 1);
                    s += b + r;
                }
                *v = s;
            }
        });
        Ok(())
    }

    /// Full gradient; fixed nodes carry zero.
    pub fn gradient(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        self.field_gradient(phi, out)?;
        out[self.grid.source_index()] -= self.multiplicity * 4.0 * PI;
        self.zero_fixed(out);
        Ok(())
    }

    pub fn zero_fixed(&self, v: &mut [f64]) {
        let g = self.grid;
        for j in 0..g.n_z() {
            for i in 0..g.n_rho() {
                if g.is_fixed(i, j) {
                    v[g.index(i, j)] = 0.0;
                }
            }
        }
    }

    /// `Ã[φ + α d] − Ã[φ]`, evaluated quadrant by quadrant from
    /// `f(t₁) − f(t₀) = (t₁ − t₀)/(s₀ + s₁)` so that the difference keeps full
    /// relative precision however small it is.
    ///
    /// Fails if the trial point leaves the feasible set, or if any quadrant's
    /// slack `1 − β⁴t` would shrink below [`BOUNDARY_FRACTION`] of its current
    /// value. The latter keeps Newton steps from crashing into saturation,
    /// where the quadratic model is useless.
    pub fn action_change(&self, phi: &[f64], dir: &[f64], alpha: f64) -> Result<f64> {
        let g = self.grid;
        let beta4 = self.beta4();
        // Extra headroom: the trial point is re-evaluated from rounded node values.
        let limit = 1.0 - 2.0 * SATURATION_MARGIN;
        let rows: Vec<Result<f64>> = (0..g.n_z() - 1)
            .into_par_iter()
            .map(|j| {
                let mut sum = 0.0;
                for i in 0..g.n_rho() - 1 {
                    let c = self.cell(i);
                    let e0 = self.edges(phi, i, j, &c);
                    let de = self.edges(dir, i, j, &c).map(|x| x * alpha);
                    let [a, b, l, r] = e0;
                    let [da, db, dl, dr] = de;
                    for ((x, dx), (y, dy), w) in [
                        ((a, da), (l, dl), c.west),
                        ((a, da), (r, dr), c.east),
                        ((b, db), (l, dl), c.west),
                        ((b, db), (r, dr), c.east),
                    ] {
                        let t0 = x * x + y * y;
                        let dt = dx * (2.0 * x + dx) + dy * (2.0 * y + dy);
                        let t1 = t0 + dt;
                        if beta4 * t1 > limit || 1.0 - beta4 * t1 < BOUNDARY_FRACTION * (1.0 - beta4 * t0) {
                            return Err(self.violation(i, j, t1));
                        }
                        let s0 = (1.0 - beta4 * t0).sqrt();
                        let s1 = (1.0 - beta4 * t1).sqrt();
                        sum += w * dt / (s0 + s1);
                    }
                }
                Ok(sum)
            })
            .collect();
        let mut total = 0.0;
        for row in rows {
            total += row?;
        }
        let src = g.source_index();
        Ok(self.multiplicity * (total - 4.0 * PI * alpha * dir[src]))
    }

    /// Displacement `D = E/√(1 − β⁴|E|²)` of every quadrant, consistent with `phi`.
    pub fn flux(&self, phi: &[f64]) -> Result<Vec<[f64; 8]>> {
        let g = self.grid;
        let beta4 = self.beta4();
        let limit = self.limit();
        let mut out = Vec::with_capacity((g.n_rho() - 1) * (g.n_z() - 1));
        for j in 0..g.n_z() - 1 {
            for i in 0..g.n_rho() - 1 {
                let c = self.cell(i);
                let e = self.edges(phi, i, j, &c);
                let mut d = [0.0; 8];
                for (q, quad) in QUADRANTS.iter().enumerate() {
                    let (x, y) = (e[quad.x_edge], e[quad.y_edge]);
                    let t = x * x + y * y;
                    if beta4 * t > limit {
                        return Err(self.violation(i, j, t));
                    }
                    let s = (1.0 - beta4 * t).sqrt();
                    d[2 * q] = x / s;
                    d[2 * q + 1] = y / s;
                }
                out.push(d);
            }
        }
        Ok(out)
    }

    /// Newton system of the primal–dual optimality conditions
    /// `Σ w Cᵀ D = source`, `C φ = e(D)`, linearized at `(phi, flux)` with
    /// the flux eliminated. Returns the band matrix on the free nodes (see
    /// [`Self::pack`]) and the right-hand side in full grid layout.
    ///
    /// When `flux` is consistent with `phi` this is exactly Newton's method
    /// on the action; the independent flux avoids linearizing `D(E)`, which
    /// is violently nonlinear near saturation, in favour of the tame `e(D)`.
    pub fn newton_system(&self, phi: &[f64], flux: &[[f64; 8]]) -> (SymmetricBand, Vec<f64>) {
        let g = self.grid;
        let (nr, nz) = (g.n_rho(), g.n_z());
        let width = nr - 1;
        let mut band = SymmetricBand::zeros(width * (nz - 2), width + 1);
        let mut rhs = vec![0.0; g.len()];
        let beta4 = self.beta4();
        let m = self.multiplicity;
        let free = |i: usize, j: usize| -> Option<usize> {
            (!g.is_fixed(i, j)).then(|| (j - 1) * width + i)
        };
        for j in 0..nz - 1 {
            for i in 0..nr - 1 {
                let c = self.cell(i);
                let e = self.edges(phi, i, j, &c);
                let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
                let slots = corners.map(|(a, b)| free(a, b));
                let d = &flux[j * width + i];
                for (q, quad) in QUADRANTS.iter().enumerate() {
                    let w = m * if quad.east { c.east } else { c.west };
                    let (dx, dy) = (d[2 * q], d[2 * q + 1]);
                    let root = (1.0 + beta4 * (dx * dx + dy * dy)).sqrt();
                    let (mxx, mxy, myy) = (
                        root * (1.0 + beta4 * dx * dx),
                        root * beta4 * dx * dy,
                        root * (1.0 + beta4 * dy * dy),
                    );
                    // v = D + M (E − e(D))
                    let (rx, ry) = (e[quad.x_edge] - dx / root, e[quad.y_edge] - dy / root);
                    let vx = dx + mxx * rx + mxy * ry;
                    let vy = dy + mxy * rx + myy * ry;

                    let (xa, xb) = EDGE_NODES[quad.x_edge];
                    let (ya, yb) = EDGE_NODES[quad.y_edge];
                    let taps = [
                        (xa, -c.inv_hr, 0.0),
                        (xb, c.inv_hr, 0.0),
                        (ya, 0.0, -c.inv_hz),
                        (yb, 0.0, c.inv_hz),
                    ];
                    for &(p, px, py) in &taps {
                        let (ci, cj) = corners[p];
                        rhs[g.index(ci, cj)] -= w * (px * vx + py * vy);
                        let Some(row) = slots[p] else { continue };
                        for &(q, qx, qy) in &taps {
                            let Some(col) = slots[q] else { continue };
                            if col > row {
                                continue;
                            }
                            let h = px * (mxx * qx + mxy * qy) + py * (mxy * qx + myy * qy);
                            band.add(row, col, w * h);
                        }
                    }
                }
            }
        }
        rhs[g.source_index()] += m * 4.0 * PI;
        self.zero_fixed(&mut rhs);
        (band, rhs)
    }

    /// Flux correction `δD = M (C φ − e(D))` for every quadrant, `φ` being
    /// the full potential (boundary included) returned by a Newton solve.
    pub fn flux_step(&self, phi: &[f64], flux: &[[f64; 8]]) -> Vec<[f64; 8]> {
        let g = self.grid;
        let width = g.n_rho() - 1;
        let beta4 = self.beta4();
        (0..flux.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % width, k / width);
                let c = self.cell(i);
                let e = self.edges(phi, i, j, &c);
                let d = &flux[k];
                let mut out = [0.0; 8];
                for (q, quad) in QUADRANTS.iter().enumerate() {
                    let (dx, dy) = (d[2 * q], d[2 * q + 1]);
                    let root = (1.0 + beta4 * (dx * dx + dy * dy)).sqrt();
                    let (rx, ry) = (e[quad.x_edge] - dx / root, e[quad.y_edge] - dy / root);
                    let dot = beta4 * (dx * rx + dy * ry);
                    out[2 * q] = root * (rx + dx * dot);
                    out[2 * q + 1] = root * (ry + dy * dot);
                }
                out
            })
            .collect()
    }

    /// Change of the dual energy `G(D) = Σ w [H(D) − D·C φ_B]` along
    /// `D + α δD`, with `H(D) = (√(1 + β⁴|D|²) − 1)/β⁴` and `φ_B` the fixed
    /// boundary values (free entries zero). Also returns the slope at `α = 0`.
    pub fn dual_change(
        &self,
        boundary: &[f64],
        flux: &[[f64; 8]],
        step: &[[f64; 8]],
        alpha: f64,
    ) -> (f64, f64) {
        let g = self.grid;
        let width = g.n_rho() - 1;
        let beta4 = self.beta4();
        let m = self.multiplicity;
        let parts: Vec<(f64, f64)> = (0..flux.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % width, k / width);
                let c = self.cell(i);
                let e = self.edges(boundary, i, j, &c);
                let (d, s) = (&flux[k], &step[k]);
                let (mut change, mut slope) = (0.0, 0.0);
                for (q, quad) in QUADRANTS.iter().enumerate() {
                    let w = m * if quad.east { c.east } else { c.west };
                    let (dx, dy, sx, sy) = (d[2 * q], d[2 * q + 1], s[2 * q], s[2 * q + 1]);
                    let u0 = dx * dx + dy * dy;
                    let du = alpha * (2.0 * (dx * sx + dy * sy) + alpha * (sx * sx + sy * sy));
                    let r0 = (1.0 + beta4 * u0).sqrt();
                    let r1 = (1.0 + beta4 * (u0 + du)).sqrt();
                    let lin = sx * e[quad.x_edge] + sy * e[quad.y_edge];
                    change += w * (du / (r0 + r1) - alpha * lin);
                    slope += w * ((dx * sx + dy * sy) / r0 - lin);
                }
                (change, slope)
            })
            .collect();
        // Summed in a fixed order so that runs are reproducible.
        parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
    }

    /// Free-node values of a full-layout vector, in band-matrix order.
    pub fn pack(&self, full: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let (nr, width) = (g.n_rho(), g.n_rho() - 1);
        let mut out = Vec::with_capacity(width * (g.n_z() - 2));
        for j in 1..g.n_z() - 1 {
            out.extend_from_slice(&full[j * nr..j * nr + width]);
        }
        out
    }

    /// Inverse of [`Self::pack`]; fixed entries become zero.
    pub fn unpack(&self, packed: &[f64], full: &mut [f64]) {
        let g = self.grid;
        let (nr, width) = (g.n_rho(), g.n_rho() - 1);
        full.fill(0.0);
        for (j, chunk) in (1..g.n_z() - 1).zip(packed.chunks(width)) {
            full[j * nr..j * nr + width].copy_from_slice(chunk);
        }
    }

    /// Dual-cell volume of node `(i, j)` within the quadrant (times the multiplicity).
    pub fn node_volume(&self, i: usize, j: usize) -> f64 {
        let g = self.grid;
        let (nr, nz) = (g.n_rho(), g.n_z());
        let mut v = 0.0;
        let rows = usize::from(j > 0) + usize::from(j < nz - 1);
        if i < nr - 1 {
            v += rows as f64 * self.cell(i).west;
        }
        if i > 0 {
            v += rows as f64 * self.cell(i - 1).east;
        }
        self.multiplicity * v
    }
}
