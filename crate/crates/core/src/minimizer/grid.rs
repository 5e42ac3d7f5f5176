use crate::error::{Error, Result};
use crate::fields::DipoleConfig;

/// Quarter-plane `(ρ, z) ∈ [0, ρ_max] × [0, z_max]` node mesh.
///
/// Rotation invariance about the axis and antisymmetry across `z = 0` reduce
/// the two-charge problem to this quadrant. The `z` spacing is chosen so the
/// proton at `z = r/2` is exactly the axis node in row [`AxisymGrid::source_row`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisymGrid {
    n_rho: usize,
    n_z: usize,
    rho_max: f64,
    z_max: f64,
    source_row: usize,
}

pub const MIN_NODES: usize = 16;
pub const MIN_EXTENT: f64 = 5.0;

impl AxisymGrid {
    /// Builds the mesh for `cfg` with outer extents of at least `extent_factor · r`.
    ///
    /// `z_max` is rounded up so that `r/2` falls on a node: with
    /// `k = ⌊(n_z − 1) / (2·extent_factor)⌋`, the spacing is `h_z = (r/2)/k`.
    pub fn build(cfg: &DipoleConfig, n_rho: usize, n_z: usize, extent_factor: f64) -> Result<Self> {
        if n_rho < MIN_NODES || n_z < MIN_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_NODES} nodes per direction, got {n_rho} x {n_z}"
            )));
        }
        if !(extent_factor >= MIN_EXTENT && extent_factor.is_finite()) {
            return Err(Error::Config(format!(
                "extent factor must be at least {MIN_EXTENT}, got {extent_factor}"
            )));
        }
        let r = cfg.separation();
        let k = ((n_z - 1) as f64 / (2.0 * extent_factor)).floor() as usize;
        if k == 0 {
            return Err(Error::Config(format!(
                "{n_z} rows cannot place the charge at r/2 on a node with extent factor {extent_factor}"
            )));
        }
        let z_max = (n_z - 1) as f64 * (0.5 * r / k as f64);
        Ok(Self {
            n_rho,
            n_z,
            rho_max: extent_factor * r,
            z_max,
            source_row: k,
        })
    }

    /// Rebuilds a mesh from stored extents, checking that `r/2` is a node.
    pub fn from_extents(
        cfg: &DipoleConfig,
        n_rho: usize,
        n_z: usize,
        rho_max: f64,
        z_max: f64,
    ) -> Result<Self> {
        if n_rho < MIN_NODES || n_z < MIN_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_NODES} nodes per direction, got {n_rho} x {n_z}"
            )));
        }
        let r = cfg.separation();
        if !(rho_max >= MIN_EXTENT * r && z_max >= MIN_EXTENT * r) || !rho_max.is_finite() || !z_max.is_finite() {
            return Err(Error::Config(format!(
                "extents ({rho_max}, {z_max}) must be finite and at least {MIN_EXTENT} r"
            )));
        }
        let h_z = z_max / (n_z - 1) as f64;
        let k = (0.5 * r / h_z).round();
        if k < 1.0 || (k * h_z - 0.5 * r).abs() > 1e-9 * r {
            return Err(Error::Config(format!(
                "z = r/2 = {} is not a node of a {n_z}-row mesh with z_max = {z_max}",
                0.5 * r
            )));
        }
        Ok(Self {
            n_rho,
            n_z,
            rho_max,
            z_max,
            source_row: k as usize,
        })
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn h_rho(&self) -> f64 {
        self.rho_max / (self.n_rho - 1) as f64
    }

    pub fn h_z(&self) -> f64 {
        self.z_max / (self.n_z - 1) as f64
    }

    pub fn rho(&self, i: usize) -> f64 {
        i as f64 * self.h_rho()
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.h_z()
    }

    /// Row of the axis node carrying the proton.
    pub fn source_row(&self) -> usize {
        self.source_row
    }

    /// Flat index of node `(i, j)`: `z` outer, `ρ` inner.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_rho + i
    }

    pub fn source_index(&self) -> usize {
        self.index(0, self.source_row)
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes with prescribed values: the mirror plane, the outer `z` row and
    /// the outer `ρ` column. The axis itself is free.
    pub fn is_fixed(&self, i: usize, j: usize) -> bool {
        j == 0 || j == self.n_z - 1 || i == self.n_rho - 1
    }

    /// Bilinear interpolation of nodal values at `(ρ, z)`.
    pub fn interpolate(&self, values: &[f64], rho: f64, z: f64) -> Result<f64> {
        if !(0.0..=self.rho_max).contains(&rho) || !(0.0..=self.z_max).contains(&z) {
            return Err(Error::InvalidInput(format!(
                "point (rho={rho}, z={z}) lies outside the mesh"
            )));
        }
        let fi = rho / self.h_rho();
        let fj = z / self.h_z();
        let i = (fi.floor() as usize).min(self.n_rho - 2);
        let j = (fj.floor() as usize).min(self.n_z - 2);
        let (tx, ty) = (fi - i as f64, fj - j as f64);
        let v = |i, j| values[self.index(i, j)];
        Ok((1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1))
    }
}

/// Free-function form of [`AxisymGrid::build`].
pub fn build_grid(cfg: &DipoleConfig, n_rho: usize, n_z: usize, extent_factor: f64) -> Result<AxisymGrid> {
    AxisymGrid::build(cfg, n_rho, n_z, extent_factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charge_lands_on_a_node() {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let g = AxisymGrid::build(&cfg, 101, 101, 10.0).unwrap();
        assert_eq!(g.z_max(), 20.0);
        assert_eq!(g.source_row(), 5);
        assert!((g.z(g.source_row()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn snapping_rounds_z_max_up() {
        let cfg = DipoleConfig::new(1.0, 0.0).unwrap();
        let g = AxisymGrid::build(&cfg, 257, 257, 10.0).unwrap();
        // 256 / 20 = 12.8 -> 12 spacings up to the charge.
        assert_eq!(g.source_row(), 12);
        assert!((g.h_z() - 0.5 / 12.0).abs() < 1e-16);
        assert!((g.z_max() - 256.0 / 24.0).abs() < 1e-12);
        assert!(g.z_max() >= 10.0);
        assert!((g.h_rho() - 10.0 / 256.0).abs() < 1e-16);
    }

    #[test]
    fn refinement_keeps_meshes_nested() {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let coarse = AxisymGrid::build(&cfg, 65, 65, 10.0).unwrap();
        let mid = AxisymGrid::build(&cfg, 129, 129, 10.0).unwrap();
        let fine = AxisymGrid::build(&cfg, 257, 257, 10.0).unwrap();
        assert_eq!(coarse.z_max(), mid.z_max());
        assert_eq!(mid.z_max(), fine.z_max());
        assert_eq!(2 * coarse.source_row(), mid.source_row());
        assert_eq!(2 * mid.source_row(), fine.source_row());
    }

    #[test]
    fn rejects_bad_geometry() {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        assert!(matches!(AxisymGrid::build(&cfg, 65, 65, 2.0), Err(Error::Config(_))));
        assert!(matches!(AxisymGrid::build(&cfg, 8, 65, 10.0), Err(Error::Config(_))));
        assert!(matches!(AxisymGrid::build(&cfg, 16, 16, 10.0), Err(Error::Config(_))));
        assert!(AxisymGrid::from_extents(&cfg, 65, 65, 20.0, 20.5).is_err());
    }

    #[test]
    fn stored_extents_round_trip() {
        let cfg = DipoleConfig::new(0.7, 0.1).unwrap();
        let g = AxisymGrid::build(&cfg, 40, 77, 6.0).unwrap();
        let back = AxisymGrid::from_extents(&cfg, 40, 77, g.rho_max(), g.z_max()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn interpolation_reproduces_bilinear_data() {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let g = AxisymGrid::build(&cfg, 17, 33, 5.0).unwrap();
        let f = |r: f64, z: f64| 1.0 + 2.0 * r - 0.5 * z + 0.25 * r * z;
        let vals: Vec<f64> = (0..g.n_z())
            .flat_map(|j| (0..g.n_rho()).map(move |i| (i, j)))
            .map(|(i, j)| f(g.rho(i), g.z(j)))
            .collect();
        let v = g.interpolate(&vals, 1.37, 2.71).unwrap();
        assert!((v - f(1.37, 2.71)).abs() < 1e-12);
        assert!(g.interpolate(&vals, -0.1, 0.0).is_err());
    }
}
