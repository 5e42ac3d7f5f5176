//! Closed-form Born–Infeld field algebra for a pair of opposite unit charges.
//!
//! Units are Gaussian-style atomic units: unit charges, lengths in Bohr radii,
//! `∇·D = 4πρ`, and `β` carries the dimension of a length so that the field
//! strength saturates at `|E| = 1/β²`.
//!
//! The proton sits at `(0, 0, +r/2)` and the electron at `(0, 0, −r/2)`.
//! [`approx_field`] replaces the true displacement by the superposed Coulomb
//! field and pushes it through the constitutive law. That field is not a
//! gradient when `β > 0`, so its line integrals depend on the path
//! ([`line_integral_potential`], [`circulation`]).

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::quadrature::{self, Estimate, Tolerance};

/// Point or vector in space, in Bohr radii.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn on_axis(z: f64) -> Self {
        Self::new(0.0, 0.0, z)
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Euclidean norm, safe against overflow of the squares.
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Reflection across the `x,y` plane.
    pub fn mirrored(self) -> Vec3 {
        Vec3::new(self.x, self.y, -self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Two opposite unit charges on the `z` axis, mirror images across `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleConfig {
    separation: f64,
    beta: f64,
}

impl DipoleConfig {
    pub fn new(separation: f64, beta: f64) -> Result<Self> {
        if !(separation > 0.0 && separation.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "separation must be positive and finite, got {separation}"
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "beta must be non-negative and finite, got {beta}"
            )));
        }
        Ok(Self { separation, beta })
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Location of the positive charge, `(0, 0, r/2)`.
    pub fn proton(&self) -> Vec3 {
        Vec3::on_axis(0.5 * self.separation)
    }

    /// Location of the negative charge, `(0, 0, −r/2)`.
    pub fn electron(&self) -> Vec3 {
        Vec3::on_axis(-0.5 * self.separation)
    }

    /// Same `β`, different separation.
    pub fn with_separation(&self, separation: f64) -> Result<Self> {
        Self::new(separation, self.beta)
    }

    fn charges(&self) -> [(Vec3, f64); 2] {
        [(self.proton(), 1.0), (self.electron(), -1.0)]
    }
}

/// Displacement and field strength at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: Vec3,
    pub d: Vec3,
    pub e: Vec3,
}

impl FieldSample {
    /// Samples the Coulomb-approximation fields `D_C` and `e_from_d(D_C)`.
    pub fn coulomb_approx(point: Vec3, cfg: &DipoleConfig) -> Result<Self> {
        let d = coulomb_displacement(point, cfg)?;
        let e = e_from_d(d, cfg.beta)?;
        Ok(Self { point, d, e })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "beta must be non-negative and finite, got {beta}"
        )))
    }
}

/// Field strength from displacement: `E = D / √(1 + β⁴|D|²)`.
pub fn e_from_d(d: Vec3, beta: f64) -> Result<Vec3> {
    check_beta(beta)?;
    if !d.is_finite() {
        return Err(Error::InvalidInput(format!("displacement {d:?} is not finite")));
    }
    if beta == 0.0 {
        return Ok(d);
    }
    let b2 = beta * beta;
    let e = d * (1.0 / 1f64.hypot(b2 * d.norm()));
    // Rounding may land exactly on the saturation sphere; pull back inside.
    let k = b2 * e.norm();
    if k >= 1.0 {
        Ok(e * ((1.0 - f64::EPSILON) / k))
    } else {
        Ok(e)
    }
}

/// Displacement from field strength: `D = E / √(1 − β⁴|E|²)`.
pub fn d_from_e(e: Vec3, beta: f64) -> Result<Vec3> {
    check_beta(beta)?;
    if !e.is_finite() {
        return Err(Error::InvalidInput(format!("field {e:?} is not finite")));
    }
    let k = beta * beta * e.norm();
    if k >= 1.0 {
        return Err(Error::Domain(format!(
            "beta^2 |E| = {k} reaches the Born saturation limit 1"
        )));
    }
    Ok(e * (1.0 / ((1.0 - k) * (1.0 + k)).sqrt()))
}

/// `e_from_d(a) − e_from_d(b)` where `a − b` is supplied separately, so that a
/// large common part of `a` and `b` does not cancel catastrophically.
pub(crate) fn e_from_d_difference(a: Vec3, b: Vec3, a_minus_b: Vec3, beta: f64) -> Vec3 {
    if beta == 0.0 {
        return a_minus_b;
    }
    let b2 = beta * beta;
    let sa = 1f64.hypot(b2 * a.norm());
    let sb = 1f64.hypot(b2 * b.norm());
    // g(t) = (1 + β⁴t)^(−1/2);  g(|a|²) − g(|b|²) = −β⁴(|a|² − |b|²) / (sa sb (sa + sb))
    let dt = a_minus_b.dot(a + b);
    let dg = -(b2 * b2) * dt / (sa * sb * (sa + sb));
    a_minus_b * (1.0 / sa) + b * dg
}

/// Potential of one isolated unit charge at distance `s`:
/// `φ(s) = ∫_s^∞ dt / √(t⁴ + β⁴)`.
///
/// Finite at `s = 0` for `β > 0`, where it equals `Γ(1/4)² / (4√π β)`.
/// Reduces to `1/s` at `β = 0`.
pub fn exact_born_potential(s: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(s >= 0.0) || s.is_infinite() {
        return Err(Error::InvalidInput(format!(
            "distance must be non-negative and finite, got {s}"
        )));
    }
    if beta == 0.0 {
        if s == 0.0 {
            return Err(Error::Domain(
                "the Coulomb potential is singular at s = 0 when beta = 0".into(),
            ));
        }
        return Ok(1.0 / s);
    }
    Ok(reduced_born_potential(s / beta)? / beta)
}

/// `F(x) = ∫_x^∞ dt/√(t⁴+1)` via `t = x + c·u²/(1−u)`, `u ∈ [0, 1)`.
fn reduced_born_potential(x: f64) -> Result<f64> {
    let c = x.max(1.0);
    let est = quadrature::integrate(
        |u| {
            let one_minus = 1.0 - u;
            let t = x + c * u * u / one_minus;
            let jac = c * u * (2.0 - u) / (one_minus * one_minus);
            jac / (t * t).hypot(1.0)
        },
        0.0,
        1.0,
        &[],
        Tolerance::new(1e-300, 1e-15),
    )?;
    Ok(est.value)
}

/// Superposed Coulomb displacement of the two charges,
/// `D_C(s) = (s−s_p)/|s−s_p|³ − (s−s_e)/|s−s_e|³`.
pub fn coulomb_displacement(s: Vec3, cfg: &DipoleConfig) -> Result<Vec3> {
    if !s.is_finite() {
        return Err(Error::InvalidInput(format!("point {s:?} is not finite")));
    }
    let mut d = Vec3::ZERO;
    for (at, q) in cfg.charges() {
        let rel = s - at;
        let n = rel.norm();
        if n == 0.0 {
            return Err(Error::Singularity(format!(
                "Coulomb field evaluated at the charge located at {at:?}"
            )));
        }
        d = d + rel * (q / (n * n * n));
    }
    Ok(d)
}

/// Coulomb-approximation field strength `E ≈ e_from_d(D_C, β)`.
pub fn approx_field(s: Vec3, cfg: &DipoleConfig) -> Result<Vec3> {
    e_from_d(coulomb_displacement(s, cfg)?, cfg.beta)
}

/// Polyline along which fields are integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    waypoints: Vec<Vec3>,
    kind: PathKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    Open,
    Closed,
    /// The path arrives from infinity along the ray `waypoints[0] + t·direction`,
    /// `t` decreasing from `∞` to `0`.
    FromInfinity { direction: Vec3 },
}

/// Which straight axial ray leads to the electron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxialPath {
    /// Up the axis from `z = −∞`; never meets the proton.
    A,
    /// Down the axis from `z = +∞`, through the proton.
    B,
}

impl Path {
    pub fn open(waypoints: Vec<Vec3>) -> Result<Self> {
        Self::validate(&waypoints, 2)?;
        Ok(Self {
            waypoints,
            kind: PathKind::Open,
        })
    }

    /// Closed loop; the first and last waypoints must coincide.
    pub fn closed(waypoints: Vec<Vec3>) -> Result<Self> {
        Self::validate(&waypoints, 3)?;
        if waypoints.first() != waypoints.last() {
            return Err(Error::InvalidInput(
                "closed path must end at its first waypoint".into(),
            ));
        }
        Ok(Self {
            waypoints,
            kind: PathKind::Closed,
        })
    }

    /// Path entering from infinity along `direction` (pointing away from the
    /// first waypoint), then following the waypoints.
    pub fn from_infinity(direction: Vec3, waypoints: Vec<Vec3>) -> Result<Self> {
        Self::validate(&waypoints, 1)?;
        let n = direction.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ray direction {direction:?} must be finite and non-zero"
            )));
        }
        Ok(Self {
            waypoints,
            kind: PathKind::FromInfinity {
                direction: direction * (1.0 / n),
            },
        })
    }

    /// Axis-aligned rectangle `[ρ0, ρ1] × [z0, z1]` in the `x,z` half-plane,
    /// traversed counter-clockwise when viewed with `x` right and `z` up.
    pub fn meridian_rectangle(rho: (f64, f64), z: (f64, f64)) -> Result<Self> {
        let (r0, r1) = rho;
        let (z0, z1) = z;
        Self::closed(vec![
            Vec3::new(r0, 0.0, z0),
            Vec3::new(r1, 0.0, z0),
            Vec3::new(r1, 0.0, z1),
            Vec3::new(r0, 0.0, z1),
            Vec3::new(r0, 0.0, z0),
        ])
    }

    /// Straight axial path from infinity to the electron.
    pub fn axial(choice: AxialPath, cfg: &DipoleConfig) -> Self {
        let direction = match choice {
            AxialPath::A => -Vec3::Z,
            AxialPath::B => Vec3::Z,
        };
        Self {
            waypoints: vec![cfg.electron()],
            kind: PathKind::FromInfinity { direction },
        }
    }

    pub fn waypoints(&self) -> &[Vec3] {
        &self.waypoints
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    /// Reflection of the whole path across the `x,y` plane.
    pub fn mirrored(&self) -> Path {
        let kind = match self.kind {
            PathKind::FromInfinity { direction } => PathKind::FromInfinity {
                direction: direction.mirrored(),
            },
            k => k,
        };
        Path {
            waypoints: self.waypoints.iter().map(|p| p.mirrored()).collect(),
            kind,
        }
    }

    fn validate(waypoints: &[Vec3], min: usize) -> Result<()> {
        if waypoints.len() < min {
            return Err(Error::InvalidInput(format!(
                "path needs at least {min} waypoints, got {}",
                waypoints.len()
            )));
        }
        if let Some(p) = waypoints.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!("waypoint {p:?} is not finite")));
        }
        Ok(())
    }
}

/// 1D integral over `[lo, hi]` (or `[lo, ∞)` when `hi` is `None`) of an
/// integrand with odd, possibly non-integrable singularities at `folds`.
/// Each singularity is integrated in principal-value form over a symmetric
/// window, `∫_0^w f(c+u) + f(c−u) du`.
pub(crate) fn integrate_folded<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: Option<f64>,
    scale: f64,
    folds: &[f64],
    breaks: &[f64],
    tol: f64,
) -> Result<Estimate> {
    let upper = hi.unwrap_or(f64::INFINITY);
    let mut centers: Vec<f64> = folds.iter().copied().filter(|&c| c > lo && c < upper).collect();
    centers.sort_by(f64::total_cmp);
    centers.dedup();

    // Non-overlapping half-widths.
    let widths: Vec<f64> = (0..centers.len())
        .map(|k| {
            let left = if k == 0 { centers[k] - lo } else { 0.5 * (centers[k] - centers[k - 1]) };
            let right = if k + 1 < centers.len() {
                0.5 * (centers[k + 1] - centers[k])
            } else {
                upper - centers[k]
            };
            0.5 * left.min(right)
        })
        .collect();

    let pieces = 2 * centers.len() + 1;
    let share = Tolerance::absolute(tol / pieces as f64);
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    let mut accumulate = |e: Estimate| {
        total.value += e.value;
        total.error += e.error;
        total.evaluations += e.evaluations;
    };

    let mut start = lo;
    for (&c, &w) in centers.iter().zip(&widths) {
        accumulate(quadrature::integrate(&f, start, c - w, breaks, share)?);
        accumulate(quadrature::integrate(|u| f(c + u) + f(c - u), 0.0, w, &[], share)?);
        start = c + w;
    }
    match hi {
        Some(hi) => accumulate(quadrature::integrate(&f, start, hi, breaks, share)?),
        None => accumulate(quadrature::integrate_to_infinity(&f, start, scale, breaks, share)?),
    }
    Ok(total)
}

/// Where a straight line `a + t·dir` meets or approaches each charge.
struct LineContacts {
    /// Parameters at which the line passes exactly through a charge.
    hits: Vec<f64>,
    /// Parameters of closest approach to charges not on the line.
    near: Vec<f64>,
}

fn line_contacts(a: Vec3, dir: Vec3, cfg: &DipoleConfig) -> LineContacts {
    let mut hits = Vec::new();
    let mut near = Vec::new();
    let len2 = dir.norm_sq();
    for (c, _) in cfg.charges() {
        let t = (c - a).dot(dir) / len2;
        let miss = (a + dir * t - c).norm();
        if miss <= 1e-14 * (c.norm() + a.norm() + 1.0) {
            hits.push(t);
        } else {
            near.push(t);
        }
    }
    LineContacts { hits, near }
}

/// Signed `∫ E_approx · dl` over the whole path.
fn path_integral(path: &Path, cfg: &DipoleConfig, tol: f64, allow_hits: bool) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let pts = path.waypoints();
    let ray = match path.kind {
        PathKind::FromInfinity { direction } => Some(direction),
        _ => None,
    };
    let n_pieces = pts.len() - 1 + usize::from(ray.is_some());
    let share = tol / n_pieces.max(1) as f64;
    let beta = cfg.beta;

    let endpoint_hit = |t: f64, lo: f64, hi: f64| -> Result<()> {
        let at_end = (t - lo).abs() <= 1e-14 || (t - hi).abs() <= 1e-14;
        if !at_end {
            return Ok(());
        }
        if !allow_hits {
            return Err(Error::Singularity("path touches a charge".into()));
        }
        if beta == 0.0 {
            return Err(Error::Singularity(
                "path ends at a charge where the Coulomb field diverges (beta = 0)".into(),
            ));
        }
        Ok(())
    };

    let mut total = 0.0;
    if let Some(dir) = ray {
        // Inward ray: position p(L) = w0 + dir·L, L from ∞ to 0, dl = −dir dL.
        let w0 = pts[0];
        let contacts = line_contacts(w0, dir, cfg);
        for &t in &contacts.hits {
            endpoint_hit(t, 0.0, f64::INFINITY)?;
            if t > 0.0 && !allow_hits {
                return Err(Error::Singularity("path passes through a charge".into()));
            }
        }
        let scale = w0.norm() + cfg.separation + beta;
        let est = integrate_folded(
            |l| approx_field_unchecked(w0 + dir * l, cfg).dot(dir),
            0.0,
            None,
            scale,
            &contacts.hits,
            &contacts.near,
            share,
        )?;
        total -= est.value;
    }
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let dir = b - a;
        if dir.norm() == 0.0 {
            continue;
        }
        let contacts = line_contacts(a, dir, cfg);
        for &t in &contacts.hits {
            if (0.0..=1.0).contains(&t) {
                endpoint_hit(t, 0.0, 1.0)?;
                if !allow_hits {
                    return Err(Error::Singularity("path passes through a charge".into()));
                }
            }
        }
        let est = integrate_folded(
            |t| approx_field_unchecked(a + dir * t, cfg).dot(dir),
            0.0,
            Some(1.0),
            1.0,
            &contacts.hits,
            &contacts.near,
            share,
        )?;
        total += est.value;
    }
    Ok(total)
}

/// `approx_field` for quadrature nodes; NaN at an exact charge location, which
/// the Kronrod rule never samples (charges only sit at panel ends or fold centres).
fn approx_field_unchecked(s: Vec3, cfg: &DipoleConfig) -> Vec3 {
    match approx_field(s, cfg) {
        Ok(e) => e,
        Err(_) => Vec3::new(f64::NAN, f64::NAN, f64::NAN),
    }
}

/// Approximate potential at the last waypoint, `φ(end) = −∫_path E_approx · dl`,
/// taking the potential at the start of the path (or at infinity) as zero.
///
/// Passing through a charge is allowed; the Coulomb singularity is integrated
/// in principal-value form. Ending exactly on a charge is allowed only for
/// `β > 0`, where the integrand stays bounded by `1/β²`.
pub fn line_integral_potential(path: &Path, cfg: &DipoleConfig, tol: f64) -> Result<f64> {
    if path.kind == PathKind::Closed {
        return Err(Error::InvalidInput(
            "potential needs an open path; use circulation for loops".into(),
        ));
    }
    Ok(-path_integral(path, cfg, tol, true)?)
}

/// Circulation `∮ E_approx · dl` of a closed loop that avoids both charges.
/// Vanishes for `β = 0`.
pub fn circulation(loop_path: &Path, cfg: &DipoleConfig, tol: f64) -> Result<f64> {
    if loop_path.kind != PathKind::Closed {
        return Err(Error::InvalidInput("circulation needs a closed path".into()));
    }
    path_integral(loop_path, cfg, tol, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Γ(1/4)² / (4√π), the closed form of ∫₀^∞ dt/√(1+t⁴).
    const BORN_SELF: f64 = 1.854_074_677_301_372;

    #[test]
    fn constitutive_examples() {
        assert_eq!(e_from_d(Vec3::ZERO, 1.0).unwrap(), Vec3::ZERO);
        let e = e_from_d(Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap();
        assert!((e.x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!((e.y, e.z), (0.0, 0.0));

        let sat = e_from_d(Vec3::new(1e6, 0.0, 0.0), 1.0).unwrap();
        assert!((sat.norm() - 1.0).abs() < 1e-9);

        assert_eq!(d_from_e(Vec3::ZERO, 3.0).unwrap(), Vec3::ZERO);
        let d = d_from_e(Vec3::new(std::f64::consts::FRAC_1_SQRT_2, 0.0, 0.0), 1.0).unwrap();
        assert!((d.x - 1.0).abs() < 1e-15);
        assert!(matches!(d_from_e(Vec3::new(0.0, 1.0, 0.0), 1.0), Err(Error::Domain(_))));
        assert!(matches!(d_from_e(Vec3::new(0.0, 0.0, 0.25), 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn constitutive_rejects_bad_input() {
        assert!(matches!(
            e_from_d(Vec3::new(f64::NAN, 0.0, 0.0), 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(e_from_d(Vec3::ZERO, -1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(
            d_from_e(Vec3::new(f64::INFINITY, 0.0, 0.0), 0.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn saturation_survives_huge_displacements() {
        for mag in [1e10, 1e100, 1e300] {
            let e = e_from_d(Vec3::new(mag, -mag, mag), 0.5).unwrap();
            assert!(e.is_finite());
            assert!(e.norm() * 0.25 < 1.0);
        }
    }

    #[test]
    fn born_potential_examples() {
        assert_eq!(exact_born_potential(2.0, 0.0).unwrap(), 0.5);
        assert!((exact_born_potential(0.0, 1.0).unwrap() - BORN_SELF).abs() < 1e-12);
        let far = exact_born_potential(10.0, 1.0).unwrap();
        assert!((far - (0.1 - 1e-6)).abs() < 1e-8);
        assert!(matches!(exact_born_potential(0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(exact_born_potential(-1.0, 1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn born_potential_scales_with_beta() {
        // φ(s, β) = F(s/β)/β
        let a = exact_born_potential(0.7, 0.35).unwrap();
        let b = exact_born_potential(2.0, 1.0).unwrap();
        assert!((a - b / 0.35).abs() < 1e-13 * a);
        assert!((exact_born_potential(0.0, 0.3).unwrap() - BORN_SELF / 0.3).abs() < 1e-12);
    }

    #[test]
    fn coulomb_displacement_examples() {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let d = coulomb_displacement(Vec3::on_axis(2.0), &cfg).unwrap();
        assert!((d.z - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!((d.x, d.y), (0.0, 0.0));

        // In the mirror plane both charges are equidistant; the field is axial.
        let mid = coulomb_displacement(Vec3::new(1.0, 0.0, 0.0), &cfg).unwrap();
        assert!(mid.x.abs() < 1e-16);
        assert!((mid.z + 2.0 / 2f64.powf(1.5)).abs() < 1e-15);

        let s = 1e3;
        let far = coulomb_displacement(Vec3::on_axis(s), &cfg).unwrap();
        let dipole = 2.0 * 2.0 / (s * s * s);
        assert!((far.norm() - dipole).abs() < 0.01 * dipole);

        assert!(matches!(
            coulomb_displacement(cfg.proton(), &cfg),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn approx_field_examples() {
        let maxwell = DipoleConfig::new(2.0, 0.0).unwrap();
        let p = Vec3::new(0.3, -0.2, 0.9);
        assert_eq!(
            approx_field(p, &maxwell).unwrap(),
            coulomb_displacement(p, &maxwell).unwrap()
        );

        let cfg = DipoleConfig::new(2.0, 1.0).unwrap();
        let near = approx_field(cfg.proton() + Vec3::on_axis(1e-6), &cfg).unwrap();
        assert!((near.norm() - 1.0).abs() < 1e-9);

        let cfg = DipoleConfig::new(2.0, 0.1).unwrap();
        let e = approx_field(Vec3::ZERO, &cfg).unwrap();
        // D_C = (0, 0, −2) at the midpoint: the field runs from proton to electron.
        assert!((e.z + 2.0 / (1.0 + 1e-4 * 4.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn difference_helper_matches_direct_evaluation() {
        let a = Vec3::new(0.3, -1.2, 4.0);
        let b = Vec3::new(0.1, -1.0, 3.5);
        for beta in [0.0, 0.2, 1.0, 3.0] {
            let direct = e_from_d(a, beta).unwrap() - e_from_d(b, beta).unwrap();
            let diff = e_from_d_difference(a, b, a - b, beta);
            assert!((direct - diff).norm() < 1e-14, "beta = {beta}");
        }
    }

    #[test]
    fn path_constructors_validate() {
        assert!(Path::open(vec![Vec3::ZERO]).is_err());
        assert!(Path::closed(vec![Vec3::ZERO, Vec3::Z, Vec3::on_axis(2.0)]).is_err());
        assert!(Path::from_infinity(Vec3::ZERO, vec![Vec3::ZERO]).is_err());
        assert!(Path::open(vec![Vec3::ZERO, Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
        let rect = Path::meridian_rectangle((0.5, 1.0), (0.2, 0.4)).unwrap();
        assert_eq!(rect.waypoints().len(), 5);
        assert_eq!(rect.kind(), PathKind::Closed);
    }

    #[test]
    fn maxwell_axis_potential_matches_coulomb_pair() {
        // Stop a distance δ above the electron, coming down from +∞ through
        // the proton (principal value) and from −∞ below it.
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let delta = 0.25;
        let exact = |z: f64| 1.0 / (z - 1.0).abs() - 1.0 / (z + 1.0).abs();

        let stop = Vec3::on_axis(-1.0 + delta);
        let from_above = Path::from_infinity(Vec3::Z, vec![stop]).unwrap();
        let v = line_integral_potential(&from_above, &cfg, 1e-10).unwrap();
        assert!((v - exact(-1.0 + delta)).abs() < 1e-9, "{v}");

        let below = Vec3::on_axis(-1.0 - delta);
        let from_below = Path::from_infinity(-Vec3::Z, vec![below]).unwrap();
        let v = line_integral_potential(&from_below, &cfg, 1e-10).unwrap();
        assert!((v - exact(-1.0 - delta)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn maxwell_potential_ending_on_charge_is_singular() {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let err = line_integral_potential(&Path::axial(AxialPath::A, &cfg), &cfg, 1e-8);
        assert!(matches!(err, Err(Error::Singularity(_))));
    }

    #[test]
    fn single_charge_limit_matches_exact_potential() {
        // Far from the proton the electron is effectively alone, and along a
        // radial ray the approximate field is the exact single-charge field.
        let cfg = DipoleConfig::new(1e7, 0.5).unwrap();
        let phi = line_integral_potential(&Path::axial(AxialPath::A, &cfg), &cfg, 1e-10).unwrap();
        let exact = -exact_born_potential(0.0, 0.5).unwrap() + 1.0 / 1e7;
        assert!((phi - exact).abs() < 1e-9, "{phi} vs {exact}");
    }

    #[test]
    fn closed_path_needed_for_circulation() {
        let cfg = DipoleConfig::new(2.0, 0.3).unwrap();
        let open = Path::open(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]).unwrap();
        assert!(circulation(&open, &cfg, 1e-8).is_err());
        let through = Path::meridian_rectangle((0.0, 1.0), (0.5, 1.5)).unwrap();
        assert!(matches!(circulation(&through, &cfg, 1e-8), Err(Error::Singularity(_))));
        let rect = Path::meridian_rectangle((0.5, 1.0), (0.5, 1.5)).unwrap();
        assert!(line_integral_potential(&rect, &cfg, 1e-8).is_err());
    }
}
