//! Interaction potential `V_β(r)` of the pair, from the variational solution
//! or from line integrals of the Coulomb-approximation field.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path as FsPath;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{e_from_d_difference, integrate_folded, AxialPath, DipoleConfig, Vec3};
use crate::minimizer::{
    build_grid, isolated_charge_value, minimize_with, MinimizerOptions, PotentialSolution,
};

/// How a potential sample was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Variational,
    PathA,
    PathB,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Variational => "variational",
            Method::PathA => "path_A",
            Method::PathB => "path_B",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "variational" => Some(Method::Variational),
            "path_A" => Some(Method::PathA),
            "path_B" => Some(Method::PathB),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Tabulated `V(r)` with monotone cubic interpolation of `r·V` between the
/// samples, `V = V(r₀)` below the first sample and `−1/r` beyond the last.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    r: Vec<f64>,
    v: Vec<f64>,
    beta: f64,
    method: Method,
    slopes: Vec<f64>,
}

impl RadialPotential {
    pub fn new(samples: &[(f64, f64)], beta: f64, method: Method) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("a radial potential needs at least one sample".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidInput(format!(
                    "sample radii must increase strictly, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(r, v)) = samples.iter().find(|(r, v)| !(*r > 0.0 && r.is_finite() && v.is_finite())) {
            return Err(Error::InvalidInput(format!("bad sample (r = {r}, V = {v})")));
        }
        let r: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let rv: Vec<f64> = r.iter().zip(&v).map(|(a, b)| a * b).collect();
        let slopes = pchip_slopes(&r, &rv);
        Ok(Self {
            r,
            v,
            beta,
            method,
            slopes,
        })
    }

    /// Exact `−1/r` on the given radii.
    pub fn coulomb(radii: &[f64]) -> Result<Self> {
        let samples: Vec<(f64, f64)> = radii.iter().map(|&r| (r, -1.0 / r)).collect();
        Self::new(&samples, 0.0, Method::Variational)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().copied().zip(self.v.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn first_radius(&self) -> f64 {
        self.r[0]
    }

    pub fn last_radius(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    /// Interpolated potential at `r > 0`.
    pub fn value(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.v[0];
        }
        if r >= self.r[n - 1] {
            return if r == self.r[n - 1] { self.v[n - 1] } else { -1.0 / r };
        }
        let k = self.r.partition_point(|&x| x <= r) - 1;
        let (x0, x1) = (self.r[k], self.r[k + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (y0, y1) = (x0 * self.v[k], x1 * self.v[k + 1]);
        let (t2, t3) = (t * t, t * t * t);
        let rv = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * self.slopes[k + 1];
        rv / r
    }

    /// CSV with header `r,V,beta,method`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,V,beta,method\n");
        for (r, v) in self.samples() {
            let _ = writeln!(out, "{r:.17e},{v:.17e},{:.17e},{}", self.beta, self.method);
        }
        out
    }

    pub fn write_csv(&self, path: &FsPath) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Reads a table written by [`RadialPotential::write_csv`]. Every row
    /// must carry the same `beta` and `method`.
    pub fn read_csv(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let bad = |line: usize, message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
        match lines.next() {
            Some((_, "r,V,beta,method")) => {}
            _ => return Err(bad(1, "expected header `r,V,beta,method`".into())),
        }
        let mut samples = Vec::new();
        let mut tag: Option<(f64, Method)> = None;
        for (line, row) in lines.filter(|(_, l)| !l.is_empty()) {
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != 4 {
                return Err(bad(line, format!("expected 4 fields, found {}", fields.len())));
            }
            let num = |k: usize, name: &str| {
                fields[k]
                    .parse::<f64>()
                    .map_err(|_| bad(line, format!("{name} `{}` is not a number", fields[k])))
            };
            let (r, v, beta) = (num(0, "r")?, num(1, "V")?, num(2, "beta")?);
            let method = Method::from_tag(fields[3])
                .ok_or_else(|| bad(line, format!("unknown method `{}`", fields[3])))?;
            match tag {
                None => tag = Some((beta, method)),
                Some(t) if t != (beta, method) => {
                    return Err(bad(line, "beta and method must be the same on every row".into()))
                }
                Some(_) => {}
            }
            samples.push((r, v));
        }
        let (beta, method) = tag.ok_or_else(|| bad(1, "table has no samples".into()))?;
        Self::new(&samples, beta, method).map_err(|e| bad(0, e.to_string()))
    }
}

/// Fritsch–Carlson derivatives for a monotone piecewise cubic Hermite interpolant.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// `V(r) = φ(p) − φ₁(p)`: the two-charge potential at the proton node minus
/// that of an isolated proton solved on the same grid to the same tolerance.
/// Returns `(r, V)`.
pub fn extract_variational(sol: &PotentialSolution) -> Result<(f64, f64)> {
    let report = sol.report();
    if !report.converged {
        return Err(Error::InvalidInput(format!(
            "solution is not converged (gradient norm {:e} > {:e})",
            report.gradient_norm, report.tolerance
        )));
    }
    let options = MinimizerOptions::with_tolerance(report.tolerance);
    let (own, _) = isolated_charge_value(sol.grid(), sol.config(), &options)?;
    Ok((sol.config().separation(), sol.proton_value() - own))
}

/// Separation used as "infinity" when subtracting the self-field of a path estimate.
pub fn far_separation(cfg: &DipoleConfig) -> f64 {
    1e3 * cfg.separation().max(cfg.beta())
}

/// `V(r) = −(φ_path(s_e; r) − φ_path(s_e; R)) − 1/R` with `R` from
/// [`far_separation`]; the last term restores the `−1/R` interaction still
/// present in the reference. Returns `(r, V)`.
///
/// Both estimates integrate along the same ray relative to the electron, so
/// the difference is integrated directly and the electron's self-field,
/// identical in both, never enters.
pub fn extract_path(cfg: &DipoleConfig, path: AxialPath, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let r = cfg.separation();
    let big = far_separation(cfg);
    let beta = cfg.beta();
    // Ray from the electron: s = s_e + dir·L, L ∈ (0, ∞).
    let dir = match path {
        AxialPath::A => -Vec3::Z,
        AxialPath::B => Vec3::Z,
    };
    let proton = |sep: f64, l: f64| {
        let rel = dir * l - Vec3::Z * sep;
        let n = rel.norm();
        rel * (1.0 / (n * n * n))
    };
    let integrand = |l: f64| {
        let own = dir * (-1.0 / (l * l));
        let (near, far) = (proton(r, l), proton(big, l));
        e_from_d_difference(own + near, own + far, near - far, beta).dot(dir)
    };
    let (folds, breaks): (Vec<f64>, Vec<f64>) = match path {
        AxialPath::A => (vec![], vec![r, big]),
        AxialPath::B => (vec![r, big], vec![]),
    };
    let mut pieces = vec![beta, r];
    pieces.extend(breaks);
    let est = integrate_folded(integrand, 0.0, None, r.max(beta), &folds, &pieces, tol)?;
    Ok((r, -est.value - 1.0 / big))
}

/// Grid and solver settings for variational samples.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSettings {
    pub n_rho: usize,
    pub n_z: usize,
    pub extent_factor: f64,
    pub options: MinimizerOptions,
}

impl Default for VariationalSettings {
    fn default() -> Self {
        Self {
            n_rho: 129,
            n_z: 129,
            extent_factor: 10.0,
            options: MinimizerOptions::default(),
        }
    }
}

/// Everything [`tabulate`] may need besides `β`, the radii and the method.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulateSettings {
    pub variational: VariationalSettings,
    pub path_tolerance: f64,
    /// Samples computed concurrently; `None` uses every available thread.
    pub threads: Option<usize>,
}

impl Default for TabulateSettings {
    fn default() -> Self {
        Self {
            variational: VariationalSettings::default(),
            path_tolerance: 1e-10,
            threads: None,
        }
    }
}

/// One variational sample: a full solve at separation `cfg.separation()`.
pub fn variational_sample(cfg: &DipoleConfig, settings: &VariationalSettings) -> Result<(f64, f64)> {
    let grid = build_grid(cfg, settings.n_rho, settings.n_z, settings.extent_factor)?;
    let sol = minimize_with(&grid, cfg, &settings.options, None)?;
    extract_variational(&sol)
}

/// `V_β` at every radius of `r_list`, in order.
pub fn tabulate(
    beta: f64,
    r_list: &[f64],
    method: Method,
    settings: &TabulateSettings,
) -> Result<RadialPotential> {
    if r_list.is_empty() {
        return Err(Error::InvalidInput("no radii requested".into()));
    }
    if let Some(w) = r_list.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "radii must increase strictly, got {} then {}",
            w[0], w[1]
        )));
    }
    let configs = r_list
        .iter()
        .map(|&r| DipoleConfig::new(r, beta))
        .collect::<Result<Vec<_>>>()?;
    let sample = |cfg: &DipoleConfig| -> Result<(f64, f64)> {
        let out = match method {
            Method::Variational => variational_sample(cfg, &settings.variational),
            Method::PathA => extract_path(cfg, AxialPath::A, settings.path_tolerance),
            Method::PathB => extract_path(cfg, AxialPath::B, settings.path_tolerance),
        };
        out.map_err(|e| Error::Sample {
            r: cfg.separation(),
            source: Box::new(e),
        })
    };
    let run = || configs.par_iter().map(sample).collect::<Result<Vec<_>>>();
    let samples = match settings.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(run)?,
        None => run()?,
    };
    RadialPotential::new(&samples, beta, method)
}
