use std::path::{Path, PathBuf};

use borninfeld::extraction::Method;
use borninfeld::minimizer::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE, MIN_NODES};
use borninfeld::schrodinger::RadialMesh;
use serde::Deserialize;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "BORNINFELD_OUT";
const FALLBACK_OUT: &str = "borninfeld-out";

/// Key reference printed by `--help`.
pub const KEYS_HELP: &str = "\
CONFIG FILE KEYS (JSON object; unknown keys are rejected, every key is optional):
  beta                  list of Born parameters, each >= 0
  r                     list of separations, each > 0, strictly increasing
  method                \"variational\" | \"path_A\" | \"path_B\" (default variational)
  table                 potential table read by `spectrum` (CSV r,V,beta,method)
  output_dir            output directory; overrides $BORNINFELD_OUT
  threads               worker threads for sweeps (default: all cores)
  grid.n_rho            nodes across rho (default 129)
  grid.n_z              nodes along z (default 129)
  grid.extent_factor    domain size in units of r (default 10)
  radial.r_min          inner end of the radial mesh (default 1e-8)
  radial.r_max          outer end of the radial mesh (default 80)
  radial.points         interior radial nodes (default 8000)
  radial.n_max          highest principal number (default 4)
  radial.ell_max        highest orbital number, below n_max (default 2)
  tolerances.minimizer  scaled gradient tolerance (default 1e-8)
  tolerances.max_iterations  minimizer iteration cap (default 100000)
  tolerances.quadrature absolute tolerance of line integrals (default 1e-10)

Command-line flags override the file. The output directory is taken from
--out, then output_dir, then $BORNINFELD_OUT, then ./borninfeld-out.";

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub beta: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub method: Option<String>,
    pub table: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub grid: GridKeys,
    #[serde(default)]
    pub radial: RadialKeys,
    #[serde(default)]
    pub tolerances: ToleranceKeys,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridKeys {
    pub n_rho: Option<usize>,
    pub n_z: Option<usize>,
    pub extent_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RadialKeys {
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub points: Option<usize>,
    pub n_max: Option<u32>,
    pub ell_max: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToleranceKeys {
    pub minimizer: Option<f64>,
    pub max_iterations: Option<usize>,
    pub quadrature: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let inner = e.into_inner();
            let at = format!("{}:{}:{}", origin.display(), inner.line(), inner.column());
            if key == "." {
                format!("{at}: {inner}")
            } else {
                format!("{at}: key `{key}`: {inner}")
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path).map_err(ConfigError::Invalid)
    }

    /// Copies every `Some` field of `over` onto `self`.
    pub fn overlay(&mut self, over: FileConfig) {
        fn set<T>(dst: &mut Option<T>, src: Option<T>) {
            if src.is_some() {
                *dst = src;
            }
        }
        set(&mut self.beta, over.beta);
        set(&mut self.r, over.r);
        set(&mut self.method, over.method);
        set(&mut self.table, over.table);
        set(&mut self.output_dir, over.output_dir);
        set(&mut self.threads, over.threads);
        set(&mut self.grid.n_rho, over.grid.n_rho);
        set(&mut self.grid.n_z, over.grid.n_z);
        set(&mut self.grid.extent_factor, over.grid.extent_factor);
        set(&mut self.radial.r_min, over.radial.r_min);
        set(&mut self.radial.r_max, over.radial.r_max);
        set(&mut self.radial.points, over.radial.points);
        set(&mut self.radial.n_max, over.radial.n_max);
        set(&mut self.radial.ell_max, over.radial.ell_max);
        set(&mut self.tolerances.minimizer, over.tolerances.minimizer);
        set(&mut self.tolerances.max_iterations, over.tolerances.max_iterations);
        set(&mut self.tolerances.quadrature, over.tolerances.quadrature);
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Invalid(String),
    Io(String),
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beta: Vec<f64>,
    pub r: Vec<f64>,
    pub method: Method,
    pub table: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    pub n_rho: usize,
    pub n_z: usize,
    pub extent_factor: f64,
    pub mesh: RadialMesh,
    pub n_max: u32,
    pub ell_max: u32,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub quadrature_tolerance: f64,
}

fn positive(key: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("key `{key}`: must be positive and finite, got {v}"))
    }
}

fn list(key: &str, v: &Option<Vec<f64>>) -> Result<Vec<f64>, String> {
    match v {
        Some(v) if v.is_empty() => Err(format!("key `{key}`: list must not be empty")),
        Some(v) => Ok(v.clone()),
        None => Ok(Vec::new()),
    }
}

impl RunConfig {
    /// `env_out` is the value of [`OUT_ENV`], if set.
    pub fn resolve(file: &FileConfig, env_out: Option<PathBuf>) -> Result<Self, String> {
        let beta = list("beta", &file.beta)?;
        if let Some(b) = beta.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(format!("key `beta`: values must be non-negative and finite, got {b}"));
        }
        let r = list("r", &file.r)?;
        for &x in &r {
            positive("r", x)?;
        }
        if let Some(w) = r.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(format!("key `r`: values must increase strictly, got {} then {}", w[0], w[1]));
        }
        let method = match &file.method {
            None => Method::Variational,
            Some(tag) => Method::from_tag(tag).ok_or_else(|| {
                format!("key `method`: expected variational, path_A or path_B, got `{tag}`")
            })?,
        };
        let count = |key: &str, v: Option<usize>, default: usize, min: usize| -> Result<usize, String> {
            let v = v.unwrap_or(default);
            if v < min {
                Err(format!("key `{key}`: must be at least {min}, got {v}"))
            } else {
                Ok(v)
            }
        };
        let n_rho = count("grid.n_rho", file.grid.n_rho, 129, MIN_NODES)?;
        let n_z = count("grid.n_z", file.grid.n_z, 129, MIN_NODES)?;
        let extent_factor = positive("grid.extent_factor", file.grid.extent_factor.unwrap_or(10.0))?;
        let default_mesh = RadialMesh::default();
        let r_min = positive("radial.r_min", file.radial.r_min.unwrap_or(default_mesh.r_min))?;
        let r_max = positive("radial.r_max", file.radial.r_max.unwrap_or(default_mesh.r_max))?;
        if r_max <= r_min {
            return Err(format!("key `radial.r_max`: must exceed radial.r_min ({r_min}), got {r_max}"));
        }
        let points = count("radial.points", file.radial.points, default_mesh.points, 3)?;
        let n_max = file.radial.n_max.unwrap_or(4);
        if n_max < 1 {
            return Err("key `radial.n_max`: must be at least 1".into());
        }
        let ell_max = file.radial.ell_max.unwrap_or(2.min(n_max - 1));
        if ell_max >= n_max {
            return Err(format!("key `radial.ell_max`: must be below n_max ({n_max}), got {ell_max}"));
        }
        let tolerance = positive("tolerances.minimizer", file.tolerances.minimizer.unwrap_or(DEFAULT_TOLERANCE))?;
        let max_iterations = count(
            "tolerances.max_iterations",
            file.tolerances.max_iterations,
            DEFAULT_MAX_ITERATIONS,
            1,
        )?;
        let quadrature_tolerance = positive("tolerances.quadrature", file.tolerances.quadrature.unwrap_or(1e-10))?;
        if file.threads == Some(0) {
            return Err("key `threads`: must be at least 1".into());
        }
        let output_dir = file
            .output_dir
            .clone()
            .or(env_out)
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT));
        Ok(Self {
            beta,
            r,
            method,
            table: file.table.clone(),
            output_dir,
            threads: file.threads,
            n_rho,
            n_z,
            extent_factor,
            mesh: RadialMesh {
                r_min,
                r_max,
                points,
            },
            n_max,
            ell_max,
            tolerance,
            max_iterations,
            quadrature_tolerance,
        })
    }

    pub fn require_sweep(&self) -> Result<(), String> {
        if self.beta.is_empty() {
            return Err("key `beta` is required (config file or --beta)".into());
        }
        if self.r.is_empty() {
            return Err("key `r` is required (config file or --r)".into());
        }
        Ok(())
    }
}
