//! Flat `key=value` run configuration.
//!
//! ```text
//! # comment
//! mesh.divisions=4,8,8,8
//! scenario=example2
//! solver.kind=aha
//! slice=z=0.5,t=0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hodge4d::io::SliceSpec;
use hodge4d::scenarios::{Example2Config, SolverChoice};
use hodge4d::solver::{AhaParams, Augmentation};
use hodge4d::{Form1Value, DIM};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Example1,
    Example2,
    /// Constant source with homogeneous boundary values.
    Custom,
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "example1" => Ok(Scenario::Example1),
            "example2" => Ok(Scenario::Example2),
            "custom" => Ok(Scenario::Custom),
            _ => err(format!(
                "unknown scenario `{s}` (example1, example2, custom)"
            )),
        }
    }
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Example1 => "example1",
            Scenario::Example2 => "example2",
            Scenario::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Aha,
    Krylov,
    Mixed,
}

impl FromStr for SolverKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "aha" => Ok(SolverKind::Aha),
            "krylov" => Ok(SolverKind::Krylov),
            "mixed" => Ok(SolverKind::Mixed),
            _ => err(format!("unknown solver `{s}` (aha, krylov, mixed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub divisions: [usize; DIM],
    pub extents: [f64; DIM],
    pub time_periodic: bool,
    pub scenario: Scenario,
    pub solver: SolverKind,
    pub aha: AhaParams,
    pub load_quadrature: usize,
    pub error_quadrature: usize,
    pub levels: Vec<usize>,
    pub output_dir: PathBuf,
    pub csv: PathBuf,
    pub slices: Vec<SliceSpec>,
    pub example2: Example2Config,
    pub custom_source: Form1Value,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            divisions: [4; DIM],
            extents: [1.0; DIM],
            time_periodic: false,
            scenario: Scenario::Example1,
            solver: SolverKind::Aha,
            aha: AhaParams::default(),
            load_quadrature: hodge4d::assembly::LOAD_QUADRATURE,
            error_quadrature: hodge4d::assembly::LOAD_QUADRATURE,
            levels: vec![4, 6, 8],
            output_dir: PathBuf::from("."),
            csv: PathBuf::from("conv.csv"),
            slices: Vec::new(),
            example2: Example2Config::default(),
            custom_source: Form1Value::ZERO,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError(format!("{key}: cannot parse `{v}`")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',').map(|s| parse(key, s)).collect()
}

fn array<T: FromStr + Copy, const N: usize>(key: &str, v: &str) -> Result<[T; N], ConfigError> {
    let items: Vec<T> = list(key, v)?;
    items
        .try_into()
        .map_err(|_| ConfigError(format!("{key}: expected {N} comma-separated values")))
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse(key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        err(format!("{key}: must be positive"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| ConfigError(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let e2 = &mut self.example2;
        match key {
            "mesh.divisions" => self.divisions = array(key, v)?,
            "mesh.extents" => self.extents = array(key, v)?,
            "mesh.time_periodic" => self.time_periodic = parse(key, v)?,
            "scenario" => self.scenario = v.parse()?,
            "solver.kind" => self.solver = v.parse()?,
            "solver.delta" => self.aha.delta = Some(positive(key, v)?),
            "solver.omega" => self.aha.omega = Some(positive(key, v)?),
            "solver.tol" => self.aha.tol = positive(key, v)?,
            "solver.max_iter" => self.aha.max_iter = Some(parse(key, v)?),
            "solver.lambda_hat" => self.aha.lambda_hat = Some(positive(key, v)?),
            "solver.augmentation" => {
                self.aha.augmentation = match v {
                    "auto" => Augmentation::Auto,
                    "none" => Augmentation::None,
                    _ => Augmentation::Fixed(parse(key, v)?),
                }
            }
            "quadrature.load" => self.load_quadrature = parse(key, v)?,
            "quadrature.error" => self.error_quadrature = parse(key, v)?,
            "convergence.levels" => self.levels = list(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "output.csv" => self.csv = PathBuf::from(v),
            "slice" => {
                for s in v.split(';').filter(|s| !s.trim().is_empty()) {
                    self.slices.push(
                        SliceSpec::parse(s.trim())
                            .map_err(|e| ConfigError(format!("{key}: {e}")))?,
                    );
                }
            }
            "source.custom" => self.custom_source = Form1Value::from_array(array(key, v)?),
            "example2.coil_inner" => e2.coil_inner = parse(key, v)?,
            "example2.coil_outer" => e2.coil_outer = parse(key, v)?,
            "example2.coil_z" => e2.coil_z = parse(key, v)?,
            "example2.j0" => e2.j0 = parse(key, v)?,
            "example2.electrode_lo" => e2.electrode_lo = array(key, v)?,
            "example2.electrode_hi" => e2.electrode_hi = array(key, v)?,
            "example2.v0" => e2.v0 = parse(key, v)?,
            "example2.period" => e2.period = Some(positive(key, v)?),
            _ => return err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Checks everything that can be checked before allocating a mesh.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.divisions.contains(&0) {
            return err("mesh.divisions: every axis needs at least one cell");
        }
        if self.extents.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return err("mesh.extents: must be positive");
        }
        if self.time_periodic && self.divisions[0] < 2 {
            return err("mesh.time_periodic needs at least two time slabs");
        }
        if self.levels.is_empty()
            || self.levels.contains(&0)
            || self.levels.windows(2).any(|w| w[1] <= w[0])
        {
            return err("convergence.levels: must be positive and strictly increasing");
        }
        if self.load_quadrature < 2 {
            return err("quadrature.load: at least 2 points per axis");
        }
        if self.error_quadrature < 1 {
            return err("quadrature.error: at least 1 point per axis");
        }
        if self.aha.max_iter == Some(0) {
            return err("solver.max_iter: must be positive");
        }
        if let Augmentation::Fixed(g) = self.aha.augmentation {
            if !(g >= 0.0 && g.is_finite()) {
                return err("solver.augmentation: must be auto, none or a non-negative number");
            }
        }
        if !self.custom_source.is_finite() {
            return err("source.custom: values must be finite");
        }
        Ok(())
    }

    pub fn solver_choice(&self) -> SolverChoice {
        match self.solver {
            SolverKind::Aha => SolverChoice::Aha(self.aha),
            SolverKind::Krylov => SolverChoice::Krylov,
            SolverKind::Mixed => SolverChoice::Mixed,
        }
    }

    /// `output.dir`, itself redirected by `HODGE4D_OUT` when relative.
    pub fn output_dir(&self) -> PathBuf {
        hodge4d::io::output_path(&self.output_dir)
    }
}
