//! Run configuration, built from command-line flags or read from a TOML
//! file. Unknown keys are rejected and every value is checked before any
//! computation starts.

use std::path::{Path, PathBuf};

use ball_accel::config::Constants;
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Logistic,
    Linf,
    Lp,
    BenchScaling,
    Lowerbound,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Logistic => "logistic",
            Task::Linf => "linf",
            Task::Lp => "lp",
            Task::BenchScaling => "bench-scaling",
            Task::Lowerbound => "lowerbound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    #[default]
    Subgradient,
    Greedy,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    /// Dense CSV; a seeded synthetic instance is generated when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default = "default_cols")]
    pub cols: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    /// Distance bound `R` for the solvers, domain radius for `lowerbound`.
    #[serde(default)]
    pub radius: Option<f64>,
    /// `bench-scaling`: sweep `R` at `r = 1`.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// `bench-scaling`: sweep `R/r` at `R = 8`; `lowerbound`: scaling sweep.
    #[serde(default)]
    pub ratios: Option<Vec<f64>>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_chain")]
    pub chain: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub strategy: StrategyKind,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Plot data CSV.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// TOML file overriding the solver constants.
    #[serde(default)]
    pub constants: Option<PathBuf>,
}

fn default_rows() -> usize {
    100
}
fn default_cols() -> usize {
    10
}
fn default_seed() -> u64 {
    1
}
fn default_chain() -> usize {
    8
}
fn default_trials() -> usize {
    20
}

impl RunConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            data: None,
            rows: default_rows(),
            cols: default_cols(),
            seed: default_seed(),
            eps: None,
            delta: None,
            p: None,
            radius: None,
            radii: None,
            ratios: None,
            seeds: None,
            chain: default_chain(),
            trials: default_trials(),
            strategy: StrategyKind::default(),
            out: None,
            trace: None,
            constants: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(match self.task {
            Task::Linf => 1e-2,
            _ => 1e-6,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(1e-3)
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or(4.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(config(format!("{name} must be positive and finite"))),
            _ => Ok(()),
        };
        positive("eps", self.eps)?;
        positive("radius", self.radius)?;
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(config("delta must lie in (0, 1)"));
            }
        }
        if let Some(p) = self.p {
            if !(p > 3.0 && p.is_finite()) {
                return Err(config("p must be greater than 3"));
            }
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(config("rows and cols must be positive"));
        }
        for (name, list) in [("radii", &self.radii), ("ratios", &self.ratios)] {
            if let Some(v) = list {
                if v.len() < 2 || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(config(format!("{name} needs at least two positive values")));
                }
            }
        }
        if self.radii.is_some() && self.ratios.is_some() && self.task == Task::BenchScaling {
            return Err(config("give either radii or ratios, not both"));
        }
        if matches!(&self.seeds, Some(s) if s.is_empty()) {
            return Err(config("seeds must not be empty"));
        }
        if self.task == Task::Lowerbound && (self.chain == 0 || self.trials == 0) {
            return Err(config("chain and trials must be positive"));
        }
        if self.data.is_some() && matches!(self.task, Task::BenchScaling | Task::Lowerbound) {
            return Err(config(format!("{} does not read data", self.task.name())));
        }
        Ok(())
    }

    pub fn load_constants(&self) -> Result<Constants> {
        let Some(path) = &self.constants else {
            return Ok(Constants::default());
        };
        let c: Constants = toml::from_str(&read(path)?).map_err(|e| config(format!("{}: {e}", path.display())))?;
        c.validate()?;
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
