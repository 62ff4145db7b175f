use std::path::{Path, PathBuf};

use heine_core::fluctuation::RadialTestFunction;
use heine_core::orthopoly::SmoothStep;
use heine_core::potential::{PotentialSpec, RadialPotential};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;
use crate::gn::GapSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Unit-mass droplet with a zero-area outpost ring.
    Outpost,
    /// Two droplet components separated by a ring-shaped gap.
    Gap,
    /// Single connected droplet.
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Ginibre,
    GinibreOutpost,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source", deny_unknown_fields)]
pub enum PotentialSource {
    /// Built-in potential, optionally replaced by `Q/scale`.
    Builtin {
        name: Builtin,
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        rmax: Option<f64>,
    },
    /// JSON potential file, relative to the config file.
    File { path: PathBuf },
    Inline { spec: PotentialSpec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum TestFunctionSpec {
    Power { exponent: f64 },
    Log,
    Constant { value: f64 },
    /// The smooth step across the gap.
    Step,
}

impl TestFunctionSpec {
    pub fn build(&self, omega: Option<SmoothStep<f64>>) -> Result<RadialTestFunction<f64>, HarnessError> {
        Ok(match self {
            TestFunctionSpec::Power { exponent } => RadialTestFunction::power(*exponent),
            TestFunctionSpec::Log => RadialTestFunction::log(),
            TestFunctionSpec::Constant { value } => RadialTestFunction::constant(*value),
            TestFunctionSpec::Step => RadialTestFunction::step(
                omega.ok_or_else(|| HarnessError::Config("the step test function needs a gap".into()))?,
            ),
        })
    }

    pub fn label(&self) -> String {
        match self {
            TestFunctionSpec::Power { exponent } => format!("r^{exponent}"),
            TestFunctionSpec::Log => "log r".into(),
            TestFunctionSpec::Constant { value } => format!("const {value}"),
            TestFunctionSpec::Step => "step".into(),
        }
    }
}

/// Ellipse geometry with a level-curve outpost.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalSpec {
    pub semi_axes: [f64; 2],
    pub rho: f64,
    pub delta_inner: f64,
    pub delta_outer: f64,
    #[serde(default)]
    pub modes: Option<usize>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_replicas() -> usize {
    10_000
}

fn default_table_points() -> usize {
    heine_core::sampler::TABLE_POINTS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub potential: PotentialSource,
    pub mode: Mode,
    /// Mass inside the gap; `1` for an outpost.
    #[serde(default)]
    pub tau_star: Option<f64>,
    pub n: Vec<usize>,
    #[serde(default)]
    pub s_grid: Vec<f64>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Perturbation strength for norm tables.
    #[serde(default)]
    pub s: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_table_points")]
    pub table_points: usize,
    #[serde(default)]
    pub test_functions: Vec<TestFunctionSpec>,
    #[serde(default)]
    pub conformal: Option<ConformalSpec>,
    /// Per-gap data for the oscillation term; derived from the potential when absent.
    #[serde(default)]
    pub gaps: Option<Vec<GapSpec>>,
}

/// Parsed config with its source text and location.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: PathBuf,
    pub raw: String,
}

/// 1-based line of the first occurrence of `"key"`, if any.
fn line_of(raw: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    raw.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&raw, path)
    }

    pub fn parse(raw: &str, path: &Path) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = serde_json::from_str(raw).map_err(|e| {
            HarnessError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        })?;
        let loaded = Self {
            config,
            path: path.to_path_buf(),
            raw: raw.to_string(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn fail(&self, key: &str, msg: impl std::fmt::Display) -> HarnessError {
        match line_of(&self.raw, key) {
            Some(l) => HarnessError::Config(format!("{}:{l}: {key}: {msg}", self.path.display())),
            None => HarnessError::Config(format!("{}: {key}: {msg}", self.path.display())),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let c = &self.config;
        if c.schema_version != SCHEMA_VERSION {
            return Err(self.fail("schema_version", format!("unsupported version {}", c.schema_version)));
        }
        if c.n.is_empty() {
            return Err(self.fail("n", "at least one size is required"));
        }
        if let Some(&bad) = c.n.iter().find(|&&n| n < 32) {
            return Err(self.fail("n", format!("sizes must be at least 32, got {bad}")));
        }
        let nmin = *c.n.iter().min().unwrap();
        let smax = (nmin as f64).ln();
        for (key, grid) in [("s_grid", &c.s_grid), ("t_grid", &c.t_grid)] {
            if grid.iter().any(|x| !x.is_finite()) {
                return Err(self.fail(key, "grid values must be finite"));
            }
        }
        if let Some(s) = c.s_grid.iter().chain(std::iter::once(&c.s)).find(|s| s.abs() > smax) {
            let key = if c.s_grid.contains(s) { "s_grid" } else { "s" };
            return Err(self.fail(key, format!("|s| = {} exceeds log(min n) = {smax:.4}", s.abs())));
        }
        if !c.s.is_finite() {
            return Err(self.fail("s", "must be finite"));
        }
        match (c.mode, c.tau_star) {
            (Mode::Gap, None) => return Err(self.fail("mode", "gap mode needs tau_star")),
            (Mode::Gap, Some(t)) if !(t > 0.0 && t < 1.0) => {
                return Err(self.fail("tau_star", format!("must lie in (0, 1), got {t}")))
            }
            (Mode::Outpost, Some(t)) if t != 1.0 => return Err(self.fail("tau_star", "an outpost has tau_star = 1")),
            _ => {}
        }
        if c.table_points < 64 {
            return Err(self.fail("table_points", "at least 64 nodes are required"));
        }
        if let Some(cs) = &c.conformal {
            let [a, b] = cs.semi_axes;
            if !(a > 0.0 && b > 0.0 && cs.rho > 1.0 && cs.delta_inner > 0.0 && cs.delta_outer > 0.0) {
                return Err(self.fail("conformal", "needs positive axes and Laplacians and rho > 1"));
            }
        }
        if let Some(gaps) = &c.gaps {
            if let Some(g) = gaps.iter().find(|g| !(g.rho > 0.0 && g.rho < 1.0)) {
                return Err(self.fail("gaps", format!("rho must lie in (0, 1), got {}", g.rho)));
            }
            if gaps.iter().any(|g| !(g.delta_inner > 0.0 && g.delta_outer > 0.0 && g.tau > 0.0 && g.tau < 1.0)) {
                return Err(self.fail("gaps", "Laplacians must be positive and tau in (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn tau_star(&self) -> f64 {
        match self.config.mode {
            Mode::Gap => self.config.tau_star.unwrap_or(1.0),
            _ => 1.0,
        }
    }

    /// SHA-256 of the config text as given.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.raw.as_bytes()))
    }

    pub fn potential(&self) -> Result<RadialPotential<f64>, HarnessError> {
        let pot = match &self.config.potential {
            PotentialSource::Builtin { name, scale, rmax } => {
                let base = match name {
                    Builtin::Ginibre => RadialPotential::ginibre(rmax.unwrap_or(3.0)),
                    Builtin::GinibreOutpost => RadialPotential::ginibre_outpost(),
                };
                match scale {
                    Some(t) => base.scaled(*t).map_err(|e| self.fail("scale", e))?,
                    None => base,
                }
            }
            PotentialSource::File { path } => {
                let full = self.path.parent().unwrap_or(Path::new(".")).join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| self.fail("path", format!("cannot read {}: {e}", full.display())))?;
                let spec: PotentialSpec<f64> = serde_json::from_str(&text).map_err(|e| {
                    HarnessError::Config(format!("{}:{}:{}: {e}", full.display(), e.line(), e.column()))
                })?;
                RadialPotential::from_spec(spec).map_err(|e| self.fail("path", e))?
            }
            PotentialSource::Inline { spec } => RadialPotential::from_spec(spec.clone()).map_err(|e| self.fail("spec", e))?,
        };
        Ok(pot)
    }
}
