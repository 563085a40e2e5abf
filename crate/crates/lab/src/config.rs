//! Experiment configuration files (JSON, strict schema).

use std::path::{Path, PathBuf};

use aniso_core::geometry::SpaceTimeBox;
use aniso_core::harnack::DEFAULT_C_SWEEP;
use aniso_core::solver::InitialData;
use aniso_core::{Boundary, Grid, PowerVector, SolverConfig, SpaceTimePoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{what} has {got} entries but dimension is {expected}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("p[{index}] = {value} is below 2")]
    ExponentBelowTwo { index: usize, value: f64 },
    #[error("p must be nondecreasing (p[{index}] breaks the order)")]
    UnsortedExponents { index: usize },
    #[error("domain side {axis} has nonpositive length {length}")]
    NonpositiveSpacing { axis: usize, length: f64 },
    #[error("grid dims[{axis}] = {value}: need at least 3 cells")]
    BadGridDims { axis: usize, value: i64 },
    #[error("snapshot times must be nonempty, finite, nonnegative and strictly increasing")]
    BadSnapshots,
    #[error("initial data: {0}")]
    InitialData(&'static str),
    #[error("solver: {0}")]
    Solver(&'static str),
    #[error("harnack: {0}")]
    Harnack(&'static str),
    #[error("hoelder: {0}")]
    Hoelder(&'static str),
    #[error("oracle: {0}")]
    Oracle(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BcConfig {
    Dirichlet(f64),
    Periodic,
    ZeroFlux,
}

impl From<BcConfig> for Boundary {
    fn from(b: BcConfig) -> Self {
        match b {
            BcConfig::Dirichlet(g) => Boundary::Dirichlet(g),
            BcConfig::Periodic => Boundary::Periodic,
            BcConfig::ZeroFlux => Boundary::ZeroFlux,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Bump {
        center: Vec<f64>,
        halfwidths: Vec<f64>,
        amplitude: f64,
        /// Added everywhere so the data are strictly positive.
        #[serde(default)]
        floor: f64,
    },
    Spike {
        center: Vec<f64>,
        mass: f64,
    },
    /// Uses the top-level seed.
    Random {
        max: f64,
    },
    Gaussian {
        time: f64,
    },
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub safety: f64,
    pub dt_max: Option<f64>,
    pub check_nonnegative: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { safety: d.safety, dt_max: d.dt_max, check_nonnegative: d.check_nonnegative }
    }
}

impl From<SolverSection> for SolverConfig {
    fn from(s: SolverSection) -> Self {
        SolverConfig { safety: s.safety, dt_max: s.dt_max, check_nonnegative: s.check_nonnegative }
    }
}

fn default_c() -> Vec<f64> {
    DEFAULT_C_SWEEP.to_vec()
}

fn default_stride() -> usize {
    4
}

fn default_threshold() -> f64 {
    1e-6
}

fn default_containment() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnackSection {
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    pub rho: Vec<f64>,
    /// Center times; each must be a snapshot time.
    pub times: Vec<f64>,
    /// Every `stride`-th interior node along each axis.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_threshold")]
    pub threshold_rel: f64,
    #[serde(default = "default_containment")]
    pub containment_factor: f64,
    /// Run the two-sided check with this γ.
    #[serde(default)]
    pub gamma_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub x: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormSection {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_lower: f64,
    pub t_upper: f64,
    pub alpha: f64,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_pairs() -> usize {
    1000
}

fn default_n_max() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoelderSection {
    pub apex: PointConfig,
    pub rho0: f64,
    pub c: f64,
    /// Defaults to the forward constant fitted at `c`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub seminorm: Option<SeminormSection>,
}

/// Compare the final snapshot with the heat kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub max_error: f64,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub p: Vec<f64>,
    pub domain: DomainConfig,
    /// Signed so that negative entries are reported instead of failing to parse.
    pub grid: Vec<i64>,
    pub bc: BcConfig,
    pub initial: InitialConfig,
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub harnack: Option<HarnackSection>,
    #[serde(default)]
    pub hoelder: Option<HoelderSection>,
    #[serde(default)]
    pub oracle: Option<OracleSection>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

fn increasing(v: &[f64]) -> bool {
    v.iter().all(|t| t.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
        Ok(Self::from_json(&text)?)
    }

    pub fn horizon(&self) -> f64 {
        self.snapshots.last().copied().unwrap_or(0.0)
    }

    pub fn power_vector(&self) -> Result<PowerVector, LabError> {
        Ok(PowerVector::new(self.p.clone())?)
    }

    pub fn grid(&self) -> Result<Grid, LabError> {
        let dims = self.grid.iter().map(|&d| d as usize).collect();
        Ok(Grid::covering(&self.domain.lower, &self.domain.upper, dims, self.bc.into())?)
    }

    pub fn initial_data(&self) -> InitialData {
        match &self.initial {
            InitialConfig::Bump { center, halfwidths, amplitude, .. } => {
                InitialData::Bump { center: center.clone(), halfwidths: halfwidths.clone(), amplitude: *amplitude }
            }
            InitialConfig::Spike { center, mass } => InitialData::Spike { center: center.clone(), mass: *mass },
            InitialConfig::Random { max } => InitialData::Random { max: *max, seed: self.seed },
            InitialConfig::Gaussian { time } => InitialData::Gaussian { time: *time },
            InitialConfig::Constant(v) => InitialData::Constant(*v),
        }
    }

    pub fn initial_field(&self, grid: &Grid) -> Result<Vec<f64>, LabError> {
        let mut u = self.initial_data().sample(grid)?;
        if let InitialConfig::Bump { floor, .. } = self.initial {
            u.iter_mut().for_each(|v| *v += floor);
        }
        Ok(u)
    }

    pub fn seminorm_box(&self) -> Option<Result<SpaceTimeBox, LabError>> {
        let s = self.hoelder.as_ref()?.seminorm.as_ref()?;
        Some(SpaceTimeBox::new(s.lower.clone(), s.upper.clone(), s.t_lower, s.t_upper).map_err(Into::into))
    }

    pub fn apex(&self) -> Option<SpaceTimePoint> {
        self.hoelder.as_ref().map(|h| SpaceTimePoint::new(h.apex.x.clone(), h.apex.t))
    }

    /// Checks every consistency rule before anything runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.dimension;
        if n == 0 {
            return Err(ConfigError::ZeroDimension);
        }
        let len = |what: &'static str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(ConfigError::LengthMismatch { what, expected: n, got })
            }
        };
        len("p", self.p.len())?;
        len("domain.lower", self.domain.lower.len())?;
        len("domain.upper", self.domain.upper.len())?;
        len("grid", self.grid.len())?;
        for (index, &value) in self.p.iter().enumerate() {
            if !(value >= 2.0) || !value.is_finite() {
                return Err(ConfigError::ExponentBelowTwo { index, value });
            }
            if index > 0 && value < self.p[index - 1] {
                return Err(ConfigError::UnsortedExponents { index });
            }
        }
        for axis in 0..n {
            let length = self.domain.upper[axis] - self.domain.lower[axis];
            if !positive(length) {
                return Err(ConfigError::NonpositiveSpacing { axis, length });
            }
            if self.grid[axis] < 3 {
                return Err(ConfigError::BadGridDims { axis, value: self.grid[axis] });
            }
        }
        if self.snapshots.is_empty() || !increasing(&self.snapshots) || self.snapshots[0] < 0.0 {
            return Err(ConfigError::BadSnapshots);
        }
        self.validate_initial()?;
        let s = &self.solver;
        if !(s.safety > 0.0 && s.safety <= 1.0) {
            return Err(ConfigError::Solver("safety must lie in (0, 1]"));
        }
        if s.dt_max.is_some_and(|d| !positive(d)) {
            return Err(ConfigError::Solver("dt_max must be positive"));
        }
        if let Some(h) = &self.harnack {
            self.validate_harnack(h)?;
        }
        if let Some(h) = &self.hoelder {
            self.validate_hoelder(h)?;
        }
        if let Some(o) = &self.oracle {
            if !positive(o.max_error) {
                return Err(ConfigError::Oracle("max_error must be positive"));
            }
            if !matches!(self.initial, InitialConfig::Gaussian { .. }) || self.p.iter().any(|&q| q != 2.0) {
                return Err(ConfigError::Oracle("needs gaussian initial data and p ≡ 2"));
            }
        }
        Ok(())
    }

    fn validate_initial(&self) -> Result<(), ConfigError> {
        let n = self.dimension;
        match &self.initial {
            InitialConfig::Bump { center, halfwidths, amplitude, floor } => {
                if center.len() != n || halfwidths.len() != n {
                    return Err(ConfigError::InitialData("bump center and halfwidths need one entry per axis"));
                }
                if !halfwidths.iter().all(|&w| positive(w)) {
                    return Err(ConfigError::InitialData("bump halfwidths must be positive"));
                }
                if !amplitude.is_finite() || !floor.is_finite() {
                    return Err(ConfigError::InitialData("bump amplitude and floor must be finite"));
                }
            }
            InitialConfig::Spike { center, mass } => {
                if center.len() != n {
                    return Err(ConfigError::InitialData("spike center needs one entry per axis"));
                }
                if !mass.is_finite() {
                    return Err(ConfigError::InitialData("spike mass must be finite"));
                }
            }
            InitialConfig::Random { max } => {
                if !positive(*max) {
                    return Err(ConfigError::InitialData("random max must be positive"));
                }
            }
            InitialConfig::Gaussian { time } => {
                if !positive(*time) {
                    return Err(ConfigError::InitialData("gaussian time must be positive"));
                }
            }
            InitialConfig::Constant(v) => {
                if !v.is_finite() {
                    return Err(ConfigError::InitialData("constant must be finite"));
                }
            }
        }
        Ok(())
    }

    fn validate_harnack(&self, h: &HarnackSection) -> Result<(), ConfigError> {
        if h.c.is_empty() || !h.c.iter().all(|&c| positive(c)) {
            return Err(ConfigError::Harnack("c sweep must be nonempty and positive"));
        }
        if h.rho.is_empty() || !h.rho.iter().all(|&r| positive(r)) {
            return Err(ConfigError::Harnack("rho list must be nonempty and positive"));
        }
        if h.times.is_empty() || !h.times.iter().all(|t| self.snapshots.contains(t)) {
            return Err(ConfigError::Harnack("center times must be snapshot times"));
        }
        if h.stride == 0 {
            return Err(ConfigError::Harnack("stride must be at least 1"));
        }
        if !(h.threshold_rel > 0.0 && h.threshold_rel < 1.0) {
            return Err(ConfigError::Harnack("threshold_rel must lie in (0, 1)"));
        }
        if !positive(h.containment_factor) {
            return Err(ConfigError::Harnack("containment_factor must be positive"));
        }
        if h.gamma_check.is_some_and(|g| !(g >= 1.0) || !g.is_finite()) {
            return Err(ConfigError::Harnack("gamma_check must be at least 1"));
        }
        Ok(())
    }

    fn validate_hoelder(&self, h: &HoelderSection) -> Result<(), ConfigError> {
        if h.apex.x.len() != self.dimension {
            return Err(ConfigError::Hoelder("apex needs one coordinate per axis"));
        }
        if !positive(h.rho0) || !positive(h.c) {
            return Err(ConfigError::Hoelder("rho0 and c must be positive"));
        }
        if h.gamma.is_some_and(|g| !(g > 1.0) || !g.is_finite()) {
            return Err(ConfigError::Hoelder("gamma must exceed 1"));
        }
        if h.gamma.is_none() && self.harnack.is_none() {
            return Err(ConfigError::Hoelder("gamma must be given when no harnack sweep is configured"));
        }
        if let Some(s) = &h.seminorm {
            if s.lower.len() != self.dimension || s.upper.len() != self.dimension {
                return Err(ConfigError::Hoelder("seminorm box needs one entry per axis"));
            }
            if !(s.alpha > 0.0 && s.alpha < 1.0) {
                return Err(ConfigError::Hoelder("seminorm alpha must lie in (0, 1)"));
            }
            if s.pairs == 0 {
                return Err(ConfigError::Hoelder("seminorm pairs must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "dimension": 2,
        "p": [2.2, 2.4],
        "domain": {"lower": [-1, -1], "upper": [1, 1]},
        "grid": [20, 20],
        "bc": "zero_flux",
        "initial": {"bump": {"center": [0, 0], "halfwidths": [0.5, 0.5], "amplitude": 1}},
        "snapshots": [0.0, 0.1]
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.out_dir, PathBuf::from("out"));
        assert_eq!(c.solver, SolverSection::default());
        assert_eq!(c.horizon(), 0.1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("\"dimension\"", "\"dimensoin\": 2, \"dimension\"");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(ConfigError::Parse(_))));
        let text = BASE.replace("\"amplitude\": 1", "\"amplitude\": 1, \"sigma\": 2");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn boundary_spellings() {
        let c = ExperimentConfig::from_json(&BASE.replace("\"zero_flux\"", "{\"dirichlet\": 0.5}")).unwrap();
        assert_eq!(c.bc, BcConfig::Dirichlet(0.5));
        let c = ExperimentConfig::from_json(&BASE.replace("\"zero_flux\"", "\"periodic\"")).unwrap();
        assert_eq!(c.bc, BcConfig::Periodic);
    }
}
