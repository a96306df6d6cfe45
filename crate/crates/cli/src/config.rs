use std::collections::HashSet;
use std::path::PathBuf;

use qab_core::dynamics::log_grid;
use qab_core::geometry::{FdSteps, GridAxis, GridSpec};
use qab_core::hamiltonians::ProblemSpec;
use qab_core::observables::{SeriesKind, StateSource};
use qab_core::paths::ShootingOptions;
use qab_core::GAP_FLOOR;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Rc,
    Geo1,
    Geo2,
    Geo4,
    Linear,
}

impl PathKind {
    pub fn label(self) -> &'static str {
        match self {
            PathKind::Rc => "rc",
            PathKind::Geo1 => "geo1",
            PathKind::Geo2 => "geo2",
            PathKind::Geo4 => "geo4",
            PathKind::Linear => "linear",
        }
    }

    pub fn dim(self) -> usize {
        if self == PathKind::Geo4 {
            4
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid { min: 1.0, max: 300.0, count: 60, spacing: Spacing::Log }
    }
}

impl TGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self.spacing {
            Spacing::Log => log_grid(self.min, self.max, self.count).map_err(|e| CliError::Config(format!("t_grid: {e}"))),
            Spacing::Linear => Ok((0..self.count)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
                .collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesConfig {
    /// Uniform `s` samples including both ends.
    pub samples: usize,
    pub kinds: Vec<SeriesKind>,
    pub state: StateSource,
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        ObservablesConfig { samples: 201, kinds: SeriesKind::ALL.to_vec(), state: StateSource::GroundState }
    }
}

/// Fault injection used by the test suite.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestHooks {
    /// Added to the closed-form gap in `verify`.
    pub gap_offset: f64,
    /// Replaces the metric by the identity in `curvature-map`.
    pub flat_metric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub paths: Vec<PathKind>,
    pub t_grid: TGrid,
    /// Propagation steps per unit `s`.
    pub steps_per_unit: usize,
    /// Samples of the analytic paths (rc, geo1, linear).
    pub samples: usize,
    pub shooting: ShootingOptions,
    pub grid: GridSpec,
    pub fd_steps: FdSteps,
    pub gap_floor: f64,
    pub overlay_samples: usize,
    pub observables: ObservablesConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub test_hooks: TestHooks,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let axis = GridAxis { min: 0.0, max: 1.0, count: 64 };
        ExperimentConfig {
            problem: ProblemSpec::Grover { n: 3, marked: None },
            paths: vec![PathKind::Rc, PathKind::Geo2],
            t_grid: TGrid::default(),
            steps_per_unit: 20_000,
            samples: 2001,
            shooting: ShootingOptions::default(),
            grid: GridSpec { x1: axis, x2: axis },
            fd_steps: FdSteps::default(),
            gap_floor: GAP_FLOOR,
            overlay_samples: 201,
            observables: ObservablesConfig::default(),
            out: PathBuf::from("qab-out"),
            threads: None,
            test_hooks: TestHooks::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: qab_core::QabError| CliError::Config(e.to_string());
        let problem = self.problem.build().map_err(cfg)?;
        if self.paths.is_empty() {
            return Err(CliError::Config("path list is empty".into()));
        }
        let mut seen = HashSet::new();
        for p in &self.paths {
            if !seen.insert(p) {
                return Err(CliError::Config(format!("path {} listed twice", p.label())));
            }
        }
        positive("t_grid.min", self.t_grid.min)?;
        positive("t_grid.max", self.t_grid.max)?;
        if self.t_grid.max <= self.t_grid.min || self.t_grid.count < 2 {
            return Err(CliError::Config("t_grid needs min < max and at least two points".into()));
        }
        if self.steps_per_unit < 10 {
            return Err(CliError::Config("steps_per_unit must be at least 10".into()));
        }
        if self.samples < 3 {
            return Err(CliError::Config("samples must be at least 3".into()));
        }
        self.shooting.validate().map_err(cfg)?;
        for (name, axis) in [("grid.x1", self.grid.x1), ("grid.x2", self.grid.x2)] {
            if axis.count == 0 || !(axis.min.is_finite() && axis.max.is_finite()) || axis.max < axis.min {
                return Err(CliError::Config(format!("{name} needs finite min <= max and a positive count")));
            }
        }
        positive("fd_steps.gamma", self.fd_steps.gamma)?;
        positive("fd_steps.riemann", self.fd_steps.riemann)?;
        positive("gap_floor", self.gap_floor)?;
        if self.overlay_samples < 2 {
            return Err(CliError::Config("overlay_samples must be at least 2".into()));
        }
        if self.observables.samples < 3 {
            return Err(CliError::Config("observables.samples must be at least 3".into()));
        }
        if self.observables.kinds.is_empty() {
            return Err(CliError::Config("observables.kinds is empty".into()));
        }
        if let StateSource::Evolved { total_time } = self.observables.state {
            positive("observables.state.total_time", total_time)?;
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        if !self.test_hooks.gap_offset.is_finite() {
            return Err(CliError::Config("test_hooks.gap_offset must be finite".into()));
        }
        if self.paths.contains(&PathKind::Geo1) && problem.alpha0() >= 1.0 {
            return Err(CliError::Config("geo1 needs alpha0 < 1".into()));
        }
        Ok(())
    }
}
