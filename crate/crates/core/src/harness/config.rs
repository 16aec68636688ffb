//! Run configuration: JSON with nested sections, unknown keys rejected.
//!
//! Any key can be overridden from the environment: `CHEMOSPREAD_PARAMS__CHI=0.3`
//! sets `params.chi`. Values are parsed as JSON when possible and taken as
//! strings otherwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::FrontDirection;
use crate::error::{Error, Result};
use crate::harness::initial::InitialDataSpec;
use crate::model::{Grid, Params};
use crate::solver::SchemeConfig;

pub const ENV_PREFIX: &str = "CHEMOSPREAD_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Params,
    pub grid: Grid,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub initial: InitialDataSpec,
    pub horizon: f64,
    #[serde(default)]
    pub observe: ObserveConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Parameter lattice for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserveConfig {
    pub cadence: f64,
    /// Write a snapshot pair every this many samples; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Fraction of the box width a front must keep from the walls.
    pub clearance: f64,
}

impl Default for ObserveConfig {
    fn default() -> Self {
        ObserveConfig {
            cadence: 0.5,
            snapshot_every: 4,
            clearance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Front levels as fractions of the carrying capacity `a/b`.
    pub threshold_fractions: Vec<f64>,
    /// Empty: derived from the initial data (both rays in 1D, radial in 2D).
    pub directions: Vec<FrontDirection>,
    pub eps: f64,
    pub window_fraction: f64,
    /// Decay rate of the exponential envelope.
    pub k: f64,
    /// Persistence level as a fraction of `a/b`.
    pub eta_fraction: f64,
    /// Settling time after the persistence trigger.
    pub burn_in: f64,
    /// Earliest persistence trigger, standing in for the time after which
    /// the solution obeys its uniform bounds.
    pub persistence_start: f64,
    /// Residual steps before this time are skipped: non-smooth initial data
    /// leaves a layer that does not shrink under refinement.
    pub residual_start: f64,
    /// Relative tolerance on the fitted speed.
    pub speed_tolerance: f64,
    /// Level separating "positive" from "vanished" in the interior/exterior checks.
    pub floor: f64,
    /// Calibrate the residual tolerance on two coarser refinements.
    pub calibrate: bool,
    /// Residual tolerance used when not calibrating.
    pub tau_disc: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            threshold_fractions: vec![0.5],
            directions: vec![],
            eps: 0.5,
            window_fraction: 0.5,
            k: 0.5,
            eta_fraction: 0.1,
            burn_in: 5.0,
            persistence_start: 5.0,
            residual_start: 1.0,
            speed_tolerance: 0.05,
            floor: 1e-3,
            calibrate: false,
            tau_disc: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    pub dir: Option<PathBuf>,
}

/// Cartesian lattice over parameter axes; each axis names a field of `params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

impl SweepConfig {
    /// Lattice points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        let mut out: Vec<Vec<(String, f64)>> = vec![vec![]];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push((axis.param.clone(), v));
                        p
                    })
                })
                .collect();
        }
        out
    }
}

pub fn set_param(params: &mut Params, name: &str, value: f64) -> Result<()> {
    match name {
        "chi" => params.chi = value,
        "a" => params.a = value,
        "b" => params.b = value,
        "lambda" => params.lambda = value,
        "mu" => params.mu = value,
        _ => return Err(Error::config(format!("sweep.axes.{name}"), "not a sweepable parameter")),
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))?;
        Self::from_value(value)
    }

    /// Parses a file, applying environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| Error::config("<root>", e.to_string()))?;
        apply_overrides(&mut value, std::env::vars())?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().to_string();
            Error::config(key_path(&path, &message), message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.params.dim != self.grid.dim() {
            return Err(Error::config(
                "params.dim",
                format!("{} does not match the {}-d grid", self.params.dim, self.grid.dim()),
            ));
        }
        self.scheme.validate(self.grid.dim())?;
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon", "must be a non-negative number"));
        }
        if !(self.observe.cadence > 0.0) {
            return Err(Error::config("observe.cadence", "must be positive"));
        }
        if !(0.0..0.5).contains(&self.observe.clearance) {
            return Err(Error::config("observe.clearance", "must lie in [0, 0.5)"));
        }
        let a = &self.analysis;
        if a.threshold_fractions.is_empty() {
            return Err(Error::config("analysis.threshold_fractions", "at least one fraction is required"));
        }
        if !(a.burn_in >= 0.0 && a.persistence_start >= 0.0) {
            return Err(Error::config("analysis.burn_in", "burn-in and persistence start must be non-negative"));
        }
        if !(a.residual_start >= 0.0 && a.residual_start.is_finite()) {
            return Err(Error::config("analysis.residual_start", "must be a non-negative number"));
        }
        if a.threshold_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::config("analysis.threshold_fractions", "fractions must lie in (0, 1)"));
        }
        if !(a.window_fraction > 0.0 && a.window_fraction <= 1.0) {
            return Err(Error::config("analysis.window_fraction", "must lie in (0, 1]"));
        }
        if !(a.k > 0.0) {
            return Err(Error::config("analysis.k", "must be positive"));
        }
        if !(a.eps > 0.0 && a.eps < 2.0 * self.params.a.sqrt()) {
            return Err(Error::config("analysis.eps", "must lie in (0, 2 sqrt(a))"));
        }
        for d in &a.directions {
            if let FrontDirection::Ray(xi) = d {
                if xi.len() != self.grid.dim() {
                    return Err(Error::config("analysis.directions", "ray dimension does not match the grid"));
                }
            }
        }
        if let Some(s) = &self.sweep {
            for axis in &s.axes {
                set_param(&mut self.params.clone(), &axis.param, 0.0)?;
                if axis.values.is_empty() {
                    return Err(Error::config(format!("sweep.axes.{}", axis.param), "no values"));
                }
            }
        }
        self.initial.validate(&self.grid, self.observe.clearance)?;
        Ok(())
    }

    /// Front thresholds in absolute units.
    pub fn thresholds(&self) -> Vec<f64> {
        let cap = self.params.a / self.params.b;
        self.analysis.threshold_fractions.iter().map(|f| f * cap).collect()
    }

    pub fn directions(&self) -> Vec<FrontDirection> {
        if !self.analysis.directions.is_empty() {
            return self.analysis.directions.clone();
        }
        self.initial.default_directions(self.grid.dim())
    }
}

/// Dotted key path for an error; a missing field is appended to its parent.
fn key_path(path: &str, message: &str) -> String {
    let base = if path == "." { "" } else { path };
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            return if base.is_empty() {
                field.to_string()
            } else {
                format!("{base}.{field}")
            };
        }
    }
    if base.is_empty() {
        "<root>".to_string()
    } else {
        base.to_string()
    }
}

/// Applies `CHEMOSPREAD_A__B=value` pairs onto a JSON document.
pub fn apply_overrides(value: &mut Value, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut pairs: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    pairs.sort();
    for (key, raw) in pairs {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(Error::config(key, "malformed override key"));
        }
        let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        let mut node = &mut *value;
        for (i, part) in path.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::config(path[..i].join("."), "override descends into a non-object"))?;
            if i + 1 == path.len() {
                obj.insert(part.clone(), parsed.clone());
                break;
            }
            node = obj.entry(part.clone()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}
