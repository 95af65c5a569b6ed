//! The flat JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use lqg_heat::{CollapseParams, CutDirection, EvolveConfig, SnapshotSchedule};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartMode {
    /// The `k` highest field values.
    #[serde(rename = "highest-k")]
    HighestK,
    /// The single site in `start_point`.
    #[serde(rename = "explicit")]
    Explicit,
    /// `k` distinct sites drawn uniformly from the seed.
    #[serde(rename = "random")]
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutAxis {
    Horizontal,
    Vertical,
}

impl From<CutAxis> for CutDirection {
    fn from(axis: CutAxis) -> Self {
        match axis {
            CutAxis::Horizontal => CutDirection::Horizontal,
            CutAxis::Vertical => CutDirection::Vertical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub gamma: f64,
    pub seed: u64,
    pub dt: f64,
    pub total_steps: usize,
    pub snapshot_stride: usize,
    /// Extra geometrically spaced snapshots; 0 gives a pure stride.
    pub log_snapshots: usize,
    pub start_mode: StartMode,
    pub k: usize,
    pub start_point: Option<[usize; 2]>,
    /// Minimum L∞ distance between chosen high points.
    pub min_separation: usize,
    pub cg_tol: f64,
    pub cg_max_iters: Option<usize>,
    /// Relative mass drift above which a run is a numerical failure.
    pub mass_tol: f64,
    /// Stop a trajectory once its heat-ball radius exceeds this.
    pub stop_radius: Option<f64>,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha_step: f64,
    pub s_max: f64,
    pub bins: usize,
    /// Fit window for d_s and the collapse, as heat-ball radii.
    pub window_r_lo: f64,
    /// `None` means `n/4`.
    pub window_r_hi: Option<f64>,
    pub cut_direction: CutAxis,
    /// Load the field from this LQGGRID1 file instead of sampling it.
    pub field_path: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let collapse = CollapseParams::default();
        RunConfig {
            n: 256,
            gamma: 0.8,
            seed: 0,
            dt: 1.0,
            total_steps: 20_000,
            snapshot_stride: 1000,
            log_snapshots: 40,
            start_mode: StartMode::HighestK,
            k: 1,
            start_point: None,
            min_separation: 0,
            cg_tol: 1e-12,
            cg_max_iters: None,
            mass_tol: 1e-5,
            stop_radius: None,
            alpha_lo: collapse.alpha_lo,
            alpha_hi: collapse.alpha_hi,
            alpha_step: collapse.alpha_step,
            s_max: collapse.s_max,
            bins: collapse.bins,
            window_r_lo: 5.0,
            window_r_hi: None,
            cut_direction: CutAxis::Horizontal,
            field_path: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn check(ok: bool, key: &str, message: &str) -> Result<(), LabError> {
    if ok {
        Ok(())
    } else {
        Err(LabError::config(key, message))
    }
}

impl RunConfig {
    /// Parses a JSON document; missing keys take their defaults.
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| LabError::config("$", format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, LabError> {
        let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            LabError::config(path, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Loads `path` (or the defaults when `None`) and applies `overrides`,
    /// a map from canonical key to JSON value.
    pub fn load(path: Option<&Path>, overrides: Map<String, Value>) -> Result<Self, LabError> {
        let mut value = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| LabError::io(p, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| LabError::config("$", format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Map::new()),
        };
        let Value::Object(map) = &mut value else {
            return Err(LabError::config("$", "config must be a JSON object"));
        };
        map.extend(overrides);
        Self::from_value(value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), LabError> {
        check(self.n >= 2, "n", "lattice side must be at least 2")?;
        check(self.n <= u32::MAX as usize, "n", "lattice side must fit in u32")?;
        check(
            self.gamma >= 0.0 && self.gamma < 2.0,
            "gamma",
            "must lie in [0, 2)",
        )?;
        check(self.dt > 0.0 && self.dt.is_finite(), "dt", "must be positive")?;
        check(self.snapshot_stride > 0, "snapshot_stride", "must be positive")?;
        check(
            self.cg_tol > 0.0 && self.cg_tol < 1.0,
            "cg_tol",
            "must lie in (0, 1)",
        )?;
        check(self.cg_max_iters != Some(0), "cg_max_iters", "must be positive")?;
        check(self.mass_tol > 0.0, "mass_tol", "must be positive")?;
        check(
            self.stop_radius.map_or(true, |r| r > 0.0),
            "stop_radius",
            "must be positive",
        )?;
        check(self.k >= 1, "k", "must be at least 1")?;
        match self.start_mode {
            StartMode::Explicit => match self.start_point {
                None => {
                    return Err(LabError::config(
                        "start_point",
                        "required when start_mode is \"explicit\"",
                    ))
                }
                Some([a, b]) => check(a < self.n && b < self.n, "start_point", "outside the lattice")?,
            },
            StartMode::Random | StartMode::HighestK => check(
                self.k <= self.n * self.n,
                "k",
                "more start points than lattice sites",
            )?,
        }
        check(self.alpha_lo > 0.0, "alpha_lo", "must be positive")?;
        check(self.alpha_hi > self.alpha_lo, "alpha_hi", "must exceed alpha_lo")?;
        check(self.alpha_step > 0.0, "alpha_step", "must be positive")?;
        check(self.s_max > 0.0, "s_max", "must be positive")?;
        check(self.bins >= 4, "bins", "need at least 4 bins")?;
        check(self.window_r_lo >= 0.0, "window_r_lo", "must be non-negative")?;
        check(
            self.window_r_hi.map_or(true, |hi| hi > self.window_r_lo),
            "window_r_hi",
            "must exceed window_r_lo",
        )?;
        Ok(())
    }

    pub fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig {
            dt: self.dt,
            cg_tol: self.cg_tol,
            cg_max_iters: self.cg_max_iters,
            schedule: SnapshotSchedule::stride_with_geometric(
                self.snapshot_stride,
                self.log_snapshots,
                self.total_steps,
            ),
            total_steps: self.total_steps,
            stop_radius: self.stop_radius,
            ..EvolveConfig::default()
        }
    }

    pub fn collapse_params(&self) -> CollapseParams {
        CollapseParams {
            alpha_lo: self.alpha_lo,
            alpha_hi: self.alpha_hi,
            alpha_step: self.alpha_step,
            s_max: self.s_max,
            bins: self.bins,
        }
    }

    /// Heat-ball radius window `[lo, hi]` for the fits.
    pub fn radius_window(&self) -> (f64, f64) {
        (
            self.window_r_lo,
            self.window_r_hi.unwrap_or(self.n as f64 / 4.0),
        )
    }

    /// Writes the effective configuration to `dir/config.json`.
    pub fn echo_into(&self, dir: &Path) -> Result<(), LabError> {
        let path = dir.join("config.json");
        fs::write(&path, self.to_json() + "\n").map_err(|e| LabError::io(&path, e))
    }
}
