//! Experiment configuration, read from and written to TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skinwave_core::evolve::Method;
use skinwave_core::model::ModelSpec;
use skinwave_core::wavepacket::GaussianParams;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub method: Method,
    pub model: ModelSpec,
    pub packet: PacketConfig,
    pub times: TimesConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub sigma: f64,
    pub center: f64,
    pub momentum: f64,
    /// Project the envelope onto one counterpart band (0 = upper) of a
    /// two-band model. Absent: the whole packet sits on the A sublattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
}

impl PacketConfig {
    pub fn gaussian(&self) -> GaussianParams {
        GaussianParams {
            sigma: self.sigma,
            center: self.center,
            momentum: self.momentum,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    pub t_max: f64,
    pub frame_count: usize,
}

impl TimesConfig {
    /// `frame_count` uniformly spaced times from 0 to `t_max`.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.frame_count - 1) as f64;
        (0..self.frame_count)
            .map(|k| self.t_max * k as f64 / last)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Moving-average window applied to `x_peak` before differencing.
    pub smoothing_window: usize,
    /// Distance to a wall, in grid units, that counts as contact.
    pub contact_threshold: f64,
    /// Samples next to the wall left out of the velocity fits.
    pub guard_band: usize,
    /// Samples wider than this fraction of the domain are left out of the
    /// velocity fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_cutoff_fraction: Option<f64>,
    /// Time span after contact inspected by the reflection classifier.
    pub window: f64,
    /// Times at which density snapshots and secondary peaks are reported.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            smoothing_window: 1,
            contact_threshold: 3.0,
            guard_band: 5,
            width_cutoff_fraction: None,
            window: f64::INFINITY,
            snapshots: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub density_csv: bool,
    pub trajectory_csv: bool,
    pub heatmap: bool,
    pub oracle_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            density_csv: true,
            trajectory_csv: true,
            heatmap: true,
            oracle_csv: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| match e {
            skinwave_core::Error::InvalidParameter { name, reason } => {
                CliError::config(format!("model.{name}"), reason)
            }
            other => CliError::config("model", other.to_string()),
        })?;
        let p = &self.packet;
        if !(p.sigma > 0.0 && p.sigma.is_finite()) {
            return Err(CliError::config(
                "packet.sigma",
                "must be positive and finite",
            ));
        }
        if !p.center.is_finite() {
            return Err(CliError::config("packet.center", "must be finite"));
        }
        if !p.momentum.is_finite() {
            return Err(CliError::config("packet.momentum", "must be finite"));
        }
        if let Some(band) = p.band {
            if !self.model.is_ssh() {
                return Err(CliError::config(
                    "packet.band",
                    "only two-band models have bands",
                ));
            }
            if band > 1 {
                return Err(CliError::config("packet.band", "must be 0 or 1"));
            }
        }
        let t = &self.times;
        if !(t.t_max > 0.0 && t.t_max.is_finite()) {
            return Err(CliError::config(
                "times.t_max",
                "must be positive and finite",
            ));
        }
        if t.frame_count < 2 {
            return Err(CliError::config("times.frame_count", "must be at least 2"));
        }
        let a = &self.analysis;
        if a.smoothing_window == 0 {
            return Err(CliError::config(
                "analysis.smoothing_window",
                "must be at least 1",
            ));
        }
        if !(a.contact_threshold >= 0.0 && a.contact_threshold.is_finite()) {
            return Err(CliError::config(
                "analysis.contact_threshold",
                "must be non-negative and finite",
            ));
        }
        if let Some(f) = a.width_cutoff_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(CliError::config(
                    "analysis.width_cutoff_fraction",
                    "must lie in (0, 1]",
                ));
            }
        }
        if !(a.window > 0.0) {
            return Err(CliError::config("analysis.window", "must be positive"));
        }
        if a.snapshots.iter().any(|s| !(0.0..=t.t_max).contains(s)) {
            return Err(CliError::config(
                "analysis.snapshots",
                "must lie in [0, t_max]",
            ));
        }
        Ok(())
    }
}
