//! Session configuration file: controller thresholds, sensor models, sensor
//! rates, and run settings in one TOML document.

use std::path::PathBuf;

use graspctl_core::controller::ControllerConfig;
use graspctl_core::perception::PerceptionConfig;
use graspctl_core::simworld::SimModels;
use graspctl_core::ControlConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BASE_STEP_MS: u64 = 10;

/// Period fields that `[rates]` overwrites; setting them directly would be
/// silently ignored, so it is an error.
const SHADOWED_PERIODS: &[(&str, &str)] = &[
    ("controller", "frame_period_ms"),
    ("controller", "tof_period_ms"),
    ("controller", "accel_period_ms"),
    ("models.camera", "frame_period_ms"),
    ("models.tof", "period_ms"),
    ("models.accel", "period_ms"),
];

#[derive(Debug, Error)]
pub enum SessionConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Each tick waits for its wall-clock deadline.
    Realtime,
    /// Simulated clock only; no sleeping.
    #[default]
    Fast,
}

/// Sensor sample periods. These are the single source for the camera, TOF,
/// and accelerometer models and for the controller's staleness limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub frame_period_ms: f64,
    pub tof_period_ms: f64,
    pub accel_period_ms: f64,
}

impl Default for Rates {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self { frame_period_ms: c.frame_period_ms, tof_period_ms: c.tof_period_ms, accel_period_ms: c.accel_period_ms }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub seed: Option<u64>,
    pub mode: Mode,
    pub base_step_ms: u64,
    pub rates: Rates,
    pub perception: PerceptionConfig,
    pub controller: ControllerConfig,
    pub models: SimModels,
    pub trace: Option<PathBuf>,
    pub port: u16,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            seed: None,
            mode: Mode::Fast,
            base_step_ms: DEFAULT_BASE_STEP_MS,
            rates: Rates::default(),
            perception: PerceptionConfig::default(),
            controller: ControllerConfig::default(),
            models: SimModels::default(),
            trace: None,
            port: DEFAULT_PORT,
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, SessionConfigError> {
        let doc: toml::Table = toml::from_str(text).map_err(|e| SessionConfigError::Parse(e.to_string()))?;
        for (table, key) in SHADOWED_PERIODS {
            let mut node = Some(&doc);
            for part in table.split('.') {
                node = node.and_then(|t| t.get(part)).and_then(|v| v.as_table());
            }
            if node.is_some_and(|t| t.contains_key(*key)) {
                return Err(SessionConfigError::Invalid(format!("{table}.{key}: set sensor periods under [rates]")));
            }
        }
        let cfg: SessionConfig = toml::from_str(text).map_err(|e| SessionConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SessionConfigError> {
        let invalid = |m: String| SessionConfigError::Invalid(m);
        if self.base_step_ms == 0 {
            return Err(invalid("base_step_ms must be positive".into()));
        }
        let r = &self.rates;
        for (name, p) in [("frame", r.frame_period_ms), ("tof", r.tof_period_ms), ("accel", r.accel_period_ms)] {
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid(format!("{name}_period_ms must be positive")));
            }
            if p < self.base_step_ms as f64 {
                return Err(invalid(format!("{name}_period_ms is shorter than base_step_ms")));
            }
        }
        self.control_config().validate().map_err(|e| invalid(e.to_string()))?;
        self.sim_models().validate().map_err(|e| invalid(e.to_string()))
    }

    /// Controller configuration with the session's sensor rates applied.
    pub fn control_config(&self) -> ControlConfig {
        let mut controller = self.controller.clone();
        controller.frame_period_ms = self.rates.frame_period_ms;
        controller.tof_period_ms = self.rates.tof_period_ms;
        controller.accel_period_ms = self.rates.accel_period_ms;
        ControlConfig { perception: self.perception.clone(), controller }
    }

    pub fn sim_models(&self) -> SimModels {
        let mut models = self.models.clone();
        models.camera.frame_period_ms = self.rates.frame_period_ms;
        models.tof.period_ms = self.rates.tof_period_ms;
        models.accel.period_ms = self.rates.accel_period_ms;
        models
    }
}
