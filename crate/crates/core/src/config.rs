//! Combined controller configuration, its stable fingerprint, and the flat
//! key/value view used by trace metadata and live tuning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{ControllerConfig, FaultPolicy};
use crate::geometry::Vec3;
use crate::perception::PerceptionConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(&'static str),
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("parameter `{0}` is not live-tunable")]
    NotLiveTunable(String),
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("missing parameter `{0}`")]
    Missing(&'static str),
}

/// Everything the controller needs to reproduce a session.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub perception: PerceptionConfig,
    pub controller: ControllerConfig,
}

/// Keys accepted by [`ControlConfig::set_param`]. Thresholds and timers only;
/// sensor rates and safety limits are fixed for the life of a session.
pub const LIVE_TUNABLE: &[&str] = &[
    "conf_min",
    "roi_frac",
    "tilt_thresh_deg",
    "tilt_hysteresis_deg",
    "t_hold_ms",
    "accel_mag_lo_g",
    "accel_mag_hi_g",
    "d_grasp_mm",
    "k_confirm",
    "t_close_ms",
    "t_open_ms",
    "t_refractory_ms",
];

fn fmt_vec(v: Vec3) -> String {
    format!("{},{},{}", v.x, v.y, v.z)
}

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    s.parse::<f64>().map_err(|e| ConfigError::BadValue { key: key.into(), reason: e.to_string() })
}

fn parse_int<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| ConfigError::BadValue { key: key.into(), reason: e.to_string() })
}

fn integral(key: &str, v: f64) -> Result<u64, ConfigError> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(ConfigError::BadValue { key: key.into(), reason: format!("expected a non-negative integer, got {v}") })
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.perception.validate()?;
        self.controller.validate()
    }

    /// Canonical flat view, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let p = &self.perception;
        let c = &self.controller;
        vec![
            ("conf_min", p.conf_min.to_string()),
            ("roi_frac", p.roi_frac.to_string()),
            ("tilt_thresh_deg", p.tilt_thresh_deg.to_string()),
            ("tilt_hysteresis_deg", p.tilt_hysteresis_deg.to_string()),
            ("t_hold_ms", p.t_hold_ms.to_string()),
            ("accel_mag_lo_g", p.accel_mag_lo_g.to_string()),
            ("accel_mag_hi_g", p.accel_mag_hi_g.to_string()),
            ("tof_window", p.tof_window.to_string()),
            ("d_grasp_mm", p.d_grasp_mm.to_string()),
            ("tof_min_mm", p.tof_min_mm.to_string()),
            ("tof_max_mm", p.tof_max_mm.to_string()),
            ("neutral_axis", fmt_vec(p.neutral_axis)),
            ("k_confirm", c.k_confirm.to_string()),
            ("t_close_ms", c.t_close_ms.to_string()),
            ("t_open_ms", c.t_open_ms.to_string()),
            ("t_refractory_ms", c.t_refractory_ms.to_string()),
            ("t_min_cycle_ms", c.t_min_cycle_ms.to_string()),
            ("stale_factor", c.stale_factor.to_string()),
            ("frame_period_ms", c.frame_period_ms.to_string()),
            ("accel_period_ms", c.accel_period_ms.to_string()),
            ("tof_period_ms", c.tof_period_ms.to_string()),
            ("fault_policy", c.fault_policy.as_str().to_string()),
        ]
    }

    /// Inverse of [`to_pairs`](Self::to_pairs). Every key must be present.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, ConfigError> {
        let mut cfg = ControlConfig::default();
        let mut seen = Vec::new();
        for (k, v) in pairs {
            let p = &mut cfg.perception;
            let c = &mut cfg.controller;
            match k {
                "conf_min" => p.conf_min = parse_f64(k, v)?,
                "roi_frac" => p.roi_frac = parse_f64(k, v)?,
                "tilt_thresh_deg" => p.tilt_thresh_deg = parse_f64(k, v)?,
                "tilt_hysteresis_deg" => p.tilt_hysteresis_deg = parse_f64(k, v)?,
                "t_hold_ms" => p.t_hold_ms = parse_int(k, v)?,
                "accel_mag_lo_g" => p.accel_mag_lo_g = parse_f64(k, v)?,
                "accel_mag_hi_g" => p.accel_mag_hi_g = parse_f64(k, v)?,
                "tof_window" => p.tof_window = parse_int(k, v)?,
                "d_grasp_mm" => p.d_grasp_mm = parse_int(k, v)?,
                "tof_min_mm" => p.tof_min_mm = parse_int(k, v)?,
                "tof_max_mm" => p.tof_max_mm = parse_int(k, v)?,
                "neutral_axis" => {
                    let parts: Vec<&str> = v.split(',').collect();
                    if parts.len() != 3 {
                        return Err(ConfigError::BadValue { key: k.into(), reason: "expected x,y,z".into() });
                    }
                    p.neutral_axis = Vec3::new(parse_f64(k, parts[0])?, parse_f64(k, parts[1])?, parse_f64(k, parts[2])?);
                }
                "k_confirm" => c.k_confirm = parse_int(k, v)?,
                "t_close_ms" => c.t_close_ms = parse_int(k, v)?,
                "t_open_ms" => c.t_open_ms = parse_int(k, v)?,
                "t_refractory_ms" => c.t_refractory_ms = parse_int(k, v)?,
                "t_min_cycle_ms" => c.t_min_cycle_ms = parse_int(k, v)?,
                "stale_factor" => c.stale_factor = parse_f64(k, v)?,
                "frame_period_ms" => c.frame_period_ms = parse_f64(k, v)?,
                "accel_period_ms" => c.accel_period_ms = parse_f64(k, v)?,
                "tof_period_ms" => c.tof_period_ms = parse_f64(k, v)?,
                "fault_policy" => {
                    c.fault_policy = FaultPolicy::parse(v)
                        .ok_or_else(|| ConfigError::BadValue { key: k.into(), reason: format!("unknown policy {v}") })?
                }
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
            seen.push(k.to_string());
        }
        for (k, _) in ControlConfig::default().to_pairs() {
            if !seen.iter().any(|s| s == k) {
                return Err(ConfigError::Missing(k));
            }
        }
        Ok(cfg)
    }

    /// 64-bit FNV-1a over the canonical flat view. Stable across builds and platforms.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, v) in self.to_pairs() {
            for b in k.bytes().chain(std::iter::once(b'=')).chain(v.bytes()).chain(std::iter::once(b'\n')) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    pub fn fingerprint_hex(&self) -> String {
        format!("{:016x}", self.fingerprint())
    }

    /// Applies a live-tunable change. The config is left untouched if the
    /// key is not tunable or the result would be invalid.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        if !LIVE_TUNABLE.contains(&key) {
            return if self.to_pairs().iter().any(|(k, _)| *k == key) {
                Err(ConfigError::NotLiveTunable(key.to_string()))
            } else {
                Err(ConfigError::UnknownKey(key.to_string()))
            };
        }
        if !value.is_finite() {
            return Err(ConfigError::BadValue { key: key.into(), reason: "not finite".into() });
        }
        let mut next = self.clone();
        let p = &mut next.perception;
        let c = &mut next.controller;
        match key {
            "conf_min" => p.conf_min = value,
            "roi_frac" => p.roi_frac = value,
            "tilt_thresh_deg" => p.tilt_thresh_deg = value,
            "tilt_hysteresis_deg" => p.tilt_hysteresis_deg = value,
            "t_hold_ms" => p.t_hold_ms = integral(key, value)?,
            "accel_mag_lo_g" => p.accel_mag_lo_g = value,
            "accel_mag_hi_g" => p.accel_mag_hi_g = value,
            "d_grasp_mm" => p.d_grasp_mm = integral(key, value)? as u32,
            "k_confirm" => c.k_confirm = integral(key, value)? as u32,
            "t_close_ms" => c.t_close_ms = integral(key, value)?,
            "t_open_ms" => c.t_open_ms = integral(key, value)?,
            "t_refractory_ms" => c.t_refractory_ms = integral(key, value)?,
            _ => unreachable!("LIVE_TUNABLE and the match arms agree"),
        }
        next.validate()?;
        *self = next;
        Ok(())
    }
}
