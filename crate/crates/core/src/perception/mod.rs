//! Sensor conditioning: TOF median filtering, tilt-gesture detection, and
//! grasp-target arbitration over detector output.

mod gesture;
mod median;
mod target;

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::geometry::Vec3;

pub use gesture::{gesture_step, tilt_angle, DegenerateVector, GesturePhase, GestureReading, GestureState};
pub use median::MedianFilter;
pub use target::{distance_gate, select_target};

/// Normalized bounding box: center plus full extents, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

/// One object reported by the detector for one camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: u32,
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn is_well_formed(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let extent = |v: f64| v > 0.0 && v <= 1.0;
        unit(self.confidence)
            && unit(self.bbox.cx)
            && unit(self.bbox.cy)
            && extent(self.bbox.w)
            && extent(self.bbox.h)
    }

    /// Euclidean distance of the box center from the image center.
    pub fn center_offset(&self) -> f64 {
        let dx = self.bbox.cx - 0.5;
        let dy = self.bbox.cy - 0.5;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TofStatus {
    Valid,
    OutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TofSample {
    pub t_ms: u64,
    pub status: TofStatus,
    /// Only meaningful when `status` is `Valid`.
    pub range_mm: u32,
}

impl TofSample {
    pub fn valid(t_ms: u64, range_mm: u32) -> Self {
        Self { t_ms, status: TofStatus::Valid, range_mm }
    }

    pub fn out_of_range(t_ms: u64) -> Self {
        Self { t_ms, status: TofStatus::OutOfRange, range_mm: 0 }
    }

    pub fn range(&self) -> Option<u32> {
        match self.status {
            TofStatus::Valid => Some(self.range_mm),
            TofStatus::OutOfRange => None,
        }
    }
}

/// Accelerometer reading in units of g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelSample {
    pub t_ms: u64,
    pub a: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    pub conf_min: f64,
    /// Side of the central region of interest, as a fraction of the frame per axis.
    pub roi_frac: f64,
    pub tilt_thresh_deg: f64,
    pub tilt_hysteresis_deg: f64,
    pub t_hold_ms: u64,
    pub accel_mag_lo_g: f64,
    pub accel_mag_hi_g: f64,
    pub tof_window: usize,
    pub d_grasp_mm: u32,
    pub tof_min_mm: u32,
    pub tof_max_mm: u32,
    /// Sensor-frame gravity direction with the hand in its neutral posture.
    pub neutral_axis: Vec3,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            conf_min: 0.5,
            roi_frac: 0.6,
            tilt_thresh_deg: 60.0,
            tilt_hysteresis_deg: 15.0,
            t_hold_ms: 300,
            accel_mag_lo_g: 0.5,
            accel_mag_hi_g: 1.5,
            tof_window: 5,
            d_grasp_mm: 100,
            tof_min_mm: 10,
            tof_max_mm: 200,
            neutral_axis: Vec3::UNIT_Z,
        }
    }
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, what: &'static str| if ok { Ok(()) } else { Err(ConfigError::Invalid(what)) };
        check(self.conf_min > 0.0 && self.conf_min < 1.0, "0 < conf_min < 1")?;
        check(self.roi_frac > 0.0 && self.roi_frac <= 1.0, "0 < roi_frac <= 1")?;
        check(
            self.tilt_hysteresis_deg > 0.0
                && self.tilt_hysteresis_deg < self.tilt_thresh_deg
                && self.tilt_thresh_deg < 180.0,
            "0 < tilt_hysteresis_deg < tilt_thresh_deg < 180",
        )?;
        check(
            self.accel_mag_lo_g < 1.0 && 1.0 < self.accel_mag_hi_g,
            "accel_mag_lo_g < 1 < accel_mag_hi_g",
        )?;
        check(self.tof_window >= 1 && self.tof_window % 2 == 1, "tof_window odd and >= 1")?;
        check(
            self.tof_min_mm < self.d_grasp_mm && self.d_grasp_mm <= self.tof_max_mm,
            "tof_min_mm < d_grasp_mm <= tof_max_mm",
        )?;
        check(
            self.neutral_axis.is_finite() && (self.neutral_axis.norm() - 1.0).abs() <= 1e-9,
            "neutral_axis has unit norm",
        )?;
        Ok(())
    }
}
