use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AccelSample, PerceptionConfig};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("acceleration magnitude too small to define a direction")]
pub struct DegenerateVector;

/// Angle in degrees between the measured acceleration and the neutral gravity axis.
/// `ref_axis` need not be unit length.
pub fn tilt_angle(a: Vec3, ref_axis: Vec3) -> Result<f64, DegenerateVector> {
    let mag = a.norm();
    let ref_mag = ref_axis.norm();
    if !(mag > 1e-6 && mag.is_finite() && ref_mag > 0.0 && ref_mag.is_finite()) {
        return Err(DegenerateVector);
    }
    let cos = (a.dot(ref_axis) / (mag * ref_mag)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GesturePhase {
    Inactive,
    Pending,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureState {
    pub phase: GesturePhase,
    /// Set while `Pending`.
    pub onset_t_ms: Option<u64>,
    pub ref_axis: Vec3,
}

impl GestureState {
    pub fn new(ref_axis: Vec3) -> Self {
        Self { phase: GesturePhase::Inactive, onset_t_ms: None, ref_axis }
    }
}

/// Outcome of feeding one accelerometer sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureReading {
    pub status: GesturePhase,
    /// `None` when the sample was rejected by the magnitude band.
    pub tilt_deg: Option<f64>,
}

/// Debounced, hysteretic tilt detector.
///
/// Samples outside the magnitude band are treated as motion transients: they
/// cancel a pending gesture but never clear an active one.
pub fn gesture_step(g: &mut GestureState, sample: &AccelSample, cfg: &PerceptionConfig) -> GestureReading {
    let mag = sample.a.norm();
    let in_band = mag >= cfg.accel_mag_lo_g && mag <= cfg.accel_mag_hi_g;
    let tilt = if in_band { tilt_angle(sample.a, g.ref_axis).ok() } else { None };

    let Some(tilt) = tilt else {
        if g.phase != GesturePhase::Active {
            g.phase = GesturePhase::Inactive;
            g.onset_t_ms = None;
        }
        return GestureReading { status: g.phase, tilt_deg: None };
    };

    let t = sample.t_ms;
    match g.phase {
        GesturePhase::Inactive => {
            if tilt >= cfg.tilt_thresh_deg {
                g.phase = GesturePhase::Pending;
                g.onset_t_ms = Some(t);
                promote_if_held(g, t, cfg);
            }
        }
        GesturePhase::Pending => {
            if tilt >= cfg.tilt_thresh_deg {
                promote_if_held(g, t, cfg);
            } else {
                g.phase = GesturePhase::Inactive;
                g.onset_t_ms = None;
            }
        }
        GesturePhase::Active => {
            if tilt < cfg.tilt_thresh_deg - cfg.tilt_hysteresis_deg {
                g.phase = GesturePhase::Inactive;
            }
        }
    }
    GestureReading { status: g.phase, tilt_deg: Some(tilt) }
}

fn promote_if_held(g: &mut GestureState, t: u64, cfg: &PerceptionConfig) {
    let onset = g.onset_t_ms.unwrap_or(t);
    if t.saturating_sub(onset) >= cfg.t_hold_ms {
        g.phase = GesturePhase::Active;
        g.onset_t_ms = None;
    }
}
