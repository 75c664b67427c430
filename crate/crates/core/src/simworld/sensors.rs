//! Geometric sensor synthesis: camera detections, TOF range, accelerometer.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::world::WorldState;
use crate::geometry::Vec3;
use crate::perception::{AccelSample, BBox, Detection, TofSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub max_detect_mm: f64,
    pub conf_base: f64,
    pub conf_dist_coeff: f64,
    pub conf_angle_coeff: f64,
    pub conf_noise_sd: f64,
    pub p_false_negative: f64,
    pub frame_period_ms: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            fov_h_deg: 84.0,
            fov_v_deg: 87.0,
            max_detect_mm: 600.0,
            conf_base: 0.95,
            conf_dist_coeff: 0.3,
            conf_angle_coeff: 0.4,
            conf_noise_sd: 0.02,
            p_false_negative: 0.05,
            frame_period_ms: 166.7,
        }
    }
}

impl CameraModel {
    /// Deterministic variant: no confidence noise and no dropped detections.
    pub fn noiseless(mut self) -> Self {
        self.conf_noise_sd = 0.0;
        self.p_false_negative = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        let fov_ok = |f: f64| f > 0.0 && f < 180.0;
        if !fov_ok(self.fov_h_deg) || !fov_ok(self.fov_v_deg) {
            return Err("0 < fov < 180 per axis");
        }
        if !(0.0..=1.0).contains(&self.p_false_negative) || !(0.0..=1.0).contains(&self.conf_base) {
            return Err("camera probabilities in [0, 1]");
        }
        if !(self.max_detect_mm > 0.0 && self.frame_period_ms > 0.0 && self.conf_noise_sd >= 0.0) {
            return Err("camera ranges and periods positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TofModel {
    pub cone_half_angle_deg: f64,
    pub noise_sd_mm: f64,
    pub min_mm: u32,
    pub max_mm: u32,
    pub period_ms: f64,
}

impl Default for TofModel {
    fn default() -> Self {
        Self { cone_half_angle_deg: 12.5, noise_sd_mm: 3.0, min_mm: 10, max_mm: 200, period_ms: 33.3 }
    }
}

impl TofModel {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.min_mm > 0 && self.min_mm < self.max_mm) {
            return Err("0 < tof min_mm < max_mm");
        }
        if !(self.period_ms > 0.0 && self.noise_sd_mm >= 0.0 && self.cone_half_angle_deg > 0.0) {
            return Err("tof period, noise, and cone positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccelModel {
    pub noise_sd_g: f64,
    pub period_ms: f64,
}

impl Default for AccelModel {
    fn default() -> Self {
        Self { noise_sd_g: 0.01, period_ms: 10.0 }
    }
}

impl AccelModel {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.noise_sd_g >= 0.0 && self.period_ms > 0.0) {
            return Err("accel noise >= 0 and period > 0");
        }
        Ok(())
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sd
}

/// Off-axis angles of a body-frame point, in degrees: positive right and down in the image.
pub fn off_axis_angles(p: Vec3) -> (f64, f64) {
    ((-p.y).atan2(p.x).to_degrees(), (-p.z).atan2(p.x).to_degrees())
}

/// Synthesizes one frame of detector output from scene geometry.
///
/// Angles map linearly onto normalized image coordinates. Each visible
/// object consumes one confidence-noise draw and then one drop draw, in
/// object order.
pub fn project_detections<R: Rng + ?Sized>(w: &WorldState, cam: &CameraModel, rng: &mut R) -> Vec<Detection> {
    let half_h = cam.fov_h_deg / 2.0;
    let half_v = cam.fov_v_deg / 2.0;
    let mut out = Vec::new();
    for obj in w.objects.iter().filter(|o| !o.attached) {
        let p = w.hand.to_body(obj.center);
        if p.x <= 0.0 {
            continue;
        }
        let dist = p.norm();
        let (phi_h, phi_v) = off_axis_angles(p);
        if phi_h.abs() > half_h || phi_v.abs() > half_v || dist > cam.max_detect_mm {
            continue;
        }
        let angular = 2.0 * (obj.radius / dist).atan().to_degrees();
        let off_axis = (phi_h.abs() / half_h).max(phi_v.abs() / half_v);
        let noise = gaussian(rng, cam.conf_noise_sd);
        let confidence = (cam.conf_base - cam.conf_dist_coeff * dist / cam.max_detect_mm
            - cam.conf_angle_coeff * off_axis
            + noise)
            .clamp(0.0, 1.0);
        let dropped = rng.gen::<f64>() < cam.p_false_negative;
        if dropped {
            continue;
        }
        out.push(Detection {
            class_id: obj.class_id,
            label: obj.label.clone(),
            confidence,
            bbox: BBox {
                cx: 0.5 + phi_h / cam.fov_h_deg,
                cy: 0.5 + phi_v / cam.fov_v_deg,
                w: (angular / cam.fov_h_deg).min(1.0),
                h: (angular / cam.fov_v_deg).min(1.0),
            },
        });
    }
    out
}

/// Range to the nearest free object whose center lies inside the sensor cone.
/// Always consumes exactly one noise draw.
pub fn simulate_tof<R: Rng + ?Sized>(w: &WorldState, tof: &TofModel, rng: &mut R) -> TofSample {
    let noise = gaussian(rng, tof.noise_sd_mm);
    let nearest = w
        .objects
        .iter()
        .filter(|o| !o.attached)
        .filter_map(|o| {
            let p = w.hand.to_body(o.center);
            let d = p.norm();
            let inside = d > 0.0 && (p.x / d).clamp(-1.0, 1.0).acos().to_degrees() <= tof.cone_half_angle_deg;
            inside.then_some(d - o.radius)
        })
        .min_by(f64::total_cmp);
    match nearest {
        Some(d) if d <= tof.max_mm as f64 => {
            let reading = (d + noise).round().clamp(tof.min_mm as f64, tof.max_mm as f64);
            TofSample::valid(w.t_ms, reading as u32)
        }
        _ => TofSample::out_of_range(w.t_ms),
    }
}

/// Gravity reaction rotated into the sensor frame plus per-axis noise
/// (three draws, x then y then z). A level hand reads `(0, 0, 1)` g.
pub fn simulate_accel<R: Rng + ?Sized>(w: &WorldState, acc: &AccelModel, rng: &mut R) -> AccelSample {
    let g = w.hand.rotation().apply_inverse(Vec3::UNIT_Z);
    let n = Vec3::new(gaussian(rng, acc.noise_sd_g), gaussian(rng, acc.noise_sd_g), gaussian(rng, acc.noise_sd_g));
    AccelSample { t_ms: w.t_ms, a: g + n }
}
