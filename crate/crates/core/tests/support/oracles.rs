//! Independent reference implementations checked against the library over
//! random inputs. Each check returns a one-line summary or the first mismatch.

use graspctl_core::perception::{tilt_angle, MedianFilter, TofSample};
use graspctl_core::simworld::{project_detections, simulate_accel, AccelModel, CameraModel, HandPose, SimObject, WorldState};
use graspctl_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TILT_TOL_DEG: f64 = 1e-6;
pub const PROJECTION_TOL: f64 = 1e-9;
pub const ACCEL_TOL_G: f64 = 1e-9;

type Mat = [[f64; 3]; 3];

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// World-from-body rotation built from the three elementary rotations.
pub fn rotation_oracle(yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Mat {
    let (y, p, r) = (yaw_deg.to_radians(), pitch_deg.to_radians(), roll_deg.to_radians());
    let rz = [[y.cos(), -y.sin(), 0.0], [y.sin(), y.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = [[p.cos(), 0.0, p.sin()], [0.0, 1.0, 0.0], [-p.sin(), 0.0, p.cos()]];
    let rx = [[1.0, 0.0, 0.0], [0.0, r.cos(), -r.sin()], [0.0, r.sin(), r.cos()]];
    matmul(&matmul(&rz, &ry), &rx)
}

fn transpose_apply(m: &Mat, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|j| (0..3).map(|i| m[i][j] * v[i]).sum())
}

fn random_unit_or_scaled(rng: &mut ChaCha8Rng) -> Vec3 {
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
}

pub fn tilt_oracle(a: Vec3, r: Vec3) -> f64 {
    let na = (a.x * a.x + a.y * a.y + a.z * a.z).sqrt();
    let nr = (r.x * r.x + r.y * r.y + r.z * r.z).sqrt();
    let c = (a.x * r.x + a.y * r.y + a.z * r.z) / (na * nr);
    c.clamp(-1.0, 1.0).acos() * 180.0 / std::f64::consts::PI
}

pub fn check_tilt(n: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < n {
        let a = random_unit_or_scaled(&mut rng);
        let r = random_unit_or_scaled(&mut rng);
        if a.norm() <= 1e-6 || r.norm() <= 1e-6 {
            continue;
        }
        let got = tilt_angle(a, r).map_err(|_| format!("tilt_angle rejected {a:?} vs {r:?}"))?;
        let err = (got - tilt_oracle(a, r)).abs();
        worst = worst.max(err);
        if err > TILT_TOL_DEG {
            return Err(format!("tilt {a:?} vs {r:?}: got {got}, oracle {}", tilt_oracle(a, r)));
        }
        checked += 1;
    }
    Ok(format!("{n} vectors, max error {worst:.3e} deg"))
}

pub fn check_median(n: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..n {
        let cap = rng.gen_range(1..=9);
        let len = rng.gen_range(1..=20);
        let values: Vec<u32> = (0..len).map(|_| rng.gen_range(0..400)).collect();
        let mut f = MedianFilter::new(cap);
        let mut last = 0;
        for (t, v) in values.iter().enumerate() {
            last = f.push(TofSample::valid(t as u64, *v)).range_mm;
        }
        let mut window: Vec<u32> = values[values.len().saturating_sub(cap)..].to_vec();
        window.sort();
        let expected = window[(window.len() - 1) / 2];
        if last != expected {
            return Err(format!("case {case}: window {window:?} got {last}, oracle {expected}"));
        }
    }
    Ok(format!("{n} windows agree"))
}

fn random_pose(rng: &mut ChaCha8Rng) -> HandPose {
    let roll = rng.gen_range(-90.0..90.0);
    HandPose {
        position: Vec3::new(rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0)),
        yaw_deg: rng.gen_range(-180.0..180.0),
        pitch_deg: rng.gen_range(-60.0..60.0),
        roll_deg: roll,
        tilt_cmd_deg: roll,
    }
}

pub fn check_projection(n: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cam = CameraModel::default().noiseless();
    let (fh, fv) = (cam.fov_h_deg, cam.fov_v_deg);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < n {
        let hand = random_pose(&mut rng);
        // place the object in the body frame, then move it to the world frame
        let body = [rng.gen_range(60.0..580.0), rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)];
        let m = rotation_oracle(hand.yaw_deg, hand.pitch_deg, hand.roll_deg);
        let world: [f64; 3] = [0, 1, 2].map(|i| (0..3).map(|k| m[i][k] * body[k]).sum::<f64>());
        let center = Vec3::new(world[0], world[1], world[2]) + hand.position;
        let radius = rng.gen_range(5.0..50.0);
        let w = WorldState::new(
            hand.clone(),
            vec![SimObject { id: 0, label: "o".into(), class_id: 1, center, radius, attached: false }],
        );

        let rel = transpose_apply(&m, [center.x - hand.position.x, center.y - hand.position.y, center.z - hand.position.z]);
        let deg = 180.0 / std::f64::consts::PI;
        let phi_h = (-rel[1] / rel[0]).atan() * deg;
        let phi_v = (-rel[2] / rel[0]).atan() * deg;
        let d = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
        let visible = phi_h.abs() <= fh / 2.0 && phi_v.abs() <= fv / 2.0 && d <= cam.max_detect_mm;
        // keep clear of the visibility boundary, where rounding decides
        let margin = (phi_h.abs() - fh / 2.0).abs().min((phi_v.abs() - fv / 2.0).abs()).min((d - cam.max_detect_mm).abs());
        if margin < 1e-6 {
            continue;
        }

        let dets = project_detections(&w, &cam, &mut rng);
        if dets.len() != usize::from(visible) {
            return Err(format!("visibility mismatch at body {rel:?}: got {} detections", dets.len()));
        }
        if let Some(det) = dets.first() {
            let size = 2.0 * (radius / d).atan() * deg;
            let expected = [0.5 + phi_h / fh, 0.5 + phi_v / fv, (size / fh).min(1.0), (size / fv).min(1.0)];
            let got = [det.bbox.cx, det.bbox.cy, det.bbox.w, det.bbox.h];
            for (g, e) in got.iter().zip(expected) {
                let err = (g - e).abs();
                worst = worst.max(err);
                if err > PROJECTION_TOL {
                    return Err(format!("bbox {got:?} vs oracle {expected:?} at body {rel:?}"));
                }
            }
        }
        checked += 1;
    }
    Ok(format!("{n} scenes, max bbox error {worst:.3e}"))
}

pub fn check_accel(n: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = AccelModel { noise_sd_g: 0.0, ..AccelModel::default() };
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let hand = random_pose(&mut rng);
        let w = WorldState::new(hand.clone(), vec![]);
        let got = simulate_accel(&w, &model, &mut rng).a;
        let m = rotation_oracle(hand.yaw_deg, hand.pitch_deg, hand.roll_deg);
        let expected = transpose_apply(&m, [0.0, 0.0, 1.0]);
        for (g, e) in got.to_array().iter().zip(expected) {
            let err = (g - e).abs();
            worst = worst.max(err);
            if err > ACCEL_TOL_G {
                return Err(format!("pose {hand:?}: got {got:?}, oracle {expected:?}"));
            }
        }
    }
    Ok(format!("{n} poses, max error {worst:.3e} g"))
}
