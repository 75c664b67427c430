use serde::{Deserialize, Serialize};

use crate::controller::{Action, ActuatorCommand};
use crate::geometry::{Rotation, Vec3};

pub const DEFAULT_D_ATTACH_MM: f64 = 60.0;
pub const DEFAULT_MAX_SPEED_MM_S: f64 = 500.0;
pub const DEFAULT_TILT_SLEW_DEG_S: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandPose {
    /// Palm point in world millimeters; camera and TOF sit here.
    pub position: Vec3,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    /// Wrist tilt the wearer is currently steering toward.
    pub tilt_cmd_deg: f64,
}

impl Default for HandPose {
    fn default() -> Self {
        Self { position: Vec3::ZERO, yaw_deg: 0.0, pitch_deg: 0.0, roll_deg: 0.0, tilt_cmd_deg: 0.0 }
    }
}

impl HandPose {
    pub fn rotation(&self) -> Rotation {
        Rotation::from_ypr_deg(self.yaw_deg, self.pitch_deg, self.roll_deg)
    }

    /// World point expressed in the hand (camera) frame.
    pub fn to_body(&self, world: Vec3) -> Vec3 {
        self.rotation().apply_inverse(world - self.position)
    }
}

/// A spherical object in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub id: u32,
    pub label: String,
    pub class_id: u32,
    pub center: Vec3,
    pub radius: f64,
    pub attached: bool,
}

impl SimObject {
    /// Distance from `point` to the sphere surface (negative inside).
    pub fn surface_distance(&self, point: Vec3) -> f64 {
        (self.center - point).norm() - self.radius
    }
}

/// Ground truth for one instant of the simulated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub t_ms: u64,
    pub hand: HandPose,
    pub objects: Vec<SimObject>,
    pub hand_closed: bool,
}

impl WorldState {
    pub fn new(hand: HandPose, objects: Vec<SimObject>) -> Self {
        Self { t_ms: 0, hand, objects, hand_closed: false }
    }

    pub fn attached(&self) -> Option<&SimObject> {
        self.objects.iter().find(|o| o.attached)
    }

    /// Nearest unattached object surface from the palm, in any direction.
    pub fn nearest_free(&self) -> Option<(&SimObject, f64)> {
        self.objects
            .iter()
            .filter(|o| !o.attached)
            .map(|o| (o, o.surface_distance(self.hand.position)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)))
    }

    pub fn next_object_id(&self) -> u32 {
        self.objects.iter().map(|o| o.id + 1).max().unwrap_or(0)
    }
}

/// Wearer input: arm velocity and wrist tilt target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Steering {
    pub velocity: Vec3,
    pub tilt_target_deg: f64,
    pub tilt_slew_deg_per_s: f64,
}

impl Default for Steering {
    fn default() -> Self {
        Self { velocity: Vec3::ZERO, tilt_target_deg: 0.0, tilt_slew_deg_per_s: DEFAULT_TILT_SLEW_DEG_S }
    }
}

impl Steering {
    pub fn within_limits(&self, max_speed_mm_s: f64) -> bool {
        self.velocity.is_finite()
            && self.velocity.norm() <= max_speed_mm_s
            && self.tilt_target_deg.is_finite()
            && self.tilt_slew_deg_per_s.is_finite()
            && self.tilt_slew_deg_per_s >= 0.0
    }
}

/// Advances the scene kinematics by `dt_ms`. Attached objects move with the palm.
pub fn step_world(w: &mut WorldState, s: &Steering, dt_ms: u64) {
    let dt_s = dt_ms as f64 / 1000.0;
    let delta = s.velocity * dt_s;
    w.hand.position = w.hand.position + delta;
    for o in w.objects.iter_mut().filter(|o| o.attached) {
        o.center = o.center + delta;
    }

    w.hand.tilt_cmd_deg = s.tilt_target_deg;
    let max_step = s.tilt_slew_deg_per_s * dt_s;
    let err = s.tilt_target_deg - w.hand.roll_deg;
    w.hand.roll_deg += err.clamp(-max_step, max_step);
    w.t_ms += dt_ms;
}

/// Close grips the nearest free object within `d_attach_mm` of the palm
/// (surface distance); Open releases whatever is held where it is.
pub fn apply_actuation(w: &mut WorldState, cmd: &ActuatorCommand, d_attach_mm: f64) {
    match cmd.action {
        Action::Close => {
            w.hand_closed = true;
            if w.attached().is_some() {
                return;
            }
            let target = w
                .nearest_free()
                .filter(|(_, d)| *d <= d_attach_mm)
                .map(|(o, _)| o.id);
            if let Some(id) = target {
                if let Some(o) = w.objects.iter_mut().find(|o| o.id == id) {
                    o.attached = true;
                }
            }
        }
        Action::Open => {
            w.hand_closed = false;
            for o in &mut w.objects {
                o.attached = false;
            }
        }
    }
}
