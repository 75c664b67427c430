//! Deterministic stand-in for the glove hardware: a kinematic hand among
//! spherical objects, with camera, TOF, and accelerometer synthesized from
//! geometry and one seeded noise generator.

mod scenario;
mod sensors;
mod world;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::ActuatorCommand;
use crate::perception::{AccelSample, Detection, TofSample};

pub use scenario::{load_scenario, Expectations, Scenario, ScenarioError, DEFAULT_DURATION_MS};
pub use sensors::{
    off_axis_angles, project_detections, simulate_accel, simulate_tof, AccelModel, CameraModel, TofModel,
};
pub use world::{
    apply_actuation, step_world, HandPose, SimObject, Steering, WorldState, DEFAULT_D_ATTACH_MM,
    DEFAULT_MAX_SPEED_MM_S, DEFAULT_TILT_SLEW_DEG_S,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimModels {
    pub camera: CameraModel,
    pub tof: TofModel,
    pub accel: AccelModel,
    pub d_attach_mm: f64,
    pub max_speed_mm_s: f64,
}

impl Default for SimModels {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            tof: TofModel::default(),
            accel: AccelModel::default(),
            d_attach_mm: DEFAULT_D_ATTACH_MM,
            max_speed_mm_s: DEFAULT_MAX_SPEED_MM_S,
        }
    }
}

impl SimModels {
    pub fn validate(&self) -> Result<(), &'static str> {
        self.camera.validate()?;
        self.tof.validate()?;
        self.accel.validate()?;
        if !(self.d_attach_mm > 0.0 && self.max_speed_mm_s > 0.0) {
            return Err("d_attach_mm and max_speed_mm_s positive");
        }
        Ok(())
    }
}

/// World state plus the single noise generator. Sensors must be sampled in
/// the order frame, TOF, accel within a tick for runs to be reproducible.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub world: WorldState,
    pub models: SimModels,
    rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(world: WorldState, models: SimModels, seed: u64) -> Self {
        Self { world, models, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn from_scenario(scenario: &Scenario, models: SimModels) -> Self {
        Self::new(scenario.initial.clone(), models, scenario.seed)
    }

    pub fn step(&mut self, steering: &Steering, dt_ms: u64) {
        step_world(&mut self.world, steering, dt_ms);
    }

    pub fn camera_frame(&mut self) -> Vec<Detection> {
        project_detections(&self.world, &self.models.camera, &mut self.rng)
    }

    pub fn tof_sample(&mut self) -> TofSample {
        simulate_tof(&self.world, &self.models.tof, &mut self.rng)
    }

    pub fn accel_sample(&mut self) -> AccelSample {
        simulate_accel(&self.world, &self.models.accel, &mut self.rng)
    }

    pub fn actuate(&mut self, cmd: &ActuatorCommand) {
        apply_actuation(&mut self.world, cmd, self.models.d_attach_mm);
    }
}
