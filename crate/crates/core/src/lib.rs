//! Controller, simulated hardware, and trace tooling for a vision-gated
//! pneumatic hand exoskeleton.
//!
//! The pipeline per tick: camera detections and TOF range decide whether a
//! grasp target is present and within reach; the accelerometer's tilt
//! gesture asks for release; the [`controller`] turns both into guarded
//! Close/Open commands for the glove's solenoid.

pub mod config;
pub mod controller;
pub mod geometry;
pub mod perception;
pub mod simworld;
pub mod trace;

pub use config::{ConfigError, ControlConfig};
pub use geometry::Vec3;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
