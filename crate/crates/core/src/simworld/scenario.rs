//! Scenario files: a TOML document describing the initial scene, a steering
//! timeline, and optional expected outcomes. See `docs/scenario.md`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::world::{HandPose, SimObject, Steering, WorldState, DEFAULT_MAX_SPEED_MM_S, DEFAULT_TILT_SLEW_DEG_S};
use crate::geometry::Vec3;

pub const DEFAULT_DURATION_MS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

/// Outcomes a scripted run is expected to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub grasps: Option<u32>,
    pub releases: Option<u32>,
    pub false_grasps: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub duration_ms: u64,
    pub initial: WorldState,
    /// Sorted by time; each entry holds from its `t_ms` until the next.
    pub timeline: Vec<(u64, Steering)>,
    pub expect: Option<Expectations>,
}

impl Scenario {
    pub fn steering_at(&self, t_ms: u64) -> Steering {
        let idx = self.timeline.partition_point(|(t, _)| *t <= t_ms);
        if idx == 0 {
            Steering::default()
        } else {
            self.timeline[idx - 1].1
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    duration_ms: Option<u64>,
    hand: Option<HandFile>,
    #[serde(default, rename = "object")]
    objects: Vec<ObjectFile>,
    #[serde(default)]
    steer: Vec<SteerFile>,
    expect: Option<Expectations>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct HandFile {
    position: Option<[f64; 3]>,
    yaw: Option<f64>,
    pitch: Option<f64>,
    roll: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    label: Option<String>,
    class_id: Option<u32>,
    center: [f64; 3],
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SteerFile {
    t_ms: u64,
    velocity: Option<[f64; 3]>,
    tilt: Option<f64>,
    slew: Option<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

/// Parses and validates a scenario. Steering entries inherit unspecified
/// fields from the entry before them.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;

    let duration_ms = file.duration_ms.unwrap_or(DEFAULT_DURATION_MS);
    if duration_ms == 0 {
        return Err(invalid("duration_ms must be positive"));
    }

    let hand_file = file.hand.unwrap_or_default();
    let hand = HandPose {
        position: hand_file.position.map(Vec3::from).unwrap_or(Vec3::ZERO),
        yaw_deg: hand_file.yaw.unwrap_or(0.0),
        pitch_deg: hand_file.pitch.unwrap_or(0.0),
        roll_deg: hand_file.roll.unwrap_or(0.0),
        tilt_cmd_deg: hand_file.roll.unwrap_or(0.0),
    };
    let pose_finite = [hand.yaw_deg, hand.pitch_deg, hand.roll_deg].iter().all(|v| v.is_finite());
    if !hand.position.is_finite() || !pose_finite {
        return Err(invalid("hand pose must be finite"));
    }

    let mut objects = Vec::with_capacity(file.objects.len());
    for (i, o) in file.objects.into_iter().enumerate() {
        let center = Vec3::from(o.center);
        if !center.is_finite() {
            return Err(invalid(format!("object {i}: center must be finite")));
        }
        if !(o.radius > 0.0 && o.radius.is_finite()) {
            return Err(invalid(format!("object {i}: radius must be positive")));
        }
        objects.push(SimObject {
            id: i as u32,
            label: o.label.unwrap_or_else(|| "object".to_string()),
            class_id: o.class_id.unwrap_or(0),
            center,
            radius: o.radius,
            attached: false,
        });
    }

    let mut timeline: Vec<(u64, Steering)> = Vec::with_capacity(file.steer.len());
    let mut current = Steering { tilt_target_deg: hand.roll_deg, ..Steering::default() };
    for (i, s) in file.steer.into_iter().enumerate() {
        if let Some((prev_t, _)) = timeline.last() {
            if s.t_ms <= *prev_t {
                return Err(invalid(format!(
                    "timeline must be sorted by strictly increasing t_ms (entry {i} at {} follows {prev_t})",
                    s.t_ms
                )));
            }
        }
        if let Some(v) = s.velocity {
            current.velocity = Vec3::from(v);
        }
        if let Some(t) = s.tilt {
            current.tilt_target_deg = t;
        }
        current.tilt_slew_deg_per_s = s.slew.unwrap_or(if i == 0 { DEFAULT_TILT_SLEW_DEG_S } else { current.tilt_slew_deg_per_s });
        if !current.within_limits(DEFAULT_MAX_SPEED_MM_S) {
            return Err(invalid(format!("steer entry {i}: speed must not exceed {DEFAULT_MAX_SPEED_MM_S} mm/s")));
        }
        timeline.push((s.t_ms, current));
    }

    Ok(Scenario {
        seed: file.seed,
        duration_ms,
        initial: WorldState::new(hand, objects),
        timeline,
        expect: file.expect,
    })
}
