//! JSON messages exchanged over `/ws`. See `docs/protocol.md`.

use graspctl_core::controller::{Action, Phase};
use graspctl_core::perception::{Detection, GesturePhase, TofStatus};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    SetVelocity { vx: f64, vy: f64, vz: f64 },
    SetTilt { deg: f64 },
    SpawnObject {
        label: String,
        center: [f64; 3],
        radius: f64,
        #[serde(default)]
        class_id: u32,
    },
    RemoveObject { id: u32 },
    /// Without a seed: operator reset of the controller. With a seed: restart
    /// the scene from its initial state with that seed.
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
    Pause {},
    Resume {},
    Step { n: u32 },
    SetParam { key: String, value: f64 },
}

/// A client message plus the optional `ref` echoed back in its reply.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub reference: Option<u64>,
    pub msg: ClientMessage,
}

/// Why a text frame could not be turned into an [`Envelope`]; carries the
/// `ref` if one could still be read.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseFailure {
    pub reference: Option<u64>,
    pub reason: String,
}

pub fn parse_client_message(text: &str) -> Result<Envelope, ParseFailure> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| ParseFailure { reference: None, reason: format!("malformed JSON: {e}") })?;
    let Some(obj) = value.as_object_mut() else {
        return Err(ParseFailure { reference: None, reason: "message must be a JSON object".into() });
    };
    let reference = match obj.remove("ref") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) if n.as_u64().is_some() => n.as_u64(),
        Some(_) => return Err(ParseFailure { reference: None, reason: "ref must be a non-negative integer".into() }),
    };
    let msg =
        serde_json::from_value(value).map_err(|e| ParseFailure { reference, reason: format!("bad message: {e}") })?;
    Ok(Envelope { reference, msg })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ServerMessage {
    Snapshot(Snapshot),
    Ack {
        #[serde(rename = "ref")]
        reference: Option<u64>,
    },
    Error {
        #[serde(rename = "ref")]
        reference: Option<u64>,
        reason: String,
    },
}

impl ServerMessage {
    pub fn ack(reference: Option<u64>) -> Self {
        ServerMessage::Ack { reference }
    }

    pub fn error(reference: Option<u64>, reason: impl Into<String>) -> Self {
        ServerMessage::Error { reference, reason: reason.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

/// Full session state for rendering. Every field is present in every
/// snapshot; absent values are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t_ms: u64,
    pub seed: u64,
    pub paused: bool,
    pub phase: Phase,
    pub confirm_count: u32,
    pub k_confirm: u32,
    pub telemetry: TelemetryView,
    pub detections: Vec<Detection>,
    pub actuator: ActuatorView,
    pub world: WorldView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryView {
    pub filtered_tof_mm: Option<u32>,
    pub tof_status: Option<TofStatus>,
    pub tilt_deg: Option<f64>,
    pub tilt_thresh_deg: f64,
    pub gesture: Option<GesturePhase>,
    pub gate_open: bool,
    pub target: Option<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorView {
    pub closed: bool,
    pub last_command: Option<CommandView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandView {
    pub action: Action,
    pub t_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldView {
    pub hand: HandView,
    pub objects: Vec<ObjectView>,
    pub hand_closed: bool,
    pub attached_id: Option<u32>,
    pub nearest: Option<NearestView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandView {
    pub position: [f64; 3],
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub tilt_cmd_deg: f64,
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectView {
    pub id: u32,
    pub label: String,
    pub class_id: u32,
    pub center: [f64; 3],
    pub radius: f64,
    pub attached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearestView {
    pub id: u32,
    pub distance_mm: f64,
}
