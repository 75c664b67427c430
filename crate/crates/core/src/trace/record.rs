use crate::config::ControlConfig;
use crate::controller::{Action, Phase, TransitionReason};
use crate::geometry::Vec3;
use crate::perception::{Detection, TofStatus};
use crate::simworld::WorldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Frame,
    Tof,
    Accel,
    State,
    Cmd,
    World,
    Meta,
}

impl RecordKind {
    pub const ALL: [RecordKind; 7] = [
        RecordKind::Frame,
        RecordKind::Tof,
        RecordKind::Accel,
        RecordKind::State,
        RecordKind::Cmd,
        RecordKind::World,
        RecordKind::Meta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Frame => "frame",
            RecordKind::Tof => "tof",
            RecordKind::Accel => "accel",
            RecordKind::State => "state",
            RecordKind::Cmd => "cmd",
            RecordKind::World => "world",
            RecordKind::Meta => "meta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        RecordKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Meta {
    /// Opens a session; everything needed to re-run the controller.
    Session { config_hash: u64, seed: u64, version: String, config: ControlConfig },
    /// Operator reset fed to the controller on this tick.
    Reset,
    /// Live parameter change applied before this tick's inputs.
    SetParam { key: String, value: f64 },
}

/// Ground truth at a camera-frame tick, taken before actuation.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSnapshot {
    pub hand: Vec3,
    pub roll_deg: f64,
    pub hand_closed: bool,
    pub attached: Option<u32>,
    /// Nearest free object and its surface distance from the palm.
    pub nearest: Option<(u32, f64)>,
}

impl WorldSnapshot {
    pub fn of(w: &WorldState) -> Self {
        Self {
            hand: w.hand.position,
            roll_deg: w.hand.roll_deg,
            hand_closed: w.hand_closed,
            attached: w.attached().map(|o| o.id),
            nearest: w.nearest_free().map(|(o, d)| (o.id, d)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Frame(Vec<Detection>),
    Tof { status: TofStatus, range_mm: u32 },
    Accel(Vec3),
    State { from: Phase, to: Phase, reason: TransitionReason },
    Cmd(Action),
    World(WorldSnapshot),
    Meta(Meta),
}

impl Payload {
    pub fn kind(&self) -> RecordKind {
        match self {
            Payload::Frame(_) => RecordKind::Frame,
            Payload::Tof { .. } => RecordKind::Tof,
            Payload::Accel(_) => RecordKind::Accel,
            Payload::State { .. } => RecordKind::State,
            Payload::Cmd(_) => RecordKind::Cmd,
            Payload::World(_) => RecordKind::World,
            Payload::Meta(_) => RecordKind::Meta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub seq: u64,
    pub t_ms: u64,
    pub payload: Payload,
}

impl TraceRecord {
    pub fn kind(&self) -> RecordKind {
        self.payload.kind()
    }
}

/// Assigns sequence numbers as records are produced.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    next_seq: u64,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, t_ms: u64, payload: Payload) -> TraceRecord {
        let seq = self.next_seq;
        self.next_seq += 1;
        TraceRecord { seq, t_ms, payload }
    }
}
