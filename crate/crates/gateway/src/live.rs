//! A session driven by socket clients: message handling and snapshots.

use graspctl_core::simworld::Steering;
use graspctl_core::Vec3;

use crate::protocol::{
    ActuatorView, ClientMessage, CommandView, Envelope, HandView, NearestView, ObjectView, ServerMessage, Snapshot,
    TelemetryView, WorldView,
};
use crate::session::Session;

pub const MAX_STEP_TICKS: u32 = 60_000;

pub struct LiveSession {
    pub session: Session,
    pub paused: bool,
    /// Lockstep sessions advance only through `step`.
    pub lockstep: bool,
    /// Snapshots produced by ticks run inside a message handler, waiting to
    /// be broadcast.
    pub outbox: Vec<ServerMessage>,
}

impl LiveSession {
    pub fn new(session: Session, lockstep: bool) -> Self {
        Self { session, paused: lockstep, lockstep, outbox: Vec::new() }
    }

    /// One scheduler tick; returns a snapshot on camera-frame ticks.
    pub fn tick(&mut self) -> Option<ServerMessage> {
        let r = self.session.tick();
        r.frame.then(|| ServerMessage::Snapshot(snapshot(self)))
    }
}

pub fn snapshot(live: &LiveSession) -> Snapshot {
    let s = &live.session;
    let fsm = s.fsm();
    let cfg = s.controller().config();
    let tel = s.controller().telemetry();
    let w = s.world();
    let steering = s.steering();
    Snapshot {
        t_ms: s.t_ms(),
        seed: s.seed(),
        paused: live.paused,
        phase: fsm.phase,
        confirm_count: fsm.confirm_count,
        k_confirm: cfg.controller.k_confirm,
        telemetry: TelemetryView {
            filtered_tof_mm: tel.filtered_tof.and_then(|t| t.range()),
            tof_status: tel.filtered_tof.map(|t| t.status),
            tilt_deg: tel.tilt_deg,
            tilt_thresh_deg: cfg.perception.tilt_thresh_deg,
            gesture: tel.gesture,
            gate_open: tel.gate_open,
            target: tel.target.clone(),
        },
        detections: s.last_detections().to_vec(),
        actuator: ActuatorView {
            closed: fsm.hand_closed,
            last_command: fsm.last_command.map(|c| CommandView { action: c.action, t_ms: c.t_ms }),
        },
        world: WorldView {
            hand: HandView {
                position: w.hand.position.to_array(),
                yaw_deg: w.hand.yaw_deg,
                pitch_deg: w.hand.pitch_deg,
                roll_deg: w.hand.roll_deg,
                tilt_cmd_deg: w.hand.tilt_cmd_deg,
                velocity: steering.velocity.to_array(),
            },
            objects: w
                .objects
                .iter()
                .map(|o| ObjectView {
                    id: o.id,
                    label: o.label.clone(),
                    class_id: o.class_id,
                    center: o.center.to_array(),
                    radius: o.radius,
                    attached: o.attached,
                })
                .collect(),
            hand_closed: w.hand_closed,
            attached_id: w.attached().map(|o| o.id),
            nearest: w.nearest_free().map(|(o, d)| NearestView { id: o.id, distance_mm: d }),
        },
    }
}

/// Applies one client message to the session and returns its single reply.
pub fn handle_client_msg(live: &mut LiveSession, env: Envelope) -> ServerMessage {
    let reference = env.reference;
    let result = apply(live, env.msg);
    match result {
        Ok(()) => ServerMessage::ack(reference),
        Err(reason) => ServerMessage::error(reference, reason),
    }
}

fn apply(live: &mut LiveSession, msg: ClientMessage) -> Result<(), String> {
    let s = &mut live.session;
    match msg {
        ClientMessage::SetVelocity { vx, vy, vz } => {
            let steering = Steering { velocity: Vec3::new(vx, vy, vz), ..s.steering() };
            s.set_steering(steering)
        }
        ClientMessage::SetTilt { deg } => {
            if !(deg.is_finite() && (-180.0..=180.0).contains(&deg)) {
                return Err("deg must be within [-180, 180]".into());
            }
            let steering = Steering { tilt_target_deg: deg, ..s.steering() };
            s.set_steering(steering)
        }
        ClientMessage::SpawnObject { label, center, radius, class_id } => {
            s.spawn_object(label, class_id, Vec3::from(center), radius).map(|_| ())
        }
        ClientMessage::RemoveObject { id } => s.remove_object(id),
        ClientMessage::Reset { seed: None } => {
            s.request_reset();
            Ok(())
        }
        ClientMessage::Reset { seed: Some(seed) } => {
            s.restart(seed);
            Ok(())
        }
        ClientMessage::Pause {} => {
            live.paused = true;
            Ok(())
        }
        ClientMessage::Resume {} => {
            if live.lockstep {
                return Err("lockstep session advances only by step".into());
            }
            live.paused = false;
            Ok(())
        }
        ClientMessage::Step { n } => {
            if !live.paused {
                return Err("step requires a paused session".into());
            }
            if n == 0 || n > MAX_STEP_TICKS {
                return Err(format!("n must be within 1..={MAX_STEP_TICKS}"));
            }
            for _ in 0..n {
                if let Some(snap) = live.tick() {
                    live.outbox.push(snap);
                }
            }
            Ok(())
        }
        ClientMessage::SetParam { key, value } => s.set_param(&key, value).map_err(|e| e.to_string()),
    }
}
