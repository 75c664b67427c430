use crate::config::ControlConfig;
use crate::perception::{
    distance_gate, gesture_step, select_target, Detection, GesturePhase, GestureReading, GestureState,
    MedianFilter, TofSample,
};

use super::{ControlEvent, ControllerConfig, FsmState, Phase, TickInput};

/// Perception-side state owned by the controller.
#[derive(Debug, Clone)]
pub struct PerceptionStates {
    pub median: MedianFilter,
    pub gesture: GestureState,
    /// Gesture status after the previous accelerometer sample, for edge detection.
    pub last_gesture: GesturePhase,
    /// Most recent filter output, valid or not.
    pub last_filtered: Option<TofSample>,
}

/// Timestamp of the most recent sample from each sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LastSeen {
    pub frame_t_ms: u64,
    pub tof_t_ms: u64,
    pub accel_t_ms: u64,
}

impl LastSeen {
    pub fn starting_at(t_ms: u64) -> Self {
        Self { frame_t_ms: t_ms, tof_t_ms: t_ms, accel_t_ms: t_ms }
    }
}

/// `Stale` iff some sensor's age strictly exceeds `stale_factor` times its period.
pub fn staleness_check(last_seen: &LastSeen, t_ms: u64, cfg: &ControllerConfig) -> Option<ControlEvent> {
    let too_old = |seen: u64, period: f64| t_ms.saturating_sub(seen) as f64 > cfg.stale_factor * period;
    let stale = too_old(last_seen.frame_t_ms, cfg.frame_period_ms)
        || too_old(last_seen.tof_t_ms, cfg.tof_period_ms)
        || too_old(last_seen.accel_t_ms, cfg.accel_period_ms);
    stale.then_some(ControlEvent::Stale)
}

/// Perception results produced by one tick; `None` fields were not updated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TelemetryUpdate {
    pub filtered_tof: Option<TofSample>,
    pub gesture: Option<GestureReading>,
    /// Selected target and gate result, present on camera-frame ticks.
    pub frame: Option<(Option<Detection>, bool)>,
}

fn dwell_expired(s: &FsmState, t_ms: u64, cfg: &ControllerConfig) -> bool {
    let since = t_ms.saturating_sub(s.phase_entered_t_ms);
    match s.phase {
        Phase::Closing => since >= cfg.t_close_ms,
        Phase::Opening => since >= cfg.t_open_ms,
        _ => false,
    }
}

/// Runs the perception pipeline over one tick's samples and emits control
/// events in application order: Reset, Stale, DwellElapsed, gesture edges,
/// frame events.
pub fn assemble_events(
    input: &TickInput,
    perception: &mut PerceptionStates,
    fsm: &FsmState,
    last_seen: &mut LastSeen,
    cfg: &ControlConfig,
) -> (Vec<ControlEvent>, TelemetryUpdate) {
    let t = input.t_ms;
    let mut update = TelemetryUpdate::default();
    let mut events = Vec::with_capacity(4);

    if let Some(tof) = &input.tof {
        last_seen.tof_t_ms = t;
        let filtered = perception.median.push(*tof);
        perception.last_filtered = Some(filtered);
        update.filtered_tof = Some(filtered);
    }

    let mut gesture_edge = None;
    if let Some(accel) = &input.accel {
        last_seen.accel_t_ms = t;
        let reading = gesture_step(&mut perception.gesture, accel, &cfg.perception);
        let was = perception.last_gesture;
        gesture_edge = match (was == GesturePhase::Active, reading.status == GesturePhase::Active) {
            (false, true) => Some(ControlEvent::GestureActive),
            (true, false) => Some(ControlEvent::GestureCleared),
            _ => None,
        };
        perception.last_gesture = reading.status;
        update.gesture = Some(reading);
    }

    let mut frame_event = None;
    if let Some(detections) = &input.frame {
        last_seen.frame_t_ms = t;
        let target = select_target(detections, &cfg.perception).cloned();
        // the gate reads the latest filtered range, whether or not it arrived this tick
        let gate = perception.last_filtered.is_some_and(|f| distance_gate(&f, &cfg.perception));
        frame_event = Some(if target.is_some() && gate {
            ControlEvent::QualifyingFrame
        } else {
            ControlEvent::NonQualifyingFrame
        });
        update.frame = Some((target, gate));
    }

    if input.reset {
        events.push(ControlEvent::Reset);
    }
    events.extend(staleness_check(last_seen, t, &cfg.controller));
    if dwell_expired(fsm, t, &cfg.controller) {
        events.push(ControlEvent::DwellElapsed);
    }
    events.extend(gesture_edge);
    events.extend(frame_event);
    (events, update)
}
