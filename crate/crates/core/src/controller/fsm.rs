use super::{
    Action, ActuatorCommand, ControlEvent, ControllerConfig, FsmState, Phase, Transition, TransitionReason,
};

/// Result of folding one event into the state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FsmStep {
    pub state: FsmState,
    pub command: Option<ActuatorCommand>,
    pub transition: Option<Transition>,
}

fn cycle_elapsed(s: &FsmState, t: u64, cfg: &ControllerConfig) -> bool {
    s.last_command.is_none_or(|c| t.saturating_sub(c.t_ms) >= cfg.t_min_cycle_ms)
}

/// Total transition table. Combinations not listed are no-ops.
///
/// Timed transitions re-check their own deadline against `t_ms`, so a
/// premature `DwellElapsed` cannot shorten an actuation. A grasp or release
/// that would land inside the solenoid's minimum cycle is deferred rather
/// than emitted.
pub fn fsm_step(s: &FsmState, ev: ControlEvent, t_ms: u64, cfg: &ControllerConfig) -> FsmStep {
    let mut next = *s;
    let mut command = None;
    let mut reason = None;
    let since_entry = t_ms.saturating_sub(s.phase_entered_t_ms);

    match (s.phase, ev) {
        (_, ControlEvent::Reset) => {
            let to = if s.hand_closed { Phase::Holding } else { Phase::Scanning };
            next.phase = to;
            next.confirm_count = 0;
            if to != s.phase {
                reason = Some(TransitionReason::Reset);
            }
        }
        (Phase::Fault, _) => {}
        (_, ControlEvent::Stale) => {
            next.phase = Phase::Fault;
            next.confirm_count = 0;
            reason = Some(TransitionReason::Stale);
        }
        (Phase::Scanning, ControlEvent::QualifyingFrame) => {
            next.confirm_count = (s.confirm_count + 1).min(cfg.k_confirm);
            if next.confirm_count >= cfg.k_confirm && cycle_elapsed(s, t_ms, cfg) {
                next.phase = Phase::Closing;
                next.confirm_count = 0;
                next.hand_closed = true;
                let cmd = ActuatorCommand { t_ms, action: Action::Close };
                next.last_command = Some(cmd);
                command = Some(cmd);
                reason = Some(TransitionReason::Grasp);
            }
        }
        (Phase::Scanning, ControlEvent::NonQualifyingFrame) => next.confirm_count = 0,
        (Phase::Closing, ControlEvent::DwellElapsed) if since_entry >= cfg.t_close_ms => {
            next.phase = Phase::Holding;
            reason = Some(TransitionReason::Closed);
        }
        (Phase::Holding, ControlEvent::GestureActive) if cycle_elapsed(s, t_ms, cfg) => {
            next.phase = Phase::Opening;
            next.rearm_ok = false;
            next.hand_closed = false;
            let cmd = ActuatorCommand { t_ms, action: Action::Open };
            next.last_command = Some(cmd);
            command = Some(cmd);
            reason = Some(TransitionReason::Release);
        }
        (Phase::Opening, ControlEvent::DwellElapsed | ControlEvent::GestureCleared) => {
            if ev == ControlEvent::GestureCleared {
                next.rearm_ok = true;
            }
            let settled = since_entry >= cfg.t_open_ms.max(cfg.t_refractory_ms);
            if next.rearm_ok && settled {
                next.phase = Phase::Scanning;
                next.confirm_count = 0;
                reason = Some(TransitionReason::Rearmed);
            }
        }
        (_, ControlEvent::GestureCleared) => next.rearm_ok = true,
        _ => {}
    }

    let transition = reason.map(|reason| {
        next.phase_entered_t_ms = t_ms;
        Transition { t_ms, from: s.phase, to: next.phase, reason }
    });
    FsmStep { state: next, command, transition }
}
