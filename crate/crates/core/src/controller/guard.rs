use super::{Action, ActuatorCommand, ControllerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardVerdict {
    Accept,
    Violation,
}

/// Software interlock in front of the solenoid. Commands must alternate,
/// starting with `Close`, and be spaced by at least `t_min_cycle_ms`.
pub fn actuator_guard(last: Option<&ActuatorCommand>, cmd: &ActuatorCommand, cfg: &ControllerConfig) -> GuardVerdict {
    let ok = match last {
        None => cmd.action == Action::Close,
        Some(prev) => {
            prev.action != cmd.action
                && cmd.t_ms >= prev.t_ms
                && cmd.t_ms - prev.t_ms >= cfg.t_min_cycle_ms
        }
    };
    if ok {
        GuardVerdict::Accept
    } else {
        GuardVerdict::Violation
    }
}
