//! Exhaustive check of the grasp state machine: every event sequence up to a
//! fixed length, from a set of reachable starting states, under several
//! inter-event delays, against an independently tracked set of safety rules.

use std::collections::{BTreeMap, VecDeque};

use graspctl_core::controller::{
    actuator_guard, fsm_step, Action, ActuatorCommand, ControlEvent, ControllerConfig, FsmState, GuardVerdict, Phase,
};

pub const MAX_LEN: usize = 6;
pub const DELAYS_MS: [u64; 4] = [0, 10, 170, 1000];

#[derive(Debug, Default)]
pub struct Summary {
    pub start_states: usize,
    pub sequences: u64,
    pub steps: u64,
    pub phases_covered: usize,
}

/// What the checker remembers between events, derived only from the
/// events fed in and the commands observed.
#[derive(Debug, Clone, Copy)]
struct Observer {
    consecutive_qualifying: u32,
    last_command: Option<ActuatorCommand>,
}

fn state_key(s: &FsmState) -> (Phase, u32, bool, bool, Option<Action>) {
    (s.phase, s.confirm_count, s.rearm_ok, s.hand_closed, s.last_command.map(|c| c.action))
}

/// Distinct states reachable from power-on within `depth` events.
pub fn reachable_states(cfg: &ControllerConfig, depth: usize) -> Vec<(FsmState, u64)> {
    let mut seen: BTreeMap<String, (FsmState, u64)> = BTreeMap::new();
    let mut queue = VecDeque::from([(FsmState::new(0), 0u64, 0usize)]);
    while let Some((s, t, d)) = queue.pop_front() {
        let key = format!("{:?}", state_key(&s));
        if seen.contains_key(&key) {
            continue;
        }
        seen.insert(key, (s, t));
        if d == depth {
            continue;
        }
        for ev in ControlEvent::ALL {
            for dt in [10, 1000] {
                let step = fsm_step(&s, ev, t + dt, cfg);
                queue.push_back((step.state, t + dt, d + 1));
            }
        }
    }
    seen.into_values().collect()
}

fn check_step(
    before: &FsmState,
    ev: ControlEvent,
    t: u64,
    obs: &mut Observer,
    cfg: &ControllerConfig,
) -> Result<FsmState, String> {
    let step = fsm_step(before, ev, t, cfg);
    let after = step.state;

    if before.phase == Phase::Fault && ev != ControlEvent::Reset && after.phase != Phase::Fault {
        return Err(format!("left Fault on {ev:?}"));
    }

    if let Some(cmd) = step.command {
        if before.phase == Phase::Fault || after.phase == Phase::Fault {
            return Err(format!("{:?} issued in or into Fault", cmd.action));
        }
        if cmd.action == Action::Close && obs.consecutive_qualifying + 1 < cfg.k_confirm {
            return Err(format!("Close after only {} qualifying frames", obs.consecutive_qualifying + 1));
        }
        match obs.last_command {
            None if cmd.action != Action::Close => return Err("first command is not Close".into()),
            Some(prev) if prev.action == cmd.action => return Err(format!("{:?} repeated", cmd.action)),
            Some(prev) if cmd.t_ms - prev.t_ms < cfg.t_min_cycle_ms => {
                return Err(format!("commands {} ms apart", cmd.t_ms - prev.t_ms))
            }
            _ => {}
        }
        if actuator_guard(obs.last_command.as_ref(), &cmd, cfg) != GuardVerdict::Accept {
            return Err(format!("guard rejects {cmd:?}"));
        }
        obs.last_command = Some(cmd);
    }

    let same_scan = before.phase == Phase::Scanning && after.phase == Phase::Scanning;
    obs.consecutive_qualifying = match ev {
        ControlEvent::QualifyingFrame if same_scan => obs.consecutive_qualifying + 1,
        ControlEvent::QualifyingFrame | ControlEvent::NonQualifyingFrame | ControlEvent::Reset | ControlEvent::Stale => 0,
        _ if same_scan => obs.consecutive_qualifying,
        _ => 0,
    };
    Ok(after)
}

#[allow(clippy::too_many_arguments)]
fn explore(
    s: &FsmState,
    t: u64,
    dt: u64,
    obs: Observer,
    depth: usize,
    trail: &mut Vec<ControlEvent>,
    cfg: &ControllerConfig,
    summary: &mut Summary,
) -> Result<(), String> {
    if depth == MAX_LEN {
        return Ok(());
    }
    for ev in ControlEvent::ALL {
        let mut o = obs;
        trail.push(ev);
        let next = check_step(s, ev, t + dt, &mut o, cfg)
            .map_err(|e| format!("{e} (from {s:?}, dt {dt} ms, events {trail:?})"))?;
        summary.steps += 1;
        summary.sequences += 1;
        explore(&next, t + dt, dt, o, depth + 1, trail, cfg, summary)?;
        trail.pop();
    }
    Ok(())
}

pub fn model_check(cfg: &ControllerConfig) -> Result<Summary, String> {
    let starts = reachable_states(cfg, 5);
    let mut summary = Summary { start_states: starts.len(), ..Summary::default() };
    let mut phases: Vec<Phase> = starts.iter().map(|(s, _)| s.phase).collect();
    phases.sort_by_key(|p| p.as_str());
    phases.dedup();
    summary.phases_covered = phases.len();

    for (s, t) in &starts {
        let obs = Observer {
            consecutive_qualifying: if s.phase == Phase::Scanning { s.confirm_count } else { 0 },
            last_command: s.last_command,
        };
        for dt in DELAYS_MS {
            explore(s, *t, dt, obs, 0, &mut Vec::new(), cfg, &mut summary)?;
        }
    }
    Ok(summary)
}
