//! Grasp/release state machine driven at a fixed tick.
//!
//! Each tick turns raw sensor samples into control events
//! ([`assemble_events`]), folds them through the transition table
//! ([`fsm_step`]) in a fixed order, and passes any actuator command through
//! the solenoid interlock ([`actuator_guard`]) before it leaves the
//! controller. `Fault` is the only error channel.

mod assemble;
mod fsm;
mod guard;

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ControlConfig};
use crate::perception::{Detection, GesturePhase, GestureState, MedianFilter, TofSample};

pub use assemble::{assemble_events, staleness_check, LastSeen, PerceptionStates, TelemetryUpdate};
pub use fsm::{fsm_step, FsmStep};
pub use guard::{actuator_guard, GuardVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Scanning,
    Closing,
    Holding,
    Opening,
    Fault,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::Scanning, Phase::Closing, Phase::Holding, Phase::Opening, Phase::Fault];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Scanning => "Scanning",
            Phase::Closing => "Closing",
            Phase::Holding => "Holding",
            Phase::Opening => "Opening",
            Phase::Fault => "Fault",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Close,
    Open,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Close => "Close",
            Action::Open => "Open",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        match s {
            "Close" => Some(Action::Close),
            "Open" => Some(Action::Open),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub t_ms: u64,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlEvent {
    QualifyingFrame,
    NonQualifyingFrame,
    GestureActive,
    GestureCleared,
    DwellElapsed,
    Stale,
    Reset,
}

impl ControlEvent {
    pub const ALL: [ControlEvent; 7] = [
        ControlEvent::QualifyingFrame,
        ControlEvent::NonQualifyingFrame,
        ControlEvent::GestureActive,
        ControlEvent::GestureCleared,
        ControlEvent::DwellElapsed,
        ControlEvent::Stale,
        ControlEvent::Reset,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionReason {
    Grasp,
    Closed,
    Release,
    Rearmed,
    Stale,
    Interlock,
    ClockSkew,
    Reset,
}

impl TransitionReason {
    const ALL: [TransitionReason; 8] = [
        TransitionReason::Grasp,
        TransitionReason::Closed,
        TransitionReason::Release,
        TransitionReason::Rearmed,
        TransitionReason::Stale,
        TransitionReason::Interlock,
        TransitionReason::ClockSkew,
        TransitionReason::Reset,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionReason::Grasp => "Grasp",
            TransitionReason::Closed => "Closed",
            TransitionReason::Release => "Release",
            TransitionReason::Rearmed => "Rearmed",
            TransitionReason::Stale => "Stale",
            TransitionReason::Interlock => "Interlock",
            TransitionReason::ClockSkew => "ClockSkew",
            TransitionReason::Reset => "Reset",
        }
    }

    pub fn parse(s: &str) -> Option<TransitionReason> {
        TransitionReason::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub t_ms: u64,
    pub from: Phase,
    pub to: Phase,
    pub reason: TransitionReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsmState {
    pub phase: Phase,
    /// Consecutive qualifying frames; only non-zero while scanning.
    pub confirm_count: u32,
    pub phase_entered_t_ms: u64,
    /// Gesture has cleared since the last release.
    pub rearm_ok: bool,
    /// Actuator history: whether the last accepted command closed the hand.
    pub hand_closed: bool,
    pub last_command: Option<ActuatorCommand>,
}

impl FsmState {
    pub fn new(t_ms: u64) -> Self {
        Self {
            phase: Phase::Scanning,
            confirm_count: 0,
            phase_entered_t_ms: t_ms,
            rearm_ok: true,
            hand_closed: false,
            last_command: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FaultPolicy {
    /// Leave the actuator where it is and latch `Fault`.
    #[default]
    HoldPosition,
}

impl FaultPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultPolicy::HoldPosition => "HoldPosition",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s == "HoldPosition").then_some(FaultPolicy::HoldPosition)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub k_confirm: u32,
    pub t_close_ms: u64,
    pub t_open_ms: u64,
    pub t_refractory_ms: u64,
    pub t_min_cycle_ms: u64,
    pub stale_factor: f64,
    pub frame_period_ms: f64,
    pub accel_period_ms: f64,
    pub tof_period_ms: f64,
    pub fault_policy: FaultPolicy,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            k_confirm: 3,
            t_close_ms: 800,
            t_open_ms: 800,
            t_refractory_ms: 1000,
            t_min_cycle_ms: 500,
            stale_factor: 3.0,
            frame_period_ms: 166.7,
            accel_period_ms: 10.0,
            tof_period_ms: 33.3,
            fault_policy: FaultPolicy::HoldPosition,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let periods = [self.frame_period_ms, self.accel_period_ms, self.tof_period_ms];
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(ConfigError::Invalid("sensor periods > 0"));
        }
        if self.t_close_ms < self.t_min_cycle_ms || self.t_open_ms < self.t_min_cycle_ms {
            return Err(ConfigError::Invalid("t_close_ms and t_open_ms >= t_min_cycle_ms"));
        }
        if self.k_confirm < 1 {
            return Err(ConfigError::Invalid("k_confirm >= 1"));
        }
        if !(self.stale_factor.is_finite() && self.stale_factor > 0.0) {
            return Err(ConfigError::Invalid("stale_factor > 0"));
        }
        Ok(())
    }
}

/// One controller tick's worth of sensor data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickInput {
    pub t_ms: u64,
    /// Present only on camera-frame ticks.
    pub frame: Option<Vec<Detection>>,
    /// Raw (unfiltered) range sample.
    pub tof: Option<TofSample>,
    pub accel: Option<crate::perception::AccelSample>,
    pub reset: bool,
}

impl TickInput {
    pub fn is_empty(&self) -> bool {
        self.frame.is_none() && self.tof.is_none() && self.accel.is_none() && !self.reset
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Telemetry {
    pub filtered_tof: Option<TofSample>,
    pub tilt_deg: Option<f64>,
    pub gesture: Option<GesturePhase>,
    pub target: Option<Detection>,
    pub gate_open: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub t_ms: u64,
    pub state_after: FsmState,
    pub events: Vec<ControlEvent>,
    pub commands: Vec<ActuatorCommand>,
    pub transitions: Vec<Transition>,
    pub telemetry: Telemetry,
}

/// The firmware loop state: perception filters, FSM, and actuator history.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControlConfig,
    fsm: FsmState,
    perception: PerceptionStates,
    last_seen: LastSeen,
    guard_history: Option<ActuatorCommand>,
    telemetry: Telemetry,
    last_t_ms: u64,
}

impl Controller {
    pub fn new(cfg: ControlConfig, start_t_ms: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            fsm: FsmState::new(start_t_ms),
            perception: PerceptionStates {
                median: MedianFilter::new(cfg.perception.tof_window),
                gesture: GestureState::new(cfg.perception.neutral_axis),
                last_gesture: GesturePhase::Inactive,
                last_filtered: None,
            },
            last_seen: LastSeen::starting_at(start_t_ms),
            guard_history: None,
            telemetry: Telemetry::default(),
            last_t_ms: start_t_ms,
            cfg,
        })
    }

    pub fn config(&self) -> &ControlConfig {
        &self.cfg
    }

    pub fn state(&self) -> &FsmState {
        &self.fsm
    }

    pub fn telemetry(&self) -> &Telemetry {
        &self.telemetry
    }

    /// Live parameter change; keeps the confirmation counter within the new bound.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        self.cfg.set_param(key, value)?;
        self.fsm.confirm_count = self.fsm.confirm_count.min(self.cfg.controller.k_confirm);
        Ok(())
    }

    pub fn tick(&mut self, input: &TickInput) -> TickOutput {
        let t = input.t_ms;
        let mut out = TickOutput {
            t_ms: t,
            state_after: self.fsm,
            events: Vec::new(),
            commands: Vec::new(),
            transitions: Vec::new(),
            telemetry: self.telemetry.clone(),
        };

        if t < self.last_t_ms {
            if self.fsm.phase != Phase::Fault {
                out.transitions.push(self.enter_fault(t, TransitionReason::ClockSkew));
            }
            out.state_after = self.fsm;
            return out;
        }
        self.last_t_ms = t;

        let (events, telemetry) =
            assemble_events(input, &mut self.perception, &self.fsm, &mut self.last_seen, &self.cfg);
        self.telemetry.merge(telemetry);

        for ev in &events {
            let step = fsm_step(&self.fsm, *ev, t, &self.cfg.controller);
            let mut next = step.state;
            let mut transition = step.transition;
            if let Some(cmd) = step.command {
                match actuator_guard(self.guard_history.as_ref(), &cmd, &self.cfg.controller) {
                    GuardVerdict::Accept => {
                        self.guard_history = Some(cmd);
                        out.commands.push(cmd);
                    }
                    GuardVerdict::Violation => {
                        // the command never reaches the solenoid
                        let from = self.fsm.phase;
                        next = self.fsm;
                        next.phase = Phase::Fault;
                        next.confirm_count = 0;
                        next.phase_entered_t_ms = t;
                        transition = Some(Transition { t_ms: t, from, to: Phase::Fault, reason: TransitionReason::Interlock });
                    }
                }
            }
            self.fsm = next;
            out.transitions.extend(transition);
        }

        out.events = events;
        out.state_after = self.fsm;
        out.telemetry = self.telemetry.clone();
        out
    }

    fn enter_fault(&mut self, t: u64, reason: TransitionReason) -> Transition {
        let from = self.fsm.phase;
        self.fsm.phase = Phase::Fault;
        self.fsm.confirm_count = 0;
        self.fsm.phase_entered_t_ms = t;
        Transition { t_ms: t, from, to: Phase::Fault, reason }
    }
}

impl Telemetry {
    fn merge(&mut self, update: TelemetryUpdate) {
        if let Some(tof) = update.filtered_tof {
            self.filtered_tof = Some(tof);
        }
        if let Some(reading) = update.gesture {
            self.gesture = Some(reading.status);
            self.tilt_deg = reading.tilt_deg;
        }
        if let Some((target, gate_open)) = update.frame {
            self.target = target;
            self.gate_open = gate_open;
        }
    }
}
