use thiserror::Error;

use super::codec::encode_record;
use super::record::{Meta, Payload, TraceRecord};
use crate::config::{ConfigError, ControlConfig};
use crate::controller::{ActuatorCommand, Controller, TickInput, TickOutput, Transition};
use crate::perception::{AccelSample, TofSample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("first record (seq {0}) is not a session meta record")]
    MissingMeta(u64),
    #[error("config hash mismatch: trace has {trace:016x}, expected {expected:016x}")]
    ConfigMismatch { trace: u64, expected: u64 },
    #[error("record seq {seq} is out of order")]
    OutOfOrder { seq: u64 },
    #[error("record seq {seq}: {source}")]
    Config { seq: u64, source: ConfigError },
}

/// A logged output record that disagrees with the re-run controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub seq: u64,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayReport {
    pub transitions: Vec<Transition>,
    pub commands: Vec<ActuatorCommand>,
    pub divergences: Vec<Divergence>,
    pub ticks: usize,
}

/// Re-runs the controller over the sensor records of a trace and compares
/// its state transitions and commands with the logged ones.
///
/// With `expected_config`, the trace's session records must carry the same
/// fingerprint.
pub fn replay(records: &[TraceRecord], expected_config: Option<&ControlConfig>) -> Result<ReplayReport, ReplayError> {
    let mut report = ReplayReport::default();
    walk(records, expected_config, |tick| {
        report.ticks += 1;
        report.transitions.extend(tick.output.transitions.iter().copied());
        report.commands.extend(tick.output.commands.iter().copied());
        report.divergences.extend(tick.divergences);
    })?;
    Ok(report)
}

/// One re-executed tick.
#[derive(Debug, Clone)]
pub struct ReplayedTick {
    pub input: TickInput,
    pub output: TickOutput,
    pub divergences: Vec<Divergence>,
}

/// Re-executes every tick of a trace, in order.
pub fn replay_ticks(records: &[TraceRecord]) -> Result<Vec<ReplayedTick>, ReplayError> {
    let mut out = Vec::new();
    walk(records, None, |t| out.push(t))?;
    Ok(out)
}

pub fn check_order(records: &[TraceRecord]) -> Result<(), ReplayError> {
    for pair in records.windows(2) {
        if pair[1].seq <= pair[0].seq || pair[1].t_ms < pair[0].t_ms {
            return Err(ReplayError::OutOfOrder { seq: pair[1].seq });
        }
    }
    Ok(())
}

fn walk(
    records: &[TraceRecord],
    expected_config: Option<&ControlConfig>,
    mut on_tick: impl FnMut(ReplayedTick),
) -> Result<(), ReplayError> {
    let first = records.first().ok_or(ReplayError::EmptyTrace)?;
    if !matches!(first.payload, Payload::Meta(Meta::Session { .. })) {
        return Err(ReplayError::MissingMeta(first.seq));
    }
    check_order(records)?;

    let mut controller: Option<Controller> = None;
    let mut i = 0;
    while i < records.len() {
        let t = records[i].t_ms;
        let end = i + records[i..].iter().take_while(|r| r.t_ms == t).count();
        let group = &records[i..end];
        i = end;

        let mut input = TickInput { t_ms: t, ..TickInput::default() };
        let mut last_input_seq = None;
        let mut logged = Vec::new();
        for r in group {
            match &r.payload {
                Payload::Meta(Meta::Session { config_hash, config, .. }) => {
                    let own = config.fingerprint();
                    if own != *config_hash {
                        return Err(ReplayError::ConfigMismatch { trace: *config_hash, expected: own });
                    }
                    if let Some(expected) = expected_config {
                        if expected.fingerprint() != *config_hash {
                            return Err(ReplayError::ConfigMismatch {
                                trace: *config_hash,
                                expected: expected.fingerprint(),
                            });
                        }
                    }
                    let c = Controller::new(config.clone(), t).map_err(|source| ReplayError::Config { seq: r.seq, source })?;
                    controller = Some(c);
                    last_input_seq = Some(r.seq);
                }
                Payload::Meta(Meta::Reset) => {
                    input.reset = true;
                    last_input_seq = Some(r.seq);
                }
                Payload::Meta(Meta::SetParam { key, value }) => {
                    if let Some(c) = controller.as_mut() {
                        c.set_param(key, *value).map_err(|source| ReplayError::Config { seq: r.seq, source })?;
                    }
                    last_input_seq = Some(r.seq);
                }
                Payload::Frame(dets) => {
                    input.frame = Some(dets.clone());
                    last_input_seq = Some(r.seq);
                }
                Payload::Tof { status, range_mm } => {
                    input.tof = Some(TofSample { t_ms: t, status: *status, range_mm: *range_mm });
                    last_input_seq = Some(r.seq);
                }
                Payload::Accel(a) => {
                    input.accel = Some(AccelSample { t_ms: t, a: *a });
                    last_input_seq = Some(r.seq);
                }
                Payload::State { .. } | Payload::Cmd(_) => logged.push(r),
                Payload::World(_) => {}
            }
        }

        let Some(ctl) = controller.as_mut() else { continue };
        if input.is_empty() {
            if let Some(extra) = logged.first() {
                on_tick(ReplayedTick {
                    input,
                    output: idle_output(ctl, t),
                    divergences: vec![Divergence {
                        seq: extra.seq,
                        expected: "<nothing>".into(),
                        found: encode_record(extra),
                    }],
                });
            }
            continue;
        }

        let output = ctl.tick(&input);
        let base = last_input_seq.map_or(group[0].seq, |s| s + 1);
        let expected = expected_outputs(&output, base);
        let mut divergences = Vec::new();
        for k in 0..expected.len().max(logged.len()) {
            let exp = expected.get(k);
            let got = logged.get(k).copied();
            let same = match (exp, got) {
                (Some(e), Some(g)) => e.seq == g.seq && e.payload == g.payload,
                _ => false,
            };
            if !same {
                divergences.push(Divergence {
                    seq: exp.map_or_else(|| got.map_or(0, |g| g.seq), |e| e.seq),
                    expected: exp.map_or_else(|| "<nothing>".into(), encode_record),
                    found: got.map_or_else(|| "<missing>".into(), encode_record),
                });
                // one report per tick; later records are shifted copies of the same fault
                break;
            }
        }
        on_tick(ReplayedTick { input, output, divergences });
    }
    Ok(())
}

fn idle_output(ctl: &Controller, t: u64) -> TickOutput {
    TickOutput {
        t_ms: t,
        state_after: *ctl.state(),
        events: Vec::new(),
        commands: Vec::new(),
        transitions: Vec::new(),
        telemetry: ctl.telemetry().clone(),
    }
}

/// The state and cmd records a session writer emits for one tick, numbered from `first_seq`.
pub fn expected_outputs(output: &TickOutput, first_seq: u64) -> Vec<TraceRecord> {
    let t = output.t_ms;
    output
        .transitions
        .iter()
        .map(|tr| Payload::State { from: tr.from, to: tr.to, reason: tr.reason })
        .chain(output.commands.iter().map(|c| Payload::Cmd(c.action)))
        .enumerate()
        .map(|(k, payload)| TraceRecord { seq: first_seq + k as u64, t_ms: t, payload })
        .collect()
}
