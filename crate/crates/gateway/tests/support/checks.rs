//! Criterion checks shared by the integration tests and the acceptance run.
//! Each returns a one-line summary on success and the reason on failure.

use std::path::Path;
use std::time::Instant;

use graspctl_core::controller::{Action, ControlEvent};
use graspctl_core::perception::GesturePhase;
use graspctl_core::simworld::Scenario;
use graspctl_core::trace::{
    check_order, compute_metrics, decode_trace, replay, replay_ticks, Payload, TraceRecord,
};
use graspctl_gateway::config::{Mode, SessionConfig};
use graspctl_gateway::runner::{run_session, SessionReport};
use graspctl_gateway::session::TraceSink;

use super::scenarios;

pub const FPS_TARGET: f64 = 6.0;
pub const FPS_TOL: f64 = 0.1;
pub const FRAME_BUDGET_MS: f64 = 1000.0 / FPS_TARGET;
pub const FAST_60S_LIMIT_MS: f64 = 5000.0;

pub fn run_memory(cfg: &SessionConfig, scenario: Scenario, seed: u64) -> (SessionReport, Vec<TraceRecord>) {
    let (report, sink) = run_session(cfg, scenario, seed, TraceSink::Memory(Vec::new()), None).expect("session runs");
    match sink {
        TraceSink::Memory(records) => (report, records),
        _ => unreachable!("memory sink stays a memory sink"),
    }
}

fn first_cmd(records: &[TraceRecord], action: Action) -> Option<&TraceRecord> {
    records.iter().find(|r| r.payload == Payload::Cmd(action))
}

/// The scripted approach: Close only behind a confirmed, in-range target, the
/// object attaches, a held 70 degree tilt opens within one tick of the gesture
/// edge, and the object detaches.
pub fn check_e2e(seed: u64) -> Result<String, String> {
    let cfg = SessionConfig::default();
    let step = cfg.base_step_ms;
    let k = cfg.controller.k_confirm as usize;
    let hold_ms = cfg.perception.t_hold_ms;
    let (_, records) = run_memory(&cfg, scenarios::approach(), seed);

    let cmds: Vec<Action> = records
        .iter()
        .filter_map(|r| match r.payload {
            Payload::Cmd(a) => Some(a),
            _ => None,
        })
        .collect();
    if cmds != [Action::Close, Action::Open] {
        return Err(format!("seed {seed}: commands {cmds:?}, want [Close, Open]"));
    }
    let t_close = first_cmd(&records, Action::Close).unwrap().t_ms;
    let t_open = first_cmd(&records, Action::Open).unwrap().t_ms;

    let ticks = replay_ticks(&records).map_err(|e| format!("seed {seed}: replay: {e}"))?;
    let close_idx = ticks.iter().position(|t| t.output.t_ms == t_close).ok_or("close tick missing")?;
    let close_tick = &ticks[close_idx];
    match close_tick.output.telemetry.filtered_tof.and_then(|t| t.range()) {
        Some(r) if r <= cfg.perception.d_grasp_mm => {}
        other => return Err(format!("seed {seed}: filtered TOF at Close is {other:?}")),
    }
    let frames: Vec<_> = ticks[..=close_idx].iter().filter(|t| t.input.frame.is_some()).rev().take(k).collect();
    if frames.len() < k || !frames.iter().all(|t| t.output.events.contains(&ControlEvent::QualifyingFrame)) {
        return Err(format!("seed {seed}: Close at {t_close} without {k} consecutive qualifying frames"));
    }

    let world_after = |t: u64| {
        records.iter().find_map(|r| match &r.payload {
            Payload::World(w) if r.t_ms > t => Some(w.clone()),
            _ => None,
        })
    };
    let w = world_after(t_close).ok_or("no world record after Close")?;
    if !(w.hand_closed && w.attached == Some(0)) {
        return Err(format!("seed {seed}: after Close hand_closed={} attached={:?}", w.hand_closed, w.attached));
    }

    let edge = ticks
        .iter()
        .find(|t| t.output.t_ms > t_close && t.output.events.contains(&ControlEvent::GestureActive))
        .ok_or("no gesture edge after Close")?;
    let t_edge = edge.output.t_ms;
    if t_open < t_edge || t_open - t_edge > step {
        return Err(format!("seed {seed}: Open at {t_open}, gesture edge at {t_edge}"));
    }
    // the edge must come from a tilt held past threshold for the hold time
    let edge_idx = ticks.iter().position(|t| t.output.t_ms == t_edge).unwrap();
    let thresh = cfg.perception.tilt_thresh_deg;
    let above_since = ticks[..=edge_idx]
        .iter()
        .rev()
        .filter(|t| t.input.accel.is_some())
        .take_while(|t| t.output.telemetry.tilt_deg.is_some_and(|d| d >= thresh))
        .last()
        .map(|t| t.output.t_ms)
        .ok_or("no tilt above threshold before the edge")?;
    let held = t_edge - above_since;
    if held < hold_ms || held > hold_ms + 2 * cfg.rates.accel_period_ms as u64 {
        return Err(format!("seed {seed}: gesture edge after {held} ms above threshold"));
    }
    if edge.output.telemetry.gesture != Some(GesturePhase::Active) {
        return Err(format!("seed {seed}: gesture phase at edge {:?}", edge.output.telemetry.gesture));
    }

    let w = world_after(t_open).ok_or("no world record after Open")?;
    if w.hand_closed || w.attached.is_some() {
        return Err(format!("seed {seed}: after Open hand_closed={} attached={:?}", w.hand_closed, w.attached));
    }

    let report = replay(&records, None).map_err(|e| e.to_string())?;
    if !report.divergences.is_empty() {
        return Err(format!("seed {seed}: {} replay divergences", report.divergences.len()));
    }
    Ok(format!("seed {seed}: Close {t_close} ms, edge {t_edge} ms, Open {t_open} ms"))
}

/// Same seed twice gives byte-identical trace files; replay finds nothing;
/// a mutated output record is reported at its own seq.
pub fn check_determinism(seed: u64, dir: &Path) -> Result<String, String> {
    let cfg = SessionConfig::default();
    let mut texts = Vec::new();
    for run in 0..2 {
        let path = dir.join(format!("run{seed}-{run}.trace"));
        let sink = TraceSink::file(&path).map_err(|e| e.to_string())?;
        run_session(&cfg, scenarios::approach(), seed, sink, None).map_err(|e| e.to_string())?;
        texts.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    if texts[0] != texts[1] {
        return Err(format!("seed {seed}: traces differ"));
    }
    let text = String::from_utf8(texts.remove(0)).map_err(|e| e.to_string())?;
    let records = decode_trace(&text).map_err(|(l, e)| format!("line {l}: {e}"))?;
    check_order(&records).map_err(|e| e.to_string())?;
    let report = replay(&records, Some(&cfg.control_config())).map_err(|e| e.to_string())?;
    if !report.divergences.is_empty() {
        return Err(format!("seed {seed}: {} divergences on a clean trace", report.divergences.len()));
    }

    let outputs: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r.payload, Payload::State { .. } | Payload::Cmd(_)))
        .map(|(i, _)| i)
        .collect();
    if outputs.is_empty() {
        return Err("trace has no output records to mutate".into());
    }
    for &i in &outputs {
        let mut bad = records.clone();
        let seq = bad[i].seq;
        bad[i].payload = match bad[i].payload.clone() {
            Payload::Cmd(Action::Close) => Payload::Cmd(Action::Open),
            Payload::Cmd(Action::Open) => Payload::Cmd(Action::Close),
            Payload::State { from, to, reason } => Payload::State { from: to, to: from, reason },
            _ => unreachable!(),
        };
        let report = replay(&bad, None).map_err(|e| e.to_string())?;
        match report.divergences.first() {
            Some(d) if d.seq == seq => {}
            other => return Err(format!("mutation at seq {seq} reported as {other:?}")),
        }
    }
    Ok(format!(
        "seed {seed}: {} records identical across runs, {} mutations each found at their seq",
        records.len(),
        outputs.len()
    ))
}

/// Every Close across randomized reaches happens with an object within the
/// grasp distance.
pub fn check_false_grasps(seeds: std::ops::RangeInclusive<u64>) -> Result<String, String> {
    let cfg = SessionConfig::default();
    let (mut grasps, mut runs) = (0, 0);
    for seed in seeds {
        let (_, records) = run_memory(&cfg, scenarios::randomized(seed), seed);
        let m = compute_metrics(&records).map_err(|e| e.to_string())?;
        for e in &m.episodes {
            if e.grasp_valid != Some(true) {
                return Err(format!(
                    "seed {seed}: Close at {} ms with nearest object at {:?} mm",
                    e.close_t_ms, e.nearest_mm_at_close
                ));
            }
        }
        grasps += m.grasp_count();
        runs += 1;
    }
    if grasps == 0 {
        return Err(format!("{runs} scenarios produced no grasps at all"));
    }
    Ok(format!("{runs} scenarios, {grasps} grasps, 0 false"))
}

/// A 60 s scripted session: fast mode finishes quickly; realtime mode holds
/// the camera rate and the per-tick latency budget.
pub fn check_frame_budget(mode: Mode, duration_ms: u64) -> Result<String, String> {
    let cfg = SessionConfig { mode, ..SessionConfig::default() };
    let mut scenario = scenarios::approach();
    scenario.duration_ms = duration_ms;
    let started = Instant::now();
    let (report, records) = run_memory(&cfg, scenario, 1);
    let wall_ms = started.elapsed().as_secs_f64() * 1000.0;
    let m = compute_metrics(&records).map_err(|e| e.to_string())?;
    let p99 = report.tick_latency_p99_ms.ok_or("no tick latencies")?;
    if p99 >= FRAME_BUDGET_MS {
        return Err(format!("p99 tick latency {p99:.3} ms"));
    }
    let sim_fps = report.frames as f64 * 1000.0 / report.sim_ms as f64;
    if (sim_fps - FPS_TARGET).abs() > FPS_TOL {
        return Err(format!("simulated fps {sim_fps:.3}"));
    }
    match mode {
        Mode::Fast => {
            let limit = FAST_60S_LIMIT_MS * duration_ms as f64 / 60_000.0;
            if wall_ms >= limit {
                return Err(format!("fast run took {wall_ms:.0} ms"));
            }
            Ok(format!("fast: {} frames in {wall_ms:.0} ms wall, p99 {p99:.3} ms", report.frames))
        }
        Mode::Realtime => {
            if (report.wall_fps - FPS_TARGET).abs() > FPS_TOL {
                return Err(format!("wall fps {:.3}", report.wall_fps));
            }
            Ok(format!(
                "realtime: {} frames, {:.3} fps wall, {:.3} fps in trace, p99 {p99:.3} ms",
                report.frames, report.wall_fps, m.achieved_fps
            ))
        }
    }
}
