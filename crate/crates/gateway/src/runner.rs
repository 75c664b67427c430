use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use graspctl_core::simworld::Scenario;
use graspctl_core::trace::percentile;
use serde::Serialize;

use crate::config::{Mode, SessionConfig};
use crate::session::{Session, SessionError, SteeringSource, TraceSink};

#[derive(Debug, Clone, Serialize)]
pub struct SessionReport {
    pub seed: u64,
    pub ticks: usize,
    pub frames: usize,
    pub commands: usize,
    pub sim_ms: u64,
    pub wall_ms: f64,
    /// Camera frames per wall-clock second.
    pub wall_fps: f64,
    pub tick_latency_p50_ms: Option<f64>,
    pub tick_latency_p99_ms: Option<f64>,
    pub interrupted: bool,
}

/// Runs a scripted scenario to its duration (or until `stop` is raised),
/// pacing ticks to the wall clock in realtime mode.
pub fn run_session(
    cfg: &SessionConfig,
    scenario: Scenario,
    seed: u64,
    sink: TraceSink,
    stop: Option<&AtomicBool>,
) -> Result<(SessionReport, TraceSink), SessionError> {
    let mut session = Session::new(cfg, scenario, seed, SteeringSource::Scripted, sink)?;
    let step = Duration::from_millis(cfg.base_step_ms);
    let wall_start = Instant::now();
    let mut ticks = 0usize;
    let mut interrupted = false;

    loop {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            interrupted = true;
            break;
        }
        if cfg.mode == Mode::Realtime {
            let deadline = wall_start + step * ticks as u32;
            if let Some(wait) = deadline.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        session.tick();
        ticks += 1;
        if session.finished() {
            break;
        }
    }
    if cfg.mode == Mode::Realtime {
        // the last tick's interval is part of the session too
        let end = wall_start + step * ticks as u32;
        if let Some(wait) = end.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
    }

    let wall_ms = wall_start.elapsed().as_secs_f64() * 1000.0;
    let frames = session.frame_count();
    let report = SessionReport {
        seed,
        ticks,
        frames,
        commands: session.command_count(),
        sim_ms: session.elapsed_ms(),
        wall_ms,
        wall_fps: if wall_ms > 0.0 { frames as f64 * 1000.0 / wall_ms } else { 0.0 },
        tick_latency_p50_ms: percentile(session.latencies_ms(), 50.0),
        tick_latency_p99_ms: percentile(session.latencies_ms(), 99.0),
        interrupted,
    };
    let sink = session.finish()?;
    Ok((report, sink))
}
