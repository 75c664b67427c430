use serde::Serialize;
use thiserror::Error;

use super::record::{Meta, Payload, TraceRecord};
use super::replay::{replay_ticks, ReplayError};
use crate::controller::{Action, ControlEvent, Phase};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trace has no session record or no camera frames")]
    EmptyTrace,
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// One grasp, from the Close command to the matching Open (if any).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Episode {
    pub close_t_ms: u64,
    pub open_t_ms: Option<u64>,
    /// From the start of scanning (session start or re-arm) to Close.
    pub time_to_grasp_ms: u64,
    /// Ground-truth nearest-object distance was within the grasp distance
    /// at Close time. `None` when the trace has no world record to judge by.
    pub grasp_valid: Option<bool>,
    pub nearest_mm_at_close: Option<f64>,
    /// From the gesture's Active edge to the Open command.
    pub release_latency_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub episodes: Vec<Episode>,
    pub false_grasp_count: usize,
    pub frame_count: usize,
    pub span_ms: u64,
    pub achieved_fps: f64,
    /// Wall-clock tick latencies are not part of the trace; filled in by the
    /// session runner via [`Metrics::with_tick_latencies`].
    pub tick_latency_p50_ms: Option<f64>,
    pub tick_latency_p99_ms: Option<f64>,
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

impl Metrics {
    pub fn with_tick_latencies(mut self, latencies_ms: &[f64]) -> Self {
        self.tick_latency_p50_ms = percentile(latencies_ms, 50.0);
        self.tick_latency_p99_ms = percentile(latencies_ms, 99.0);
        self
    }

    pub fn grasp_count(&self) -> usize {
        self.episodes.len()
    }

    pub fn release_count(&self) -> usize {
        self.episodes.iter().filter(|e| e.open_t_ms.is_some()).count()
    }
}

pub fn compute_metrics(records: &[TraceRecord]) -> Result<Metrics, MetricsError> {
    let has_session = records.iter().any(|r| matches!(r.payload, Payload::Meta(Meta::Session { .. })));
    let frame_count = records.iter().filter(|r| matches!(r.payload, Payload::Frame(_))).count();
    if !has_session || frame_count == 0 {
        return Err(MetricsError::EmptyTrace);
    }

    let first_t = records.first().map_or(0, |r| r.t_ms);
    let last_t = records.last().map_or(0, |r| r.t_ms);
    let span_ms = last_t - first_t;
    let achieved_fps = if span_ms == 0 { 0.0 } else { frame_count as f64 * 1000.0 / span_ms as f64 };

    // gesture edges come from re-running perception over the logged samples
    let gesture_edges: Vec<u64> = replay_ticks(records)?
        .iter()
        .filter(|t| t.output.events.contains(&ControlEvent::GestureActive))
        .map(|t| t.input.t_ms)
        .collect();

    let mut episodes: Vec<Episode> = Vec::new();
    let mut scanning_since = first_t;
    let mut d_grasp_mm = None;
    let mut last_world: Option<(u64, Option<f64>)> = None;
    let mut pending_close: Option<usize> = None;

    for (idx, r) in records.iter().enumerate() {
        match &r.payload {
            Payload::Meta(Meta::Session { config, .. }) => {
                d_grasp_mm = Some(config.perception.d_grasp_mm);
                scanning_since = r.t_ms;
            }
            Payload::Meta(Meta::SetParam { key, value }) if key == "d_grasp_mm" => {
                d_grasp_mm = Some(*value as u32);
            }
            Payload::State { to: Phase::Scanning, .. } => scanning_since = r.t_ms,
            Payload::World(w) => last_world = Some((r.t_ms, w.nearest.map(|n| n.1))),
            Payload::Cmd(Action::Close) => {
                // the world record for this tick follows the command
                let world_now = records[idx..]
                    .iter()
                    .take_while(|x| x.t_ms == r.t_ms)
                    .find_map(|x| match &x.payload {
                        Payload::World(w) => Some(w.nearest.map(|n| n.1)),
                        _ => None,
                    })
                    .or_else(|| last_world.map(|(_, n)| n));
                let nearest = world_now.flatten();
                let grasp_valid = match (world_now, d_grasp_mm) {
                    (Some(n), Some(limit)) => Some(n.is_some_and(|d| d <= f64::from(limit))),
                    _ => None,
                };
                episodes.push(Episode {
                    close_t_ms: r.t_ms,
                    open_t_ms: None,
                    time_to_grasp_ms: r.t_ms - scanning_since.min(r.t_ms),
                    grasp_valid,
                    nearest_mm_at_close: nearest,
                    release_latency_ms: None,
                });
                pending_close = Some(episodes.len() - 1);
            }
            Payload::Cmd(Action::Open) => {
                if let Some(i) = pending_close.take() {
                    let ep = &mut episodes[i];
                    ep.open_t_ms = Some(r.t_ms);
                    ep.release_latency_ms = gesture_edges
                        .iter()
                        .rev()
                        .find(|t| **t <= r.t_ms && **t >= ep.close_t_ms)
                        .map(|t| r.t_ms - t);
                }
            }
            _ => {}
        }
    }

    let false_grasp_count = episodes.iter().filter(|e| e.grasp_valid == Some(false)).count();
    Ok(Metrics {
        episodes,
        false_grasp_count,
        frame_count,
        span_ms,
        achieved_fps,
        tick_latency_p50_ms: None,
        tick_latency_p99_ms: None,
    })
}
