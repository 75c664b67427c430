//! Command-line surface of the `graspctl` binary.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use graspctl_core::simworld::{load_scenario, Scenario};
use graspctl_core::trace::{compute_metrics, decode_trace, replay, Metrics, ReplayReport, TraceRecord};
use tokio::net::TcpListener;
use tracing::info;

use crate::config::{Mode, SessionConfig, DEFAULT_PORT};
use crate::live::LiveSession;
use crate::runner::{run_session, SessionReport};
use crate::server::{serve, ServerOptions};
use crate::session::{Session, SteeringSource, TraceSink};

#[derive(Debug, Parser)]
#[command(name = "graspctl", version, about = "Vision-assisted grasp controller: simulation, replay, and teleoperation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scripted scenario and write its trace.
    Run(RunArgs),
    /// Re-run the controller over a trace and report divergences.
    Replay(ReplayArgs),
    /// Print grasp/release metrics for a trace as JSON.
    Metrics(MetricsArgs),
    /// Serve a live session over a websocket at /ws.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the seed in the scenario and config files.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace output path; falls back to `trace` in the config.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Pace ticks to the wall clock.
    #[arg(long, conflicts_with = "fast")]
    pub realtime: bool,
    /// Simulated clock only (default).
    #[arg(long)]
    pub fast: bool,
    /// Session config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Require the trace to have been produced with this session config.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen port (default 8080, or `port` in the config).
    #[arg(long, env = "GRASPCTL_PORT")]
    pub port: Option<u16>,
    /// Initial scene and seed. Its steering timeline is not used.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Run continuously at wall-clock pace. Without it the session is
    /// lockstep and advances only on `step` messages.
    #[arg(long)]
    pub realtime: bool,
    /// Overrides the seed in the scenario and config files.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the session trace here; flushed on shutdown.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Session config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory with the UI bundle served at `/`.
    #[arg(long, env = "GRASPCTL_STATIC_DIR")]
    pub static_dir: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load_config(path: Option<&Path>) -> Result<SessionConfig> {
    match path {
        None => Ok(SessionConfig::default()),
        Some(p) => SessionConfig::from_toml(&read(p)?).with_context(|| format!("{}", p.display())),
    }
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario> {
    load_scenario(&read(path)?).with_context(|| format!("{}", path.display()))
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    decode_trace(&read(path)?).map_err(|(line, e)| anyhow::anyhow!("{}:{line}: {e}", path.display()))
}

pub fn cmd_run(args: &RunArgs) -> Result<(SessionReport, Metrics)> {
    let mut cfg = load_config(args.config.as_deref())?;
    let scenario = load_scenario_file(&args.scenario)?;
    if args.realtime {
        cfg.mode = Mode::Realtime;
    } else if args.fast {
        cfg.mode = Mode::Fast;
    }
    let Some(trace_path) = args.trace.clone().or_else(|| cfg.trace.clone()) else {
        bail!("no trace path: pass --trace or set `trace` in the config");
    };
    let seed = args.seed.or(cfg.seed).unwrap_or(scenario.seed);
    let expect = scenario.expect;

    let sink = TraceSink::file(&trace_path)?;
    let (report, _) = run_session(&cfg, scenario, seed, sink, None)?;
    let mut metrics = compute_metrics(&load_trace(&trace_path)?)?;
    metrics.tick_latency_p50_ms = report.tick_latency_p50_ms;
    metrics.tick_latency_p99_ms = report.tick_latency_p99_ms;

    if let Some(e) = expect {
        let checks = [
            ("grasps", e.grasps, metrics.grasp_count()),
            ("releases", e.releases, metrics.release_count()),
            ("false grasps", e.false_grasps, metrics.false_grasp_count),
        ];
        for (name, want, got) in checks {
            if let Some(want) = want {
                if want as usize != got {
                    bail!("scenario expected {want} {name}, got {got}");
                }
            }
        }
    }
    Ok((report, metrics))
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<ReplayReport> {
    let records = load_trace(&args.trace)?;
    let expected = match &args.config {
        Some(p) => Some(load_config(Some(p))?.control_config()),
        None => None,
    };
    let report = replay(&records, expected.as_ref())?;
    if let Some(d) = report.divergences.first() {
        bail!(
            "{} divergence(s); first at seq {}: expected `{}`, found `{}`",
            report.divergences.len(),
            d.seq,
            d.expected,
            d.found
        );
    }
    Ok(report)
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<Metrics> {
    Ok(compute_metrics(&load_trace(&args.trace)?)?)
}

pub async fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    let scenario = load_scenario_file(&args.scenario)?;
    if args.realtime {
        cfg.mode = Mode::Realtime;
    }
    let port = args.port.unwrap_or(if cfg.port == 0 { DEFAULT_PORT } else { cfg.port });
    let seed = args.seed.or(cfg.seed).unwrap_or(scenario.seed);
    let sink = match args.trace.clone().or_else(|| cfg.trace.clone()) {
        Some(p) => TraceSink::file(&p)?,
        None => TraceSink::Discard,
    };
    let lockstep = cfg.mode != Mode::Realtime;
    let session = Session::new(&cfg, scenario, seed, SteeringSource::Live(Default::default()), sink)?;
    let live = LiveSession::new(session, lockstep);

    let listener =
        TcpListener::bind(("0.0.0.0", port)).await.with_context(|| format!("cannot listen on port {port}"))?;
    info!(port, lockstep, seed, "session ready");
    let opts = ServerOptions { static_dir: args.static_dir.clone() };
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve(listener, live, opts, shutdown).await?;
    Ok(())
}
