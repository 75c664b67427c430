//! Fixed-timestep session: steps the simulated world, samples each sensor at
//! its own period, runs one controller tick, applies the resulting commands,
//! and writes the trace.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use graspctl_core::config::ConfigError;
use graspctl_core::controller::{Controller, FsmState, TickInput, TickOutput};
use graspctl_core::perception::Detection;
use graspctl_core::simworld::{Scenario, SimModels, SimObject, Simulator, Steering, WorldState};
use graspctl_core::trace::{encode_record, Meta, Payload, Recorder, TraceRecord, WorldSnapshot};
use graspctl_core::{ControlConfig, Vec3, VERSION};
use thiserror::Error;

use crate::config::SessionConfig;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("cannot open trace {path}: {source}")]
    TraceOpen { path: String, source: io::Error },
    #[error("trace write failed: {0}")]
    TraceWrite(io::Error),
}

/// Where trace records go.
#[derive(Debug, Default)]
pub enum TraceSink {
    #[default]
    Discard,
    Memory(Vec<TraceRecord>),
    File(BufWriter<File>),
}

impl TraceSink {
    pub fn file(path: &Path) -> Result<Self, SessionError> {
        let f = File::create(path)
            .map_err(|source| SessionError::TraceOpen { path: path.display().to_string(), source })?;
        Ok(TraceSink::File(BufWriter::new(f)))
    }

    fn write(&mut self, rec: TraceRecord) -> io::Result<()> {
        match self {
            TraceSink::Discard => Ok(()),
            TraceSink::Memory(v) => {
                v.push(rec);
                Ok(())
            }
            TraceSink::File(w) => {
                w.write_all(encode_record(&rec).as_bytes())?;
                w.write_all(b"\n")
            }
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            TraceSink::File(w) => w.flush(),
            _ => Ok(()),
        }
    }
}

/// Who moves the hand: the scenario's timeline, or a live operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteeringSource {
    Scripted,
    Live(Steering),
}

/// Sample schedule for one sensor: sample `k` is due once
/// `k * period` simulated milliseconds have passed since the epoch.
#[derive(Debug, Clone, Copy)]
struct Schedule {
    period_ms: f64,
    next_k: u64,
}

impl Schedule {
    fn new(period_ms: f64) -> Self {
        Self { period_ms, next_k: 0 }
    }

    fn due(&mut self, elapsed_ms: u64) -> bool {
        let elapsed = elapsed_ms as f64;
        if self.next_k as f64 * self.period_ms > elapsed {
            return false;
        }
        // several periods inside one base step collapse into one sample
        while self.next_k as f64 * self.period_ms <= elapsed {
            self.next_k += 1;
        }
        true
    }
}

#[derive(Debug, Clone, Copy)]
struct Schedules {
    frame: Schedule,
    tof: Schedule,
    accel: Schedule,
}

impl Schedules {
    fn new(models: &SimModels) -> Self {
        Self {
            frame: Schedule::new(models.camera.frame_period_ms),
            tof: Schedule::new(models.tof.period_ms),
            accel: Schedule::new(models.accel.period_ms),
        }
    }
}

/// What one call to [`Session::tick`] did.
#[derive(Debug, Clone)]
pub struct TickResult {
    pub t_ms: u64,
    pub frame: bool,
    pub output: Option<TickOutput>,
    pub latency_ms: f64,
}

pub struct Session {
    cfg: SessionConfig,
    control: ControlConfig,
    scenario: Scenario,
    sim: Simulator,
    controller: Controller,
    steering: SteeringSource,
    recorder: Recorder,
    sink: TraceSink,
    write_error: Option<io::Error>,
    seed: u64,
    t_ms: u64,
    epoch_ms: u64,
    started: bool,
    schedules: Schedules,
    pending_session_meta: bool,
    pending_reset: bool,
    pending_params: Vec<(String, f64)>,
    last_detections: Vec<Detection>,
    latencies_ms: Vec<f64>,
    frames: usize,
    commands: usize,
}

impl Session {
    pub fn new(
        cfg: &SessionConfig,
        scenario: Scenario,
        seed: u64,
        steering: SteeringSource,
        sink: TraceSink,
    ) -> Result<Self, SessionError> {
        cfg.validate().map_err(|e| SessionError::Config(e.to_string()))?;
        let control = cfg.control_config();
        let models = cfg.sim_models();
        let controller = Controller::new(control.clone(), 0).map_err(|e| SessionError::Config(e.to_string()))?;
        let sim = Simulator::new(scenario.initial.clone(), models.clone(), seed);
        Ok(Self {
            cfg: cfg.clone(),
            control,
            schedules: Schedules::new(&models),
            scenario,
            sim,
            controller,
            steering,
            recorder: Recorder::new(),
            sink,
            write_error: None,
            seed,
            t_ms: 0,
            epoch_ms: 0,
            started: false,
            pending_session_meta: true,
            pending_reset: false,
            pending_params: Vec::new(),
            last_detections: Vec::new(),
            latencies_ms: Vec::new(),
            frames: 0,
            commands: 0,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Simulated time of the most recent tick (or of the next one before the first).
    pub fn t_ms(&self) -> u64 {
        self.t_ms
    }

    /// Simulated time since the session (or the last restart) began.
    pub fn elapsed_ms(&self) -> u64 {
        self.t_ms - self.epoch_ms
    }

    /// The scripted duration has been covered.
    pub fn finished(&self) -> bool {
        self.started && self.elapsed_ms() + self.cfg.base_step_ms > self.scenario.duration_ms
    }

    pub fn world(&self) -> &WorldState {
        &self.sim.world
    }

    pub fn fsm(&self) -> &FsmState {
        self.controller.state()
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn last_detections(&self) -> &[Detection] {
        &self.last_detections
    }

    pub fn latencies_ms(&self) -> &[f64] {
        &self.latencies_ms
    }

    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn command_count(&self) -> usize {
        self.commands
    }

    pub fn steering(&self) -> Steering {
        match self.steering {
            SteeringSource::Scripted => self.scenario.steering_at(self.elapsed_ms()),
            SteeringSource::Live(s) => s,
        }
    }

    /// Replaces the live steering. Rejected for scripted sessions and for
    /// speeds above the model limit.
    pub fn set_steering(&mut self, s: Steering) -> Result<(), String> {
        if matches!(self.steering, SteeringSource::Scripted) {
            return Err("session is scripted".into());
        }
        if !s.within_limits(self.sim.models.max_speed_mm_s) {
            return Err(format!("steering outside limits (max speed {} mm/s)", self.sim.models.max_speed_mm_s));
        }
        self.steering = SteeringSource::Live(s);
        Ok(())
    }

    pub fn spawn_object(&mut self, label: String, class_id: u32, center: Vec3, radius: f64) -> Result<u32, String> {
        if !center.is_finite() {
            return Err("center must be finite".into());
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err("radius must be positive".into());
        }
        if (center - self.sim.world.hand.position).norm() <= radius {
            return Err("object would enclose the palm".into());
        }
        let id = self.sim.world.next_object_id();
        self.sim.world.objects.push(SimObject { id, label, class_id, center, radius, attached: false });
        Ok(id)
    }

    pub fn remove_object(&mut self, id: u32) -> Result<(), String> {
        let before = self.sim.world.objects.len();
        self.sim.world.objects.retain(|o| o.id != id);
        if self.sim.world.objects.len() == before {
            return Err(format!("no object with id {id}"));
        }
        Ok(())
    }

    /// Live threshold change, applied and logged at the next tick.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<(), ConfigError> {
        let mut probe = self.controller.config().clone();
        probe.set_param(key, value)?;
        self.pending_params.push((key.to_string(), value));
        Ok(())
    }

    /// Operator reset of the controller, fed in with the next tick.
    pub fn request_reset(&mut self) {
        self.pending_reset = true;
    }

    /// Restarts from the scenario's initial scene with a new seed. The
    /// simulated clock keeps running so the trace stays ordered.
    pub fn restart(&mut self, seed: u64) {
        let t = if self.started { self.t_ms + self.cfg.base_step_ms } else { self.t_ms };
        let mut world = self.scenario.initial.clone();
        world.t_ms = t;
        self.sim = Simulator::new(world, self.sim.models.clone(), seed);
        self.controller = Controller::new(self.control.clone(), t).expect("validated at session start");
        self.schedules = Schedules::new(&self.sim.models);
        if let SteeringSource::Live(_) = self.steering {
            self.steering = SteeringSource::Live(Steering::default());
        }
        self.seed = seed;
        self.t_ms = t;
        self.epoch_ms = t;
        self.started = false;
        self.pending_session_meta = true;
        self.pending_reset = false;
        self.pending_params.clear();
        self.last_detections.clear();
    }

    fn emit(&mut self, t: u64, payload: Payload) {
        let rec = self.recorder.record(t, payload);
        if self.write_error.is_none() {
            if let Err(e) = self.sink.write(rec) {
                self.write_error = Some(e);
            }
        }
    }

    pub fn tick(&mut self) -> TickResult {
        let start = Instant::now();
        if self.started {
            let s = self.steering();
            self.sim.step(&s, self.cfg.base_step_ms);
            self.t_ms += self.cfg.base_step_ms;
        }
        self.started = true;
        let t = self.t_ms;
        let elapsed = t - self.epoch_ms;

        if std::mem::take(&mut self.pending_session_meta) {
            let config = self.controller.config().clone();
            let meta = Meta::Session { config_hash: config.fingerprint(), seed: self.seed, version: VERSION.to_string(), config };
            self.emit(t, Payload::Meta(meta));
        }
        let mut input = TickInput { t_ms: t, ..TickInput::default() };
        if std::mem::take(&mut self.pending_reset) {
            input.reset = true;
            self.emit(t, Payload::Meta(Meta::Reset));
        }
        for (key, value) in std::mem::take(&mut self.pending_params) {
            // validated when queued; a later change may have made it moot but never invalid
            if self.controller.set_param(&key, value).is_ok() {
                self.control = self.controller.config().clone();
                self.emit(t, Payload::Meta(Meta::SetParam { key, value }));
            }
        }

        let frame_due = self.schedules.frame.due(elapsed);
        let tof_due = self.schedules.tof.due(elapsed);
        let accel_due = self.schedules.accel.due(elapsed);
        let world_before = frame_due.then(|| WorldSnapshot::of(&self.sim.world));
        if frame_due {
            let dets = self.sim.camera_frame();
            self.emit(t, Payload::Frame(dets.clone()));
            self.last_detections = dets.clone();
            self.frames += 1;
            input.frame = Some(dets);
        }
        if tof_due {
            let mut s = self.sim.tof_sample();
            s.t_ms = t;
            self.emit(t, Payload::Tof { status: s.status, range_mm: s.range_mm });
            input.tof = Some(s);
        }
        if accel_due {
            let mut s = self.sim.accel_sample();
            s.t_ms = t;
            self.emit(t, Payload::Accel(s.a));
            input.accel = Some(s);
        }

        let output = (!input.is_empty()).then(|| self.controller.tick(&input));
        if let Some(out) = &output {
            for tr in &out.transitions {
                self.emit(t, Payload::State { from: tr.from, to: tr.to, reason: tr.reason });
            }
            for cmd in &out.commands {
                self.emit(t, Payload::Cmd(cmd.action));
            }
            for cmd in &out.commands {
                self.sim.actuate(cmd);
            }
            self.commands += out.commands.len();
        }
        if let Some(w) = world_before {
            self.emit(t, Payload::World(w));
        }

        let latency_ms = start.elapsed().as_secs_f64() * 1000.0;
        self.latencies_ms.push(latency_ms);
        TickResult { t_ms: t, frame: frame_due, output, latency_ms }
    }

    /// Flushes the trace and hands back the sink.
    pub fn finish(mut self) -> Result<TraceSink, SessionError> {
        if let Some(e) = self.write_error.take() {
            return Err(SessionError::TraceWrite(e));
        }
        self.sink.flush().map_err(SessionError::TraceWrite)?;
        Ok(self.sink)
    }
}
