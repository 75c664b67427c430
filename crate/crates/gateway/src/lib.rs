//! Operational shell around the grasp controller: the fixed-timestep
//! session scheduler, scripted runs, and the teleoperation socket service.

pub mod cli;
pub mod config;
pub mod live;
pub mod protocol;
pub mod runner;
pub mod server;
pub mod session;

pub use config::{Mode, SessionConfig};
pub use live::{handle_client_msg, snapshot, LiveSession};
pub use protocol::{ClientMessage, Envelope, ServerMessage, Snapshot};
pub use runner::{run_session, SessionReport};
pub use session::{Session, SessionError, SteeringSource, TraceSink};
