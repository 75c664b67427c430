//! Session traces: one record per line, replayable through the controller,
//! and reducible to grasp/release metrics.

mod codec;
mod metrics;
mod record;
mod replay;

pub use codec::{decode_record, decode_trace, encode_record, encode_trace, escape, unescape, DecodeError};
pub use metrics::{compute_metrics, percentile, Episode, Metrics, MetricsError};
pub use record::{Meta, Payload, RecordKind, Recorder, TraceRecord, WorldSnapshot};
pub use replay::{check_order, expected_outputs, replay, replay_ticks, Divergence, ReplayError, ReplayReport, ReplayedTick};
