//! Line codec for trace records. Grammar in `docs/trace-format.md`.
//!
//! Floats use Rust's shortest round-trip decimal formatting, which never
//! switches to exponent notation and does not depend on locale, so
//! `decode(encode(r)) == r` holds bit for bit.

use std::fmt::Write as _;

use thiserror::Error;

use super::record::{Meta, Payload, RecordKind, TraceRecord, WorldSnapshot};
use crate::config::ControlConfig;
use crate::controller::{Action, Phase, TransitionReason};
use crate::geometry::Vec3;
use crate::perception::{BBox, Detection, TofStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("malformed line at column {column}: {reason}")]
    MalformedLine { column: usize, reason: String },
    #[error("unknown record kind `{kind}` at column {column}")]
    UnknownKind { column: usize, kind: String },
    #[error("bad value for `{field}` at column {column}: {reason}")]
    FieldTypeError { column: usize, field: String, reason: String },
}

fn is_plain(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-')
}

/// Percent-escapes everything but `[A-Za-z0-9._-]`.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if is_plain(b) {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

pub fn unescape(s: &str) -> Option<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'%' => {
                let hex = s.get(i + 1..i + 3)?;
                out.push(u8::from_str_radix(hex, 16).ok()?);
                i += 3;
            }
            b if is_plain(b) => {
                out.push(b);
                i += 1;
            }
            _ => return None,
        }
    }
    String::from_utf8(out).ok()
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn encode_record(r: &TraceRecord) -> String {
    let mut line = format!("{} {} {}", r.seq, r.t_ms, r.kind().as_str());
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = write!(line, " {k}={v}");
    };
    match &r.payload {
        Payload::Frame(dets) => {
            kv("n", &dets.len());
            for d in dets {
                let b = &d.bbox;
                let det = format!(
                    "{},{},{},{},{},{},{}",
                    d.class_id,
                    escape(&d.label),
                    d.confidence,
                    b.cx,
                    b.cy,
                    b.w,
                    b.h
                );
                kv("det", &det);
            }
        }
        Payload::Tof { status, range_mm } => match status {
            TofStatus::Valid => {
                kv("status", &"Valid");
                kv("range_mm", range_mm);
            }
            TofStatus::OutOfRange => kv("status", &"OutOfRange"),
        },
        Payload::Accel(a) => {
            kv("ax", &a.x);
            kv("ay", &a.y);
            kv("az", &a.z);
        }
        Payload::State { from, to, reason } => {
            kv("from", &from.as_str());
            kv("to", &to.as_str());
            kv("reason", &reason.as_str());
        }
        Payload::Cmd(action) => kv("action", &action.as_str()),
        Payload::World(w) => {
            kv("x", &w.hand.x);
            kv("y", &w.hand.y);
            kv("z", &w.hand.z);
            kv("roll", &w.roll_deg);
            kv("closed", &u8::from(w.hand_closed));
            kv("attached", &opt(w.attached));
            kv("nearest", &opt(w.nearest.map(|n| n.0)));
            kv("nearest_mm", &opt(w.nearest.map(|n| n.1)));
        }
        Payload::Meta(meta) => match meta {
            Meta::Session { config_hash, seed, version, config } => {
                kv("event", &"session");
                kv("config_hash", &format!("{config_hash:016x}"));
                kv("seed", seed);
                kv("version", &escape(version));
                for (k, v) in config.to_pairs() {
                    kv(k, &v);
                }
            }
            Meta::Reset => kv("event", &"reset"),
            Meta::SetParam { key, value } => {
                kv("event", &"set_param");
                kv("key", &escape(key));
                kv("value", value);
            }
        },
    }
    line
}

struct Token<'a> {
    column: usize,
    key: &'a str,
    value: &'a str,
}

struct Fields<'a> {
    tokens: std::vec::IntoIter<Token<'a>>,
    end_column: usize,
}

impl<'a> Fields<'a> {
    fn next_raw(&mut self, key: &str) -> Result<Token<'a>, DecodeError> {
        match self.tokens.next() {
            Some(t) if t.key == key => Ok(t),
            Some(t) => Err(DecodeError::MalformedLine {
                column: t.column,
                reason: format!("expected field `{key}`, found `{}`", t.key),
            }),
            None => Err(DecodeError::MalformedLine {
                column: self.end_column,
                reason: format!("missing field `{key}`"),
            }),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, DecodeError>
    where
        T::Err: std::fmt::Display,
    {
        let t = self.next_raw(key)?;
        parse_at(t.value, key, t.column)
    }

    fn with<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Option<T>) -> Result<T, DecodeError> {
        let t = self.next_raw(key)?;
        f(t.value).ok_or_else(|| DecodeError::FieldTypeError {
            column: t.column,
            field: key.to_string(),
            reason: format!("unrecognized value `{}`", t.value),
        })
    }

    fn optional<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, DecodeError>
    where
        T::Err: std::fmt::Display,
    {
        let t = self.next_raw(key)?;
        if t.value == "-" {
            Ok(None)
        } else {
            parse_at(t.value, key, t.column).map(Some)
        }
    }

    fn finish(mut self) -> Result<(), DecodeError> {
        match self.tokens.next() {
            None => Ok(()),
            Some(t) => Err(DecodeError::MalformedLine {
                column: t.column,
                reason: format!("unexpected field `{}`", t.key),
            }),
        }
    }
}

fn parse_at<T: std::str::FromStr>(value: &str, field: &str, column: usize) -> Result<T, DecodeError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| DecodeError::FieldTypeError {
        column,
        field: field.to_string(),
        reason: e.to_string(),
    })
}

fn decode_detection(value: &str, column: usize) -> Result<Detection, DecodeError> {
    let parts: Vec<&str> = value.split(',').collect();
    let bad = |reason: String| DecodeError::FieldTypeError { column, field: "det".into(), reason };
    if parts.len() != 7 {
        return Err(bad(format!("expected 7 comma-separated values, found {}", parts.len())));
    }
    let num = |i: usize| parts[i].parse::<f64>().map_err(|e| bad(e.to_string()));
    Ok(Detection {
        class_id: parts[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
        label: unescape(parts[1]).ok_or_else(|| bad("bad escape in label".into()))?,
        confidence: num(2)?,
        bbox: BBox { cx: num(3)?, cy: num(4)?, w: num(5)?, h: num(6)? },
    })
}

pub fn decode_record(line: &str) -> Result<TraceRecord, DecodeError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    if line.trim().is_empty() {
        return Err(DecodeError::MalformedLine { column: 1, reason: "empty line".into() });
    }

    let mut raw = Vec::new();
    let mut col = 1;
    for part in line.split(' ') {
        if part.is_empty() {
            return Err(DecodeError::MalformedLine { column: col, reason: "empty token".into() });
        }
        raw.push((col, part));
        col += part.len() + 1;
    }
    if raw.len() < 3 {
        return Err(DecodeError::MalformedLine { column: col, reason: "expected `seq t_ms kind`".into() });
    }
    let seq: u64 = parse_at(raw[0].1, "seq", raw[0].0)?;
    let t_ms: u64 = parse_at(raw[1].1, "t_ms", raw[1].0)?;
    let kind = RecordKind::parse(raw[2].1).ok_or_else(|| DecodeError::UnknownKind {
        column: raw[2].0,
        kind: raw[2].1.to_string(),
    })?;

    let mut tokens = Vec::with_capacity(raw.len() - 3);
    for (column, part) in &raw[3..] {
        let (key, value) = part.split_once('=').ok_or_else(|| DecodeError::MalformedLine {
            column: *column,
            reason: format!("expected key=value, found `{part}`"),
        })?;
        tokens.push(Token { column: *column, key, value });
    }
    let mut f = Fields { tokens: tokens.into_iter(), end_column: col };

    let payload = match kind {
        RecordKind::Frame => {
            let n: usize = f.parse("n")?;
            let mut dets = Vec::with_capacity(n.min(64));
            for _ in 0..n {
                let t = f.next_raw("det")?;
                dets.push(decode_detection(t.value, t.column)?);
            }
            Payload::Frame(dets)
        }
        RecordKind::Tof => {
            let status = f.with("status", |v| match v {
                "Valid" => Some(TofStatus::Valid),
                "OutOfRange" => Some(TofStatus::OutOfRange),
                _ => None,
            })?;
            let range_mm = if status == TofStatus::Valid { f.parse("range_mm")? } else { 0 };
            Payload::Tof { status, range_mm }
        }
        RecordKind::Accel => Payload::Accel(Vec3::new(f.parse("ax")?, f.parse("ay")?, f.parse("az")?)),
        RecordKind::State => Payload::State {
            from: f.with("from", Phase::parse)?,
            to: f.with("to", Phase::parse)?,
            reason: f.with("reason", TransitionReason::parse)?,
        },
        RecordKind::Cmd => Payload::Cmd(f.with("action", Action::parse)?),
        RecordKind::World => {
            let hand = Vec3::new(f.parse("x")?, f.parse("y")?, f.parse("z")?);
            let roll_deg = f.parse("roll")?;
            let hand_closed = f.with("closed", |v| match v {
                "0" => Some(false),
                "1" => Some(true),
                _ => None,
            })?;
            let attached = f.optional("attached")?;
            let nearest_id: Option<u32> = f.optional("nearest")?;
            let nearest_mm: Option<f64> = f.optional("nearest_mm")?;
            let nearest = match (nearest_id, nearest_mm) {
                (Some(id), Some(d)) => Some((id, d)),
                (None, None) => None,
                _ => {
                    return Err(DecodeError::MalformedLine {
                        column: f.end_column,
                        reason: "nearest and nearest_mm must both be present or both be `-`".into(),
                    })
                }
            };
            Payload::World(WorldSnapshot { hand, roll_deg, hand_closed, attached, nearest })
        }
        RecordKind::Meta => {
            let event = f.next_raw("event")?;
            match event.value {
                "session" => {
                    let config_hash = f.with("config_hash", |v| {
                        (v.len() == 16).then(|| u64::from_str_radix(v, 16).ok()).flatten()
                    })?;
                    let seed = f.parse("seed")?;
                    let version = f.with("version", unescape)?;
                    let rest: Vec<Token> = f.tokens.by_ref().collect();
                    let first_col = rest.first().map_or(f.end_column, |t| t.column);
                    let config = ControlConfig::from_pairs(rest.iter().map(|t| (t.key, t.value))).map_err(|e| {
                        DecodeError::FieldTypeError { column: first_col, field: "config".into(), reason: e.to_string() }
                    })?;
                    // canonical order only, so that the line round-trips byte for byte
                    let canonical = config.to_pairs();
                    if let Some((t, _)) = rest.iter().zip(canonical.iter()).find(|(t, (k, _))| t.key != *k) {
                        return Err(DecodeError::MalformedLine {
                            column: t.column,
                            reason: format!("config field `{}` out of canonical order", t.key),
                        });
                    }
                    Payload::Meta(Meta::Session { config_hash, seed, version, config })
                }
                "reset" => Payload::Meta(Meta::Reset),
                "set_param" => {
                    let key = f.with("key", unescape)?;
                    let value = f.parse("value")?;
                    Payload::Meta(Meta::SetParam { key, value })
                }
                other => {
                    return Err(DecodeError::FieldTypeError {
                        column: event.column,
                        field: "event".into(),
                        reason: format!("unknown meta event `{other}`"),
                    })
                }
            }
        }
    };
    f.finish()?;
    Ok(TraceRecord { seq, t_ms, payload })
}

/// Decodes a whole trace; errors carry the 1-based line number.
pub fn decode_trace(text: &str) -> Result<Vec<TraceRecord>, (usize, DecodeError)> {
    text.lines().enumerate().map(|(i, l)| decode_record(l).map_err(|e| (i + 1, e))).collect()
}

pub fn encode_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&encode_record(r));
        out.push('\n');
    }
    out
}
