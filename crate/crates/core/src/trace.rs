//! Trace records: one JSON object per line, schema `shc-trace/1`.
//!
//! The header line carries the run parameters; every following line is one
//! event tagged by `kind`. Serialization goes through serde_json with
//! shortest-round-trip float formatting, so identical runs produce
//! byte-identical traces.

use serde::{Deserialize, Serialize};

use crate::geometry::{Surface, Vec3};

pub const TRACE_SCHEMA: &str = "shc-trace/1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceHeader {
    pub schema: String,
    pub delta: f64,
    pub seed: u64,
    pub policy: String,
    pub p_omega: f64,
}

impl TraceHeader {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("header serializes")
    }
}

/// One channel of a strong-split set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplitChannel {
    pub name: String,
    pub surface: Surface,
}

/// A timestamped record of everything the evolution loop does.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    /// Time advanced by `dt`, reaching clock `t`.
    TimeStep { t: f64, dt: f64 },
    /// An elastic collision was resolved between two processes.
    Collision {
        t: f64,
        ids: (u32, u32),
        surface: Surface,
        elastic: bool,
    },
    /// An inelastic collision bound two processes on a channel.
    Bind {
        t: f64,
        name: String,
        surface: Surface,
        ids: (u32, u32),
    },
    /// A weak-split operation released one bond of process `pid`.
    WeakSplit {
        t: f64,
        name: String,
        surface: Surface,
        pid: u32,
    },
    /// A strong-split operation released the channel set of process `pid`.
    StrongSplit {
        t: f64,
        channels: Vec<SplitChannel>,
        pid: u32,
    },
    /// The steer function changed a process velocity.
    Steer { t: f64, id: u32, v: Vec3 },
    /// No transition can proceed; the run halts.
    Deadlock { t: f64, reason: String },
}

impl TraceEvent {
    pub fn time(&self) -> f64 {
        match self {
            TraceEvent::TimeStep { t, .. }
            | TraceEvent::Collision { t, .. }
            | TraceEvent::Bind { t, .. }
            | TraceEvent::WeakSplit { t, .. }
            | TraceEvent::StrongSplit { t, .. }
            | TraceEvent::Steer { t, .. }
            | TraceEvent::Deadlock { t, .. } => *t,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TraceEvent::TimeStep { .. } => "time_step",
            TraceEvent::Collision { .. } => "collision",
            TraceEvent::Bind { .. } => "bind",
            TraceEvent::WeakSplit { .. } => "weak_split",
            TraceEvent::StrongSplit { .. } => "strong_split",
            TraceEvent::Steer { .. } => "steer",
            TraceEvent::Deadlock { .. } => "deadlock",
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }

    pub fn from_json_line(line: &str) -> Result<TraceEvent, serde_json::Error> {
        serde_json::from_str(line)
    }
}
