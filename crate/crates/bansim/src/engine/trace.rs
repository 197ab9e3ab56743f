//! Trace records: one structured line per observable event.
//!
//! The trace is the authoritative record of a run — metrics are computed
//! from it and from nothing else, so everything a metric needs (including
//! injected ground truth) is written here. Records are ordered by
//! (time, sequence number); serialization is line-delimited JSON.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::PatientMode;
use crate::fault::Verdict;
use crate::net::LinkKind;

/// Who acted or was acted upon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActorId {
    ClusterHead,
    Sensor(usize),
    Phone(u32),
    Database,
    EmergencyCenter,
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActorId::ClusterHead => write!(f, "ch"),
            ActorId::Sensor(i) => write!(f, "sensor:{i}"),
            ActorId::Phone(id) => write!(f, "phone:{id}"),
            ActorId::Database => write!(f, "database"),
            ActorId::EmergencyCenter => write!(f, "emergency_center"),
        }
    }
}

impl FromStr for ActorId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ch" => return Ok(ActorId::ClusterHead),
            "database" => return Ok(ActorId::Database),
            "emergency_center" => return Ok(ActorId::EmergencyCenter),
            _ => {}
        }
        if let Some(i) = s.strip_prefix("sensor:") {
            return i
                .parse()
                .map(ActorId::Sensor)
                .map_err(|e| format!("bad sensor index: {e}"));
        }
        if let Some(i) = s.strip_prefix("phone:") {
            return i
                .parse()
                .map(ActorId::Phone)
                .map_err(|e| format!("bad phone id: {e}"));
        }
        Err(format!("unknown actor {s:?}"))
    }
}

impl Serialize for ActorId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActorId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Why a frame went out; drives the per-purpose counters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SendContext {
    /// Escalation stage 1: report to the personal phone.
    Stage1,
    /// Escalation stage 2: broadcast to one nearby phone.
    Stage2,
    /// Escalation stage 3: satellite uplink to the database.
    Stage3,
    /// First transmission of a daily report.
    DailyInitial,
    /// Retry of a queued daily report; counts transmissions so far.
    DailyRetry { attempt: u32 },
    /// One-shot report sent on entering the semi-critical mode.
    SemiCriticalReport,
    /// Phone relaying an emergency payload to the emergency center.
    ForwardToCenter,
    /// Phone relaying a daily report to the database.
    ForwardToDatabase,
    /// Acknowledgment leg.
    Ack,
}

/// One line of the run trace. `t` is virtual milliseconds, `seq` the global
/// emission counter that breaks ties at equal times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceRecord {
    /// First line of every trace: the effective seed and the run horizon.
    Header { seed: u64, duration_ms: u64 },
    /// A frame left a sender. `delivered` is the channel realization;
    /// `arrive_ms` is set when the frame will land. Energy is charged to the
    /// sender whether or not delivery succeeds.
    FrameSent {
        t: u64,
        seq: u64,
        from: ActorId,
        to: ActorId,
        link: LinkKind,
        context: SendContext,
        bytes: String,
        delivered: bool,
        arrive_ms: Option<u64>,
        energy: f64,
    },
    /// A frame landed at its destination.
    FrameReceived {
        t: u64,
        seq: u64,
        at: ActorId,
        from: ActorId,
        bytes: String,
    },
    /// A received buffer failed decoding and was dropped (no NACK exists).
    DecodeDropped {
        t: u64,
        seq: u64,
        at: ActorId,
        reason: String,
    },
    /// A sensor's verdict changed.
    Verdict {
        t: u64,
        seq: u64,
        sensor: usize,
        verdict: Verdict,
        reading: f64,
        prediction: Option<f64>,
        in_range: bool,
    },
    /// The classifier moved the patient between modes.
    ModeChange {
        t: u64,
        seq: u64,
        old: PatientMode,
        new: PatientMode,
        out_of_threshold: usize,
    },
    /// The escalation interrupt fired (fresh activation or re-raise).
    EmergencyRaised { t: u64, seq: u64 },
    /// The emergency condition ended; the interrupt stands down.
    EmergencyCleared { t: u64, seq: u64 },
    /// An escalation stage initiated its send; `recipients` is the fan-out
    /// (0 when nobody is addressable, e.g. an empty broadcast radius).
    EscalationSend {
        t: u64,
        seq: u64,
        stage: u8,
        recipients: usize,
    },
    /// An ACK was consumed and the inbox emptied.
    InboxEmptied { t: u64, seq: u64 },
    /// The interrupt returned; the caller re-raises if the emergency holds.
    InterruptReturned { t: u64, seq: u64 },
    /// A daily report entered the retry queue.
    QueueEnqueued { t: u64, seq: u64, depth: usize },
    /// An ACK removed the queue head; `waited_ms` since it was enqueued.
    QueueRemoved {
        t: u64,
        seq: u64,
        waited_ms: u64,
        attempts: u32,
    },
    /// The cluster head asked all sensors for fresh data (semi-critical).
    DataRequestBroadcast { t: u64, seq: u64 },
    /// Ground truth: an anomaly window opened on a sensor.
    AnomalyStarted {
        t: u64,
        seq: u64,
        sensor: usize,
        offset: f64,
    },
    /// Ground truth: an anomaly window closed.
    AnomalyEnded { t: u64, seq: u64, sensor: usize },
    /// Ground truth: an injected fault became active.
    FaultInjected {
        t: u64,
        seq: u64,
        sensor: usize,
        mode: String,
    },
    /// A phone script step was applied.
    PhoneScriptApplied {
        t: u64,
        seq: u64,
        phone: u32,
        reachable: Option<bool>,
        position_m: Option<[f64; 2]>,
    },
    /// The sink stored a frame in the patient file.
    RecordStored {
        t: u64,
        seq: u64,
        at: ActorId,
        frame_kind: String,
    },
    /// The sink alerted the emergency service.
    ServiceDispatched { t: u64, seq: u64, at: ActorId },
    /// The sink advised that a sensor reports damaged.
    SensorDamagedAdvisory { t: u64, seq: u64, sensor: usize },
    /// End-of-run predictor parameters, for reproducibility audits.
    ModelSnapshot {
        t: u64,
        seq: u64,
        sensor: usize,
        params: Vec<f64>,
    },
}

impl TraceRecord {
    /// Event time; the header reads as time zero.
    pub fn time_ms(&self) -> u64 {
        match self {
            TraceRecord::Header { .. } => 0,
            TraceRecord::FrameSent { t, .. }
            | TraceRecord::FrameReceived { t, .. }
            | TraceRecord::DecodeDropped { t, .. }
            | TraceRecord::Verdict { t, .. }
            | TraceRecord::ModeChange { t, .. }
            | TraceRecord::EmergencyRaised { t, .. }
            | TraceRecord::EmergencyCleared { t, .. }
            | TraceRecord::EscalationSend { t, .. }
            | TraceRecord::InboxEmptied { t, .. }
            | TraceRecord::InterruptReturned { t, .. }
            | TraceRecord::QueueEnqueued { t, .. }
            | TraceRecord::QueueRemoved { t, .. }
            | TraceRecord::DataRequestBroadcast { t, .. }
            | TraceRecord::AnomalyStarted { t, .. }
            | TraceRecord::AnomalyEnded { t, .. }
            | TraceRecord::FaultInjected { t, .. }
            | TraceRecord::PhoneScriptApplied { t, .. }
            | TraceRecord::RecordStored { t, .. }
            | TraceRecord::ServiceDispatched { t, .. }
            | TraceRecord::SensorDamagedAdvisory { t, .. }
            | TraceRecord::ModelSnapshot { t, .. } => *t,
        }
    }
}

/// Serializes a trace as line-delimited JSON, one record per line.
pub fn write_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace records always serialize"));
        out.push('\n');
    }
    out
}

/// Parses a line-delimited JSON trace back into records.
pub fn read_trace(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn actor_ids_round_trip_as_strings() {
        for actor in [
            ActorId::ClusterHead,
            ActorId::Sensor(3),
            ActorId::Phone(17),
            ActorId::Database,
            ActorId::EmergencyCenter,
        ] {
            let s = actor.to_string();
            assert_eq!(s.parse::<ActorId>().unwrap(), actor);
        }
        assert!("sensor:x".parse::<ActorId>().is_err());
        assert!("nobody".parse::<ActorId>().is_err());
    }

    #[test]
    fn trace_lines_round_trip() {
        let records = vec![
            TraceRecord::Header {
                seed: 42,
                duration_ms: 1000,
            },
            TraceRecord::FrameSent {
                t: 5,
                seq: 1,
                from: ActorId::ClusterHead,
                to: ActorId::Phone(1),
                link: LinkKind::Personal,
                context: SendContext::Stage1,
                bytes: "0105".into(),
                delivered: true,
                arrive_ms: Some(15),
                energy: 1.0,
            },
            TraceRecord::Verdict {
                t: 6,
                seq: 2,
                sensor: 0,
                verdict: Verdict::Conflict,
                reading: 50.5,
                prediction: Some(37.25),
                in_range: false,
            },
        ];
        let text = write_trace(&records);
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_trace(&text).unwrap(), records);
    }
}
