//! Aggregate run metrics, computed from the trace and from nothing else.
//!
//! Re-deriving the metrics from a serialized trace reproduces them exactly;
//! the engine itself builds them the same way.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::PatientMode;
use crate::fault::Verdict;
use crate::net::LinkKind;

use super::trace::{SendContext, TraceRecord};

/// Count/min/max/mean over a set of observed latencies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    pub min_ms: u64,
    pub max_ms: u64,
    pub mean_ms: f64,
}

impl LatencyStats {
    fn from_samples(samples: &[u64]) -> Self {
        if samples.is_empty() {
            return LatencyStats::default();
        }
        let sum: u64 = samples.iter().sum();
        LatencyStats {
            count: samples.len() as u64,
            min_ms: *samples.iter().min().unwrap(),
            max_ms: *samples.iter().max().unwrap(),
            mean_ms: sum as f64 / samples.len() as f64,
        }
    }
}

/// Escalation activity counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EscalationStats {
    pub activations: u64,
    pub stage1_sends: u64,
    pub stage2_sends: u64,
    pub stage3_sends: u64,
    pub acked_activations: u64,
    pub interrupt_returns: u64,
}

/// Daily-report loop counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DailyStats {
    pub reports_sent: u64,
    pub retries: u64,
    pub acked: u64,
}

/// Faulty verdicts scored against injected ground truth.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultScore {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

/// Frame-level channel counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub decode_dropped: u64,
}

/// Time spent in each patient mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeOccupancy {
    pub normal_ms: u64,
    pub semi_critical_ms: u64,
    pub critical_ms: u64,
}

/// Everything a run reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub duration_ms: u64,
    /// Mode entry into critical versus the earliest anomaly window active at
    /// that moment.
    pub emergency_detection: LatencyStats,
    /// Send-to-arrival over every delivered frame.
    pub delivery: LatencyStats,
    pub escalation: EscalationStats,
    pub daily: DailyStats,
    pub fault_detection: FaultScore,
    /// Energy spent per link kind, plus the grand total.
    pub energy_by_link: BTreeMap<LinkKind, f64>,
    pub energy_total: f64,
    pub frames: FrameStats,
    pub mode_occupancy: ModeOccupancy,
    pub advisories: u64,
    pub service_dispatches: u64,
}

impl Metrics {
    /// Rebuilds the metrics from a trace. The trace must start with its
    /// header record.
    pub fn from_trace(records: &[TraceRecord]) -> Metrics {
        let mut m = Metrics::default();
        for kind in [
            LinkKind::Personal,
            LinkKind::NearbyBroadcast,
            LinkKind::Satellite,
            LinkKind::Internal,
        ] {
            m.energy_by_link.insert(kind, 0.0);
        }

        let mut delivery_samples: Vec<u64> = Vec::new();
        let mut detection_samples: Vec<u64> = Vec::new();
        // sensor -> start of the currently open anomaly window
        let mut open_anomalies: BTreeMap<usize, u64> = BTreeMap::new();
        // sensor -> earliest injected fault time
        let mut injected: BTreeMap<usize, u64> = BTreeMap::new();
        // sensor -> time of first faulty verdict
        let mut first_faulty: BTreeMap<usize, u64> = BTreeMap::new();
        let mut mode = PatientMode::Normal;
        let mut mode_since = 0u64;

        for r in records {
            match r {
                TraceRecord::Header { duration_ms, .. } => {
                    m.duration_ms = *duration_ms;
                }
                TraceRecord::FrameSent {
                    t,
                    link,
                    context,
                    delivered,
                    arrive_ms,
                    energy,
                    ..
                } => {
                    m.frames.sent += 1;
                    *m.energy_by_link.entry(*link).or_insert(0.0) += energy;
                    m.energy_total += energy;
                    if *delivered {
                        m.frames.delivered += 1;
                        if let Some(arrive) = arrive_ms {
                            delivery_samples.push(arrive - t);
                        }
                    } else {
                        m.frames.lost += 1;
                    }
                    match context {
                        SendContext::Stage1 => m.escalation.stage1_sends += 1,
                        SendContext::Stage2 => m.escalation.stage2_sends += 1,
                        SendContext::Stage3 => m.escalation.stage3_sends += 1,
                        SendContext::DailyInitial => m.daily.reports_sent += 1,
                        SendContext::DailyRetry { .. } => m.daily.retries += 1,
                        _ => {}
                    }
                }
                TraceRecord::DecodeDropped { .. } => m.frames.decode_dropped += 1,
                TraceRecord::EmergencyRaised { .. } => m.escalation.activations += 1,
                TraceRecord::InboxEmptied { .. } => m.escalation.acked_activations += 1,
                TraceRecord::InterruptReturned { .. } => m.escalation.interrupt_returns += 1,
                TraceRecord::QueueRemoved { .. } => m.daily.acked += 1,
                TraceRecord::AnomalyStarted { t, sensor, .. } => {
                    open_anomalies.entry(*sensor).or_insert(*t);
                }
                TraceRecord::AnomalyEnded { sensor, .. } => {
                    open_anomalies.remove(sensor);
                }
                TraceRecord::FaultInjected { t, sensor, .. } => {
                    injected.entry(*sensor).or_insert(*t);
                }
                TraceRecord::Verdict {
                    t,
                    sensor,
                    verdict: Verdict::Faulty,
                    ..
                } => {
                    first_faulty.entry(*sensor).or_insert(*t);
                }
                TraceRecord::ModeChange { t, old, new, .. } => {
                    debug_assert_eq!(*old, mode, "trace mode continuity");
                    match mode {
                        PatientMode::Normal => m.mode_occupancy.normal_ms += t - mode_since,
                        PatientMode::SemiCritical => {
                            m.mode_occupancy.semi_critical_ms += t - mode_since
                        }
                        PatientMode::Critical => m.mode_occupancy.critical_ms += t - mode_since,
                    }
                    if *new == PatientMode::Critical {
                        if let Some(earliest) = open_anomalies.values().min() {
                            detection_samples.push(t - earliest);
                        }
                    }
                    mode = *new;
                    mode_since = *t;
                }
                TraceRecord::SensorDamagedAdvisory { .. } => m.advisories += 1,
                TraceRecord::ServiceDispatched { .. } => m.service_dispatches += 1,
                _ => {}
            }
        }

        match mode {
            PatientMode::Normal => m.mode_occupancy.normal_ms += m.duration_ms - mode_since,
            PatientMode::SemiCritical => {
                m.mode_occupancy.semi_critical_ms += m.duration_ms - mode_since
            }
            PatientMode::Critical => m.mode_occupancy.critical_ms += m.duration_ms - mode_since,
        }

        for (sensor, faulted_at) in &first_faulty {
            match injected.get(sensor) {
                Some(start) if start <= faulted_at => m.fault_detection.true_positives += 1,
                _ => m.fault_detection.false_positives += 1,
            }
        }
        for sensor in injected.keys() {
            if !first_faulty.contains_key(sensor) {
                m.fault_detection.false_negatives += 1;
            }
        }

        m.emergency_detection = LatencyStats::from_samples(&detection_samples);
        m.delivery = LatencyStats::from_samples(&delivery_samples);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::trace::ActorId;

    #[test]
    fn empty_trace_gives_zeroed_metrics() {
        let m = Metrics::from_trace(&[TraceRecord::Header {
            seed: 1,
            duration_ms: 500,
        }]);
        assert_eq!(m.duration_ms, 500);
        assert_eq!(m.mode_occupancy.normal_ms, 500);
        assert_eq!(m.frames.sent, 0);
        assert_eq!(m.energy_total, 0.0);
    }

    #[test]
    fn energy_and_frame_counters_accumulate() {
        let records = vec![
            TraceRecord::Header {
                seed: 1,
                duration_ms: 100,
            },
            TraceRecord::FrameSent {
                t: 0,
                seq: 1,
                from: ActorId::ClusterHead,
                to: ActorId::Phone(1),
                link: LinkKind::Personal,
                context: SendContext::Stage1,
                bytes: "00".into(),
                delivered: true,
                arrive_ms: Some(10),
                energy: 1.0,
            },
            TraceRecord::FrameSent {
                t: 5,
                seq: 2,
                from: ActorId::ClusterHead,
                to: ActorId::Database,
                link: LinkKind::Satellite,
                context: SendContext::Stage3,
                bytes: "00".into(),
                delivered: false,
                arrive_ms: None,
                energy: 10.0,
            },
        ];
        let m = Metrics::from_trace(&records);
        assert_eq!(m.frames.sent, 2);
        assert_eq!(m.frames.delivered, 1);
        assert_eq!(m.frames.lost, 1);
        assert_eq!(m.energy_total, 11.0);
        assert_eq!(m.energy_by_link[&LinkKind::Personal], 1.0);
        assert_eq!(m.energy_by_link[&LinkKind::Satellite], 10.0);
        assert_eq!(m.escalation.stage1_sends, 1);
        assert_eq!(m.escalation.stage3_sends, 1);
        assert_eq!(m.delivery.count, 1);
        assert_eq!(m.delivery.mean_ms, 10.0);
    }

    #[test]
    fn fault_scoring_separates_tp_fp_fn() {
        let records = vec![
            TraceRecord::Header {
                seed: 1,
                duration_ms: 100,
            },
            TraceRecord::FaultInjected {
                t: 10,
                seq: 1,
                sensor: 0,
                mode: "stuck_at".into(),
            },
            TraceRecord::FaultInjected {
                t: 10,
                seq: 2,
                sensor: 1,
                mode: "dead".into(),
            },
            // True positive: faulty after its injection.
            TraceRecord::Verdict {
                t: 15,
                seq: 3,
                sensor: 0,
                verdict: Verdict::Faulty,
                reading: 1.0,
                prediction: None,
                in_range: true,
            },
            // False positive: sensor 2 was never injected.
            TraceRecord::Verdict {
                t: 20,
                seq: 4,
                sensor: 2,
                verdict: Verdict::Faulty,
                reading: 1.0,
                prediction: None,
                in_range: true,
            },
        ];
        let m = Metrics::from_trace(&records);
        assert_eq!(m.fault_detection.true_positives, 1);
        assert_eq!(m.fault_detection.false_positives, 1);
        // Sensor 1 (dead) never produced a faulty verdict.
        assert_eq!(m.fault_detection.false_negatives, 1);
    }

    #[test]
    fn mode_occupancy_and_detection_latency() {
        let records = vec![
            TraceRecord::Header {
                seed: 1,
                duration_ms: 1_000,
            },
            TraceRecord::AnomalyStarted {
                t: 100,
                seq: 1,
                sensor: 0,
                offset: 9.0,
            },
            TraceRecord::ModeChange {
                t: 250,
                seq: 2,
                old: PatientMode::Normal,
                new: PatientMode::Critical,
                out_of_threshold: 3,
            },
            TraceRecord::AnomalyEnded {
                t: 600,
                seq: 3,
                sensor: 0,
            },
            TraceRecord::ModeChange {
                t: 700,
                seq: 4,
                old: PatientMode::Critical,
                new: PatientMode::Normal,
                out_of_threshold: 0,
            },
        ];
        let m = Metrics::from_trace(&records);
        assert_eq!(m.mode_occupancy.normal_ms, 250 + 300);
        assert_eq!(m.mode_occupancy.critical_ms, 450);
        assert_eq!(m.emergency_detection.count, 1);
        assert_eq!(m.emergency_detection.min_ms, 150);
    }
}
