//! Experiment description: sensors, phones, links, timers, fault injections,
//! seed, and duration. Scenario files are JSON with exactly these keys;
//! unknown keys are rejected so a typo in a timer name cannot silently
//! change a run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::TimerConfig;
use crate::net::{LinkModel, PhoneRole, DEFAULT_BROADCAST_RADIUS_M};

use super::vitals::VitalSignModel;

/// Scenario failed validation; every violation is listed.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("scenario invalid:\n{}", violations.join("\n"))]
pub struct ScenarioError {
    pub violations: Vec<String>,
}

/// Channel models for the four link kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkTable {
    /// Cluster head <-> personal phone.
    pub personal: LinkModel,
    /// Cluster head -> bystander phones within the broadcast radius.
    pub broadcast: LinkModel,
    /// Cluster head -> database over the satellite uplink.
    pub satellite: LinkModel,
    /// Phone <-> database/emergency-center legs (Internet side).
    pub internal: LinkModel,
}

impl LinkTable {
    /// Sensible defaults: reliable 10 ms radio legs with the energy ordering
    /// personal (1.0) < broadcast (2.0) < satellite (10.0), free internal.
    pub fn reliable() -> Self {
        LinkTable {
            personal: LinkModel {
                delivery_prob: 1.0,
                latency_base_ms: 10,
                latency_jitter_ms: 0,
                energy_cost: 1.0,
            },
            broadcast: LinkModel {
                delivery_prob: 1.0,
                latency_base_ms: 10,
                latency_jitter_ms: 0,
                energy_cost: 2.0,
            },
            satellite: LinkModel {
                delivery_prob: 1.0,
                latency_base_ms: 250,
                latency_jitter_ms: 0,
                energy_cost: 10.0,
            },
            internal: LinkModel {
                delivery_prob: 1.0,
                latency_base_ms: 5,
                latency_jitter_ms: 0,
                energy_cost: 0.0,
            },
        }
    }
}

fn default_quant_bits() -> u8 {
    8
}
fn default_eps_max() -> f64 {
    0.1
}
fn default_fault_window_ms() -> u64 {
    5_000
}
fn default_sample_period_ms() -> u64 {
    1_000
}
fn default_hidden_units() -> usize {
    4
}
fn default_learning_rate() -> f64 {
    0.01
}
fn default_reachable() -> bool {
    true
}
fn default_broadcast_radius() -> f64 {
    DEFAULT_BROADCAST_RADIUS_M
}

/// One body sensor: its signal, physiological range (also the quantization
/// range), fault-detection parameters, predictor shape, and which other
/// sensors feed its predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub vital: VitalSignModel,
    pub range_lo: f64,
    pub range_hi: f64,
    #[serde(default = "default_quant_bits")]
    pub quant_bits: u8,
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "default_fault_window_ms")]
    pub fault_window_ms: u64,
    #[serde(default = "default_sample_period_ms")]
    pub sample_period_ms: u64,
    /// Indices of the sensors whose readings feed this sensor's predictor.
    /// Empty means range-check only.
    #[serde(default)]
    pub neighbors: Vec<usize>,
    #[serde(default = "default_hidden_units")]
    pub hidden_units: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
}

/// Scripted reachability flip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachabilityChange {
    pub at_ms: u64,
    pub reachable: bool,
}

/// Scripted position change.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionChange {
    pub at_ms: u64,
    pub position_m: [f64; 2],
}

/// One phone and its script.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhoneConfig {
    pub id: u32,
    pub role: PhoneRole,
    pub position_m: [f64; 2],
    #[serde(default = "default_reachable")]
    pub reachable: bool,
    #[serde(default)]
    pub reachability_changes: Vec<ReachabilityChange>,
    #[serde(default)]
    pub position_changes: Vec<PositionChange>,
}

/// How an injected sensor fault corrupts samples from its start time on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultMode {
    /// The sensor reports this constant value.
    StuckAt(f64),
    /// The sensor reports the true value shifted by this delta.
    Offset(f64),
    /// The sensor stops emitting samples entirely.
    Dead,
}

/// Ground-truth fault injection on one sensor, persistent from `start_ms`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultInjection {
    pub sensor: usize,
    pub start_ms: u64,
    pub mode: FaultMode,
}

/// The full experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub duration_ms: u64,
    pub patient_fingerprint: u64,
    #[serde(default)]
    pub ch_position_m: [f64; 2],
    #[serde(default = "default_broadcast_radius")]
    pub broadcast_radius_m: f64,
    #[serde(default)]
    pub timers: TimerConfig,
    pub links: LinkTable,
    pub sensors: Vec<SensorConfig>,
    #[serde(default)]
    pub phones: Vec<PhoneConfig>,
    #[serde(default)]
    pub fault_injections: Vec<FaultInjection>,
}

impl Scenario {
    /// Checks every invariant and returns the full violation list on failure.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut v: Vec<String> = Vec::new();

        if self.duration_ms == 0 {
            v.push("duration_ms must be positive".into());
        }
        if self.patient_fingerprint == 0 {
            v.push("patient_fingerprint must be nonzero".into());
        }
        if !(self.broadcast_radius_m > 0.0) || !self.broadcast_radius_m.is_finite() {
            v.push(format!(
                "broadcast_radius_m {} must be positive and finite",
                self.broadcast_radius_m
            ));
        }
        if self.ch_position_m.iter().any(|c| !c.is_finite()) {
            v.push("ch_position_m must be finite".into());
        }
        if let Err(e) = self.timers.validate() {
            v.push(format!("timers: {e}"));
        }
        v.extend(self.links.personal.violations("personal"));
        v.extend(self.links.broadcast.violations("broadcast"));
        v.extend(self.links.satellite.violations("satellite"));
        v.extend(self.links.internal.violations("internal"));

        if self.sensors.is_empty() {
            v.push("at least one sensor is required".into());
        }
        if self.sensors.len() > u8::MAX as usize {
            v.push(format!(
                "sensor count {} exceeds the wire limit of 255",
                self.sensors.len()
            ));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            let label = format!("sensor {i}");
            v.extend(s.vital.violations(&label));
            if !(s.range_lo < s.range_hi)
                || !s.range_lo.is_finite()
                || !s.range_hi.is_finite()
            {
                v.push(format!(
                    "{label}: range [{}, {}] is not a valid interval",
                    s.range_lo, s.range_hi
                ));
            }
            if s.quant_bits == 0 || s.quant_bits > 16 {
                v.push(format!(
                    "{label}: quant_bits {} outside 1..=16",
                    s.quant_bits
                ));
            }
            if !(s.eps_max > 0.0 && s.eps_max <= 1.0) {
                v.push(format!("{label}: eps_max {} outside (0, 1]", s.eps_max));
            }
            if s.fault_window_ms == 0 {
                v.push(format!("{label}: fault_window_ms must be positive"));
            }
            if s.sample_period_ms == 0 {
                v.push(format!("{label}: sample_period_ms must be positive"));
            }
            if s.hidden_units == 0 {
                v.push(format!("{label}: hidden_units must be at least 1"));
            }
            if !(s.learning_rate > 0.0) || !s.learning_rate.is_finite() {
                v.push(format!(
                    "{label}: learning_rate {} must be positive and finite",
                    s.learning_rate
                ));
            }
            for &n in &s.neighbors {
                if n == i {
                    v.push(format!("{label}: neighbor index {n} refers to itself"));
                } else if n >= self.sensors.len() {
                    v.push(format!(
                        "{label}: neighbor index {n} out of range for {} sensors",
                        self.sensors.len()
                    ));
                }
            }
        }

        let mut personal_count = 0;
        for (i, p) in self.phones.iter().enumerate() {
            if p.role == PhoneRole::Personal {
                personal_count += 1;
            }
            if p.position_m.iter().any(|c| !c.is_finite())
                || p.position_changes
                    .iter()
                    .any(|c| c.position_m.iter().any(|x| !x.is_finite()))
            {
                v.push(format!("phone {} (index {i}): positions must be finite", p.id));
            }
            if self.phones[..i].iter().any(|q| q.id == p.id) {
                v.push(format!("phone id {} is duplicated", p.id));
            }
        }
        if personal_count > 1 {
            v.push(format!(
                "at most one personal phone is allowed, found {personal_count}"
            ));
        }

        for (i, f) in self.fault_injections.iter().enumerate() {
            if f.sensor >= self.sensors.len() {
                v.push(format!(
                    "fault injection {i}: sensor index {} out of range for {} sensors",
                    f.sensor,
                    self.sensors.len()
                ));
            }
            if let FaultMode::StuckAt(x) | FaultMode::Offset(x) = f.mode {
                if !x.is_finite() {
                    v.push(format!("fault injection {i}: value must be finite"));
                }
            }
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError { violations: v })
        }
    }

    /// Parses and validates a scenario from JSON text.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError {
            violations: vec![format!("parse error: {e}")],
        })?;
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::vitals::VitalKind;

    pub(crate) fn one_sensor(neighbors: Vec<usize>) -> SensorConfig {
        SensorConfig {
            vital: VitalSignModel {
                kind: VitalKind::BodyTemperature,
                baseline: 37.0,
                amplitude: 0.5,
                period_ms: 60_000,
                noise_sigma: 0.02,
                anomalies: vec![],
            },
            range_lo: 30.0,
            range_hi: 45.0,
            quant_bits: 8,
            eps_max: 0.1,
            fault_window_ms: 5_000,
            sample_period_ms: 1_000,
            neighbors,
            hidden_units: 4,
            learning_rate: 0.01,
        }
    }

    fn minimal() -> Scenario {
        Scenario {
            seed: 1,
            duration_ms: 10_000,
            patient_fingerprint: 1001,
            ch_position_m: [0.0, 0.0],
            broadcast_radius_m: 40.0,
            timers: TimerConfig::default(),
            links: LinkTable::reliable(),
            sensors: vec![one_sensor(vec![])],
            phones: vec![],
            fault_injections: vec![],
        }
    }

    #[test]
    fn minimal_scenario_is_valid() {
        assert!(minimal().validate().is_ok());
    }

    #[test]
    fn self_neighbor_is_named_in_the_violation() {
        let mut s = minimal();
        s.sensors = vec![one_sensor(vec![0])];
        let err = s.validate().unwrap_err();
        assert!(err.violations.iter().any(|m| m.contains("sensor 0")
            && m.contains("refers to itself")));
    }

    #[test]
    fn retry_interval_must_beat_daily_period() {
        let mut s = minimal();
        s.timers.time01_ms = s.timers.time0_ms;
        let err = s.validate().unwrap_err();
        assert!(err.violations.iter().any(|m| m.contains("time01")));
    }

    #[test]
    fn all_violations_are_collected() {
        let mut s = minimal();
        s.duration_ms = 0;
        s.patient_fingerprint = 0;
        s.sensors[0].eps_max = 2.0;
        s.sensors[0].neighbors = vec![9];
        let err = s.validate().unwrap_err();
        assert!(err.violations.len() >= 4, "got {:?}", err.violations);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let mut value = serde_json::to_value(minimal()).unwrap();
        value
            .as_object_mut()
            .unwrap()
            .insert("time_zero_ms".into(), 5.into());
        let text = serde_json::to_string(&value).unwrap();
        let err = Scenario::from_json(&text).unwrap_err();
        assert!(err.violations[0].contains("unknown field"));
    }

    #[test]
    fn json_round_trip_preserves_the_scenario() {
        let s = minimal();
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }

    #[test]
    fn duplicate_phone_ids_and_two_personal_phones_rejected() {
        let mut s = minimal();
        let phone = PhoneConfig {
            id: 1,
            role: PhoneRole::Personal,
            position_m: [1.0, 0.0],
            reachable: true,
            reachability_changes: vec![],
            position_changes: vec![],
        };
        s.phones = vec![phone.clone(), phone];
        let err = s.validate().unwrap_err();
        assert!(err.violations.iter().any(|m| m.contains("duplicated")));
        assert!(err
            .violations
            .iter()
            .any(|m| m.contains("at most one personal phone")));
    }

    #[test]
    fn fault_injection_sensor_bounds_checked() {
        let mut s = minimal();
        s.fault_injections = vec![FaultInjection {
            sensor: 3,
            start_ms: 0,
            mode: FaultMode::Dead,
        }];
        let err = s.validate().unwrap_err();
        assert!(err.violations[0].contains("fault injection 0"));
    }
}
