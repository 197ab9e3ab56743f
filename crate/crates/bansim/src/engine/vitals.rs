//! Vital-sign signal generators.
//!
//! Each sensor's signal is a sinusoid around a baseline plus Gaussian noise,
//! with scheduled anomaly windows that add a constant offset — enough to
//! keep a healthy patient inside thresholds and to push selected sensors out
//! on cue.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::time::VirtualTime;

/// The monitored sign categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalKind {
    PulseRate,
    RespirationRate,
    BodyTemperature,
    BloodPressure,
    BloodGas,
    CardiacOutput,
    Spirometry,
}

/// A window during which the signal is shifted by `offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyWindow {
    pub start_ms: u64,
    pub end_ms: u64,
    pub offset: f64,
}

impl AnomalyWindow {
    pub fn active_at(&self, t: VirtualTime) -> bool {
        let ms = t.as_millis();
        self.start_ms <= ms && ms < self.end_ms
    }
}

/// Signal description for one sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VitalSignModel {
    pub kind: VitalKind,
    pub baseline: f64,
    pub amplitude: f64,
    pub period_ms: u64,
    pub noise_sigma: f64,
    #[serde(default)]
    pub anomalies: Vec<AnomalyWindow>,
}

impl VitalSignModel {
    /// Violations of the model invariants, as human-readable strings.
    pub fn violations(&self, label: &str) -> Vec<String> {
        let mut out = Vec::new();
        if self.period_ms == 0 {
            out.push(format!("{label}: period_ms must be positive"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            out.push(format!(
                "{label}: noise_sigma {} must be finite and nonnegative",
                self.noise_sigma
            ));
        }
        for (i, w) in self.anomalies.iter().enumerate() {
            if w.start_ms >= w.end_ms {
                out.push(format!(
                    "{label}: anomaly {i} window [{}, {}) is empty",
                    w.start_ms, w.end_ms
                ));
            }
            if !w.offset.is_finite() {
                out.push(format!("{label}: anomaly {i} offset must be finite"));
            }
        }
        for (name, v) in [("baseline", self.baseline), ("amplitude", self.amplitude)] {
            if !v.is_finite() {
                out.push(format!("{label}: {name} must be finite"));
            }
        }
        out
    }

    /// Sum of the offsets of all anomaly windows active at `t`.
    pub fn anomaly_offset(&self, t: VirtualTime) -> f64 {
        self.anomalies
            .iter()
            .filter(|w| w.active_at(t))
            .map(|w| w.offset)
            .sum()
    }
}

/// Draws the signal value at `t`: baseline + sinusoid + Gaussian noise +
/// any active anomaly offset. Consumes exactly one noise draw when
/// `noise_sigma > 0`, keeping the engine's random stream aligned.
pub fn sample_vital<R: Rng>(model: &VitalSignModel, t: VirtualTime, rng: &mut R) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * (t.as_millis() as f64 / model.period_ms as f64);
    let noise = if model.noise_sigma > 0.0 {
        Normal::new(0.0, model.noise_sigma)
            .expect("sigma validated nonnegative")
            .sample(rng)
    } else {
        0.0
    };
    model.baseline + model.amplitude * phase.sin() + noise + model.anomaly_offset(t)
}
