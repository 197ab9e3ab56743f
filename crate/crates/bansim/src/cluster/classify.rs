//! Patient-state classification from the count of out-of-threshold sensors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Patient condition, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatientMode {
    Normal,
    SemiCritical,
    Critical,
}

impl std::fmt::Display for PatientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PatientMode::Normal => "normal",
            PatientMode::SemiCritical => "semi-critical",
            PatientMode::Critical => "critical",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("out-of-threshold count {count} exceeds sensor count {n_sensors}")]
    CountExceedsSensors { count: usize, n_sensors: usize },
}

/// Maps the number of out-of-threshold sensors to a patient mode: zero is
/// normal, one or two semi-critical, three or more critical. The three-sensor
/// boundary resolves to the more severe mode.
pub fn classify(out_of_threshold: usize, n_sensors: usize) -> Result<PatientMode, ClassifyError> {
    if out_of_threshold > n_sensors {
        return Err(ClassifyError::CountExceedsSensors {
            count: out_of_threshold,
            n_sensors,
        });
    }
    Ok(match out_of_threshold {
        0 => PatientMode::Normal,
        1 | 2 => PatientMode::SemiCritical,
        _ => PatientMode::Critical,
    })
}

/// What the cluster head does when the patient mode changes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeAction {
    /// Ask every sensor for its current data (semi-critical entry); the
    /// collected snapshot is then forwarded to the database.
    RequestAllSensorData,
    /// Start the emergency escalation interrupt.
    RaiseEmergency,
    /// Stop the escalation: the patient left the critical mode.
    ClearEmergency,
}

/// Actions for a mode transition. Entering semi-critical broadcasts a data
/// request to the sensors; entering critical raises the emergency instead
/// (no sensor broadcast — the data goes out directly); leaving critical
/// clears it.
pub fn on_mode_change(old: PatientMode, new: PatientMode) -> Vec<ModeAction> {
    debug_assert_ne!(old, new, "mode change requires a change");
    let mut actions = Vec::new();
    if old == PatientMode::Critical {
        actions.push(ModeAction::ClearEmergency);
    }
    match new {
        PatientMode::SemiCritical => actions.push(ModeAction::RequestAllSensorData),
        PatientMode::Critical => actions.push(ModeAction::RaiseEmergency),
        PatientMode::Normal => {}
    }
    actions
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries() {
        assert_eq!(classify(0, 10).unwrap(), PatientMode::Normal);
        assert_eq!(classify(1, 10).unwrap(), PatientMode::SemiCritical);
        assert_eq!(classify(2, 10).unwrap(), PatientMode::SemiCritical);
        assert_eq!(classify(3, 10).unwrap(), PatientMode::Critical);
        assert_eq!(classify(5, 10).unwrap(), PatientMode::Critical);
        assert_eq!(classify(10, 10).unwrap(), PatientMode::Critical);
    }

    #[test]
    fn count_above_sensor_count_is_an_error() {
        assert_eq!(
            classify(11, 10),
            Err(ClassifyError::CountExceedsSensors { count: 11, n_sensors: 10 })
        );
    }

    #[test]
    fn severity_order() {
        assert!(PatientMode::Normal < PatientMode::SemiCritical);
        assert!(PatientMode::SemiCritical < PatientMode::Critical);
    }

    #[test]
    fn entering_semi_critical_requests_sensor_data() {
        assert_eq!(
            on_mode_change(PatientMode::Normal, PatientMode::SemiCritical),
            vec![ModeAction::RequestAllSensorData]
        );
    }

    #[test]
    fn entering_critical_raises_without_broadcast() {
        assert_eq!(
            on_mode_change(PatientMode::Normal, PatientMode::Critical),
            vec![ModeAction::RaiseEmergency]
        );
        assert_eq!(
            on_mode_change(PatientMode::SemiCritical, PatientMode::Critical),
            vec![ModeAction::RaiseEmergency]
        );
    }

    #[test]
    fn leaving_critical_clears() {
        assert_eq!(
            on_mode_change(PatientMode::Critical, PatientMode::Normal),
            vec![ModeAction::ClearEmergency]
        );
        assert_eq!(
            on_mode_change(PatientMode::Critical, PatientMode::SemiCritical),
            vec![ModeAction::ClearEmergency, ModeAction::RequestAllSensorData]
        );
    }
}
