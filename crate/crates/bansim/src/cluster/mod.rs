//! The cluster head: patient-state classification, the emergency escalation
//! interrupt, and the normal-mode daily report loop with its retry queue.

mod classify;
mod escalation;
mod normal;

pub use classify::{classify, on_mode_change, ClassifyError, ModeAction, PatientMode};
pub use escalation::{
    ChAction, EmergencyPayload, EscalationEvent, EscalationState, ProtocolError, Stage,
};
pub use normal::{NormalAction, NormalLoop, QueuedReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::VirtualDuration;

/// Protocol timer constants. `time0` paces the daily report, `time01` the
/// retry scan of the unacknowledged queue; `time1`..`time3` are the three
/// escalation ACK/standby windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimerConfig {
    /// Daily report period.
    pub time0_ms: u64,
    /// Retry interval for unacknowledged reports; must be shorter than `time0_ms`.
    pub time01_ms: u64,
    /// ACK window after the personal-phone send.
    pub time1_ms: u64,
    /// ACK window after the nearby broadcast.
    pub time2_ms: u64,
    /// Standby before the interrupt returns.
    pub time3_ms: u64,
}

/// Timer configuration error.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimerConfigError {
    #[error("timer {name} must be strictly positive")]
    NonPositive { name: &'static str },
    #[error("time01 ({time01_ms} ms) must be shorter than time0 ({time0_ms} ms)")]
    RetryNotShorterThanDaily { time01_ms: u64, time0_ms: u64 },
}

impl TimerConfig {
    pub fn validate(&self) -> Result<(), TimerConfigError> {
        for (name, v) in [
            ("time0", self.time0_ms),
            ("time01", self.time01_ms),
            ("time1", self.time1_ms),
            ("time2", self.time2_ms),
            ("time3", self.time3_ms),
        ] {
            if v == 0 {
                return Err(TimerConfigError::NonPositive { name });
            }
        }
        if self.time01_ms >= self.time0_ms {
            return Err(TimerConfigError::RetryNotShorterThanDaily {
                time01_ms: self.time01_ms,
                time0_ms: self.time0_ms,
            });
        }
        Ok(())
    }

    pub fn time0(&self) -> VirtualDuration {
        VirtualDuration::from_millis(self.time0_ms)
    }

    pub fn time01(&self) -> VirtualDuration {
        VirtualDuration::from_millis(self.time01_ms)
    }

    pub fn time1(&self) -> VirtualDuration {
        VirtualDuration::from_millis(self.time1_ms)
    }

    pub fn time2(&self) -> VirtualDuration {
        VirtualDuration::from_millis(self.time2_ms)
    }

    pub fn time3(&self) -> VirtualDuration {
        VirtualDuration::from_millis(self.time3_ms)
    }
}

impl Default for TimerConfig {
    /// The protocol defaults: 24 h daily period, 1 h retry, 100 ms / 2 s /
    /// 20 s escalation windows.
    fn default() -> Self {
        TimerConfig {
            time0_ms: 24 * 3_600_000,
            time01_ms: 3_600_000,
            time1_ms: 100,
            time2_ms: 2_000,
            time3_ms: 20_000,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = TimerConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.time1_ms, 100);
        assert_eq!(cfg.time2_ms, 2_000);
        assert_eq!(cfg.time3_ms, 20_000);
        assert_eq!(cfg.time0_ms, 86_400_000);
        assert_eq!(cfg.time01_ms, 3_600_000);
    }

    #[test]
    fn retry_must_be_shorter_than_daily() {
        let cfg = TimerConfig {
            time01_ms: 86_400_000,
            ..TimerConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(TimerConfigError::RetryNotShorterThanDaily { .. })
        ));
    }

    #[test]
    fn zero_timer_rejected() {
        let cfg = TimerConfig {
            time2_ms: 0,
            ..TimerConfig::default()
        };
        assert_eq!(
            cfg.validate(),
            Err(TimerConfigError::NonPositive { name: "time2" })
        );
    }
}
