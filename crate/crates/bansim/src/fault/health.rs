//! Range checking, prediction comparison, and the fault-confirmation timer.
//!
//! A reading is checked against the sensor's physiological range first, then
//! against the predictor's value. Disagreement arms a countdown; only a
//! conflict that persists until the countdown overflows declares the sensor
//! faulty, so a brief glitch followed by agreement costs nothing. Faulty is
//! latched until an explicit reset.

use serde::{Deserialize, Serialize};

use crate::time::{VirtualDuration, VirtualTime};

/// Outcome of checking one reading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Reading is in range and agrees with the prediction.
    Valid,
    /// Reading is out of range or disagrees with the prediction, but the
    /// confirmation timer has not overflowed yet.
    Conflict,
    /// Conflict persisted for the full confirmation window; the sensor is
    /// considered damaged.
    Faulty,
}

/// Confirmation countdown armed on the first conflicting reading.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultTimer {
    Idle,
    Counting { deadline: VirtualTime },
}

pub const DEFAULT_FAULT_WINDOW: VirtualDuration = VirtualDuration::from_millis(5_000);
pub const DEFAULT_EPS_MAX: f64 = 0.1;

/// Normalized disagreement between a reading and its prediction, relative to
/// the sensor's physiological range.
pub fn error_rate(reading: f64, prediction: f64, range: (f64, f64)) -> f64 {
    let (lo, hi) = range;
    debug_assert!(lo < hi, "range must be a proper interval");
    (reading - prediction).abs() / (hi - lo)
}

/// Per-sensor validity state: range bounds, tolerated error, the fault
/// timer, and the latched faulty flag.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorHealth {
    range: (f64, f64),
    eps_max: f64,
    window: VirtualDuration,
    timer: FaultTimer,
    faulty: bool,
    last_verdict: Verdict,
}

/// What the caller should do after a check: whether to train the predictor
/// on this reading, and whether the reading sat inside the physical range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReadingOutcome {
    pub verdict: Verdict,
    pub train: bool,
    pub in_range: bool,
}

impl SensorHealth {
    pub fn new(range: (f64, f64), eps_max: f64, window: VirtualDuration) -> Self {
        assert!(range.0 < range.1, "range must be a proper interval");
        assert!(eps_max > 0.0 && eps_max <= 1.0, "eps_max must be in (0, 1]");
        SensorHealth {
            range,
            eps_max,
            window,
            timer: FaultTimer::Idle,
            faulty: false,
            last_verdict: Verdict::Valid,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn is_faulty(&self) -> bool {
        self.faulty
    }

    pub fn last_verdict(&self) -> Verdict {
        self.last_verdict
    }

    pub fn timer(&self) -> FaultTimer {
        self.timer
    }

    /// Clears the latched faulty flag and the timer (operator action).
    pub fn reset_fault(&mut self) {
        self.faulty = false;
        self.timer = FaultTimer::Idle;
        self.last_verdict = Verdict::Valid;
    }

    /// Checks one reading against the range and, when available, the
    /// prediction. `prediction` is `None` while the predictor has no inputs
    /// yet (neighbors have not reported); in that case an in-range reading
    /// passes on the range check alone and nothing is trained.
    pub fn check_reading(
        &mut self,
        reading: f64,
        prediction: Option<f64>,
        now: VirtualTime,
    ) -> ReadingOutcome {
        let in_range = reading >= self.range.0 && reading <= self.range.1;
        if self.faulty {
            self.last_verdict = Verdict::Faulty;
            return ReadingOutcome {
                verdict: Verdict::Faulty,
                train: false,
                in_range,
            };
        }

        let agrees = in_range
            && match prediction {
                Some(p) => error_rate(reading, p, self.range) <= self.eps_max,
                None => true,
            };

        if agrees {
            self.timer = FaultTimer::Idle;
            self.last_verdict = Verdict::Valid;
            return ReadingOutcome {
                verdict: Verdict::Valid,
                train: prediction.is_some(),
                in_range,
            };
        }

        let verdict = match self.timer {
            FaultTimer::Idle => {
                self.timer = FaultTimer::Counting {
                    deadline: now + self.window,
                };
                Verdict::Conflict
            }
            FaultTimer::Counting { deadline } if now < deadline => Verdict::Conflict,
            FaultTimer::Counting { .. } => {
                self.faulty = true;
                Verdict::Faulty
            }
        };
        self.last_verdict = verdict;
        ReadingOutcome {
            verdict,
            train: false,
            in_range,
        }
    }
}
