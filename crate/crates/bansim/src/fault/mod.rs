//! Per-sensor fault detection: physiological range check, online neighbor
//! predictor, normalized error comparison, and the confirmation timer that
//! separates transient glitches from damaged sensors.

mod health;
mod predictor;

pub use health::{
    error_rate, FaultTimer, ReadingOutcome, SensorHealth, Verdict, DEFAULT_EPS_MAX,
    DEFAULT_FAULT_WINDOW,
};
pub use predictor::{PredictorError, PredictorModel, DEFAULT_HIDDEN_UNITS, DEFAULT_LEARNING_RATE};
