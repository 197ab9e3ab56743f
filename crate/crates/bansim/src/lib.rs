//! Deterministic discrete-event simulator and protocol library for a
//! wireless body area network.
//!
//! Body-worn sensors sample vital signs and validate each reading with an
//! online-trained predictor plus a physiological range check; a fault timer
//! separates transient glitches from genuinely damaged sensors. A cluster
//! head aggregates the verdicts, classifies the patient as normal,
//! semi-critical, or critical, and delivers emergencies through a staged
//! escalation: personal phone first, then a broadcast to nearby phones, then
//! a satellite uplink, advancing on ACK timeout. Daily reports ride a retry
//! queue with hourly resends.
//!
//! Everything runs on a millisecond virtual clock under a single seeded
//! random stream, so any scenario replays byte-identically.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `bansim` binary wraps scenario validation, simulation runs, and the
//! built-in self tests.

pub mod cli;
pub mod cluster;
pub mod codec;
pub mod engine;
pub mod fault;
pub mod net;
pub mod time;

pub use codec::{Fingerprint, Frame};
pub use engine::{run, Metrics, RunOutput, Scenario, TraceRecord};
pub use time::{VirtualDuration, VirtualTime};
