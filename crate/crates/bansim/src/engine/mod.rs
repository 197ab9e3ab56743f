//! Deterministic discrete-event engine: scheduler, vital-sign generators,
//! fault and outage injection, trace emission, and metric aggregation.

mod metrics;
mod queue;
mod run;
mod scenario;
mod trace;
mod vitals;

pub use metrics::{
    DailyStats, EscalationStats, FaultScore, FrameStats, LatencyStats, Metrics, ModeOccupancy,
};
pub use queue::EventQueue;
pub use run::{run, run_with_seed, RunOutput};
pub use scenario::{
    FaultInjection, FaultMode, LinkTable, PhoneConfig, PositionChange, ReachabilityChange,
    Scenario, ScenarioError, SensorConfig,
};
pub use trace::{read_trace, write_trace, ActorId, SendContext, TraceRecord};
pub use vitals::{sample_vital, AnomalyWindow, VitalKind, VitalSignModel};
