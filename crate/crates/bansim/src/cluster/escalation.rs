//! The emergency escalation interrupt.
//!
//! On an emergency the cluster head sends the report to the personal phone
//! and waits `time1`. No ACK: broadcast to nearby phones and wait `time2`.
//! Still no ACK: send over the satellite uplink, stand by `time3`, and
//! return from the interrupt. An ACK in any waiting stage empties the inbox
//! and standbys `time3` instead; while the emergency persists the caller
//! re-raises immediately after each return.

use thiserror::Error;

use crate::codec::{EventRecord, Fingerprint, Frame, SensorStatusField};
use crate::time::{VirtualDuration, VirtualTime};

use super::TimerConfig;

/// Snapshot the cluster head sends when raising an emergency: who the
/// patient is, which sensors currently agree, and the out-of-threshold
/// readings themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct EmergencyPayload {
    pub fingerprint: Fingerprint,
    pub status: SensorStatusField,
    pub events: Vec<EventRecord>,
}

impl EmergencyPayload {
    fn daily_report(&self) -> Frame {
        Frame::DailyReport {
            fingerprint: self.fingerprint,
            status: self.status.clone(),
            events: self.events.clone(),
        }
    }

    fn broadcast(&self) -> Frame {
        Frame::EmergencyBroadcast {
            fingerprint: self.fingerprint,
            events: self.events.clone(),
        }
    }

    fn satellite(&self) -> Frame {
        Frame::SatelliteReport {
            fingerprint: self.fingerprint,
            events: self.events.clone(),
        }
    }
}

/// Where the interrupt currently stands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// No interrupt active.
    MonitorIdle,
    /// Sent to the personal phone, waiting `time1` for an ACK.
    Stage1Wait { deadline: VirtualTime },
    /// Broadcast to nearby phones, waiting `time2` for an ACK.
    Stage2Wait { deadline: VirtualTime },
    /// Sent over satellite, standing by `time3` before returning.
    Stage3Wait { deadline: VirtualTime },
    /// ACK consumed, standing by `time3` before returning.
    PostAckStandby { deadline: VirtualTime },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::MonitorIdle => "monitor_idle",
            Stage::Stage1Wait { .. } => "stage1_wait",
            Stage::Stage2Wait { .. } => "stage2_wait",
            Stage::Stage3Wait { .. } => "stage3_wait",
            Stage::PostAckStandby { .. } => "post_ack_standby",
        }
    }

    /// True in stages that are waiting on an armed timer.
    pub fn is_waiting(&self) -> bool {
        !matches!(self, Stage::MonitorIdle)
    }

    /// True in stages where an ACK advances the machine.
    pub fn awaits_ack(&self) -> bool {
        matches!(
            self,
            Stage::Stage1Wait { .. } | Stage::Stage2Wait { .. } | Stage::Stage3Wait { .. }
        )
    }
}

/// Inputs to the interrupt state machine.
#[derive(Clone, Debug, PartialEq)]
pub enum EscalationEvent {
    EmergencyRaised(EmergencyPayload),
    TimerExpired,
    AckReceived(Frame),
    EmergencyCleared,
}

impl EscalationEvent {
    fn name(&self) -> &'static str {
        match self {
            EscalationEvent::EmergencyRaised(_) => "emergency_raised",
            EscalationEvent::TimerExpired => "timer_expired",
            EscalationEvent::AckReceived(_) => "ack_received",
            EscalationEvent::EmergencyCleared => "emergency_cleared",
        }
    }
}

/// Outputs the caller must carry out, in order.
#[derive(Clone, Debug, PartialEq)]
pub enum ChAction {
    SendToPersonalPhone(Frame),
    BroadcastNearby(Frame),
    SendSatellite(Frame),
    ArmTimer(VirtualDuration),
    EmptyInbox,
    ReturnFromInterrupt,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("event {event} is illegal in stage {stage}")]
    IllegalEvent {
        stage: &'static str,
        event: &'static str,
    },
    #[error("ack event carried a non-ack frame ({kind})")]
    NotAnAck { kind: &'static str },
}

/// The cluster head's interrupt state: current stage, whether the emergency
/// condition still holds, and the ACK inbox (emptied exactly when an ACK is
/// consumed).
#[derive(Clone, Debug, PartialEq)]
pub struct EscalationState {
    stage: Stage,
    emergency_active: bool,
    inbox: Vec<Frame>,
    payload: Option<EmergencyPayload>,
}

impl Default for EscalationState {
    fn default() -> Self {
        Self::new()
    }
}

impl EscalationState {
    pub fn new() -> Self {
        EscalationState {
            stage: Stage::MonitorIdle,
            emergency_active: false,
            inbox: Vec::new(),
            payload: None,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn emergency_active(&self) -> bool {
        self.emergency_active
    }

    pub fn inbox(&self) -> &[Frame] {
        &self.inbox
    }

    /// Advances the machine by one event and returns the actions to perform.
    /// `TimerExpired` is only legal in a waiting stage and `EmergencyRaised`
    /// only from idle; stray ACKs outside the waiting stages are ignored.
    pub fn step(
        &mut self,
        cfg: &TimerConfig,
        event: EscalationEvent,
        now: VirtualTime,
    ) -> Result<Vec<ChAction>, ProtocolError> {
        match event {
            EscalationEvent::EmergencyCleared => {
                self.stage = Stage::MonitorIdle;
                self.emergency_active = false;
                self.payload = None;
                self.inbox.clear();
                Ok(vec![])
            }
            EscalationEvent::EmergencyRaised(payload) => {
                if self.stage.is_waiting() {
                    return Err(ProtocolError::IllegalEvent {
                        stage: self.stage.name(),
                        event: "emergency_raised",
                    });
                }
                let frame = payload.daily_report();
                self.payload = Some(payload);
                self.emergency_active = true;
                self.stage = Stage::Stage1Wait {
                    deadline: now + cfg.time1(),
                };
                Ok(vec![
                    ChAction::SendToPersonalPhone(frame),
                    ChAction::ArmTimer(cfg.time1()),
                ])
            }
            EscalationEvent::AckReceived(frame) => {
                if !matches!(frame, Frame::Ack { .. }) {
                    return Err(ProtocolError::NotAnAck {
                        kind: frame.kind_name(),
                    });
                }
                if !self.stage.awaits_ack() {
                    // First ACK wins; duplicates and stragglers are ignored.
                    return Ok(vec![]);
                }
                self.inbox.push(frame);
                self.inbox.clear();
                self.stage = Stage::PostAckStandby {
                    deadline: now + cfg.time3(),
                };
                Ok(vec![ChAction::EmptyInbox, ChAction::ArmTimer(cfg.time3())])
            }
            EscalationEvent::TimerExpired => {
                let payload = self.payload.clone();
                match self.stage {
                    Stage::MonitorIdle => Err(ProtocolError::IllegalEvent {
                        stage: self.stage.name(),
                        event: event.name(),
                    }),
                    Stage::Stage1Wait { .. } => {
                        let frame = payload.expect("payload set when stage 1 armed").broadcast();
                        self.stage = Stage::Stage2Wait {
                            deadline: now + cfg.time2(),
                        };
                        Ok(vec![
                            ChAction::BroadcastNearby(frame),
                            ChAction::ArmTimer(cfg.time2()),
                        ])
                    }
                    Stage::Stage2Wait { .. } => {
                        let frame = payload.expect("payload set when stage 2 armed").satellite();
                        self.stage = Stage::Stage3Wait {
                            deadline: now + cfg.time3(),
                        };
                        Ok(vec![
                            ChAction::SendSatellite(frame),
                            ChAction::ArmTimer(cfg.time3()),
                        ])
                    }
                    Stage::Stage3Wait { .. } | Stage::PostAckStandby { .. } => {
                        self.stage = Stage::MonitorIdle;
                        self.payload = None;
                        Ok(vec![ChAction::ReturnFromInterrupt])
                    }
                }
            }
        }
    }
}
