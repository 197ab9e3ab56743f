//! Database / emergency-center sink behavior.
//!
//! Both sinks record everything they receive. A satellite report (direct or
//! relayed by a phone) dispatches the emergency service toward the patient;
//! a daily report is acknowledged, and any zero bit in its status field
//! raises a damaged-sensor advisory for that sensor.

use crate::codec::Frame;

/// What the sink does with a decoded frame.
#[derive(Clone, Debug, PartialEq)]
pub enum SinkAction {
    /// Store the frame in the patient's file.
    Record,
    /// Alert the emergency service with the patient's information.
    DispatchService,
    /// Advise the patient that the sensor at this index reports damaged.
    SensorDamagedAdvisory(usize),
    /// Acknowledge receipt toward the sender.
    Ack(Frame),
}

/// Sink receive behavior. Frames that fail CRC never reach this function;
/// the engine counts and drops them (there is no NACK on the wire).
pub fn database_on_receive(frame: &Frame) -> Vec<SinkAction> {
    match frame {
        Frame::SatelliteReport { .. } => vec![SinkAction::Record, SinkAction::DispatchService],
        Frame::DailyReport {
            fingerprint,
            status,
            ..
        } => {
            let mut actions = vec![SinkAction::Record];
            for idx in status.conflict_indices() {
                actions.push(SinkAction::SensorDamagedAdvisory(idx));
            }
            actions.push(SinkAction::Ack(Frame::Ack {
                fingerprint: *fingerprint,
            }));
            actions
        }
        _ => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_status_field, Fingerprint};

    #[test]
    fn satellite_report_dispatches_service() {
        let frame = Frame::SatelliteReport {
            fingerprint: Fingerprint(5),
            events: vec![],
        };
        assert_eq!(
            database_on_receive(&frame),
            vec![SinkAction::Record, SinkAction::DispatchService]
        );
    }

    #[test]
    fn clean_daily_report_is_recorded_and_acked() {
        let frame = Frame::DailyReport {
            fingerprint: Fingerprint(5),
            status: build_status_field(&[true; 10]),
            events: vec![],
        };
        assert_eq!(
            database_on_receive(&frame),
            vec![
                SinkAction::Record,
                SinkAction::Ack(Frame::Ack {
                    fingerprint: Fingerprint(5)
                })
            ]
        );
    }

    #[test]
    fn zero_status_bit_raises_damaged_sensor_advisory() {
        let mut verdicts = [true; 10];
        verdicts[5] = false;
        let frame = Frame::DailyReport {
            fingerprint: Fingerprint(5),
            status: build_status_field(&verdicts),
            events: vec![],
        };
        let actions = database_on_receive(&frame);
        assert_eq!(actions.len(), 3);
        assert_eq!(actions[0], SinkAction::Record);
        assert_eq!(actions[1], SinkAction::SensorDamagedAdvisory(5));
        assert!(matches!(actions[2], SinkAction::Ack(_)));
    }

    #[test]
    fn acks_and_beacons_are_dropped() {
        assert!(database_on_receive(&Frame::Ack {
            fingerprint: Fingerprint(1)
        })
        .is_empty());
        assert!(database_on_receive(&Frame::Beacon {
            fingerprint: Fingerprint(1)
        })
        .is_empty());
    }
}
