//! Phone endpoints: the patient's own phone and bystander phones discovered
//! within the broadcast radius.

use serde::{Deserialize, Serialize};

use crate::codec::Frame;

/// Whether a phone belongs to the patient or to someone nearby.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhoneRole {
    Personal,
    Bystander,
}

/// A phone in the world: position in meters and a scenario-driven
/// reachability flag.
#[derive(Clone, Debug, PartialEq)]
pub struct PhoneNode {
    pub id: u32,
    pub position: [f64; 2],
    pub reachable: bool,
    pub role: PhoneRole,
}

impl PhoneNode {
    pub fn distance_to(&self, point: [f64; 2]) -> f64 {
        let dx = self.position[0] - point[0];
        let dy = self.position[1] - point[1];
        (dx * dx + dy * dy).sqrt()
    }
}

/// Reachable bystander phones within `radius` meters of `center` (boundary
/// inclusive), ordered by distance then id so discovery is deterministic.
pub fn discover_nearby(phones: &[PhoneNode], center: [f64; 2], radius: f64) -> Vec<PhoneNode> {
    debug_assert!(radius > 0.0);
    let mut found: Vec<(f64, PhoneNode)> = phones
        .iter()
        .filter(|p| p.role == PhoneRole::Bystander && p.reachable)
        .map(|p| (p.distance_to(center), p.clone()))
        .filter(|(d, _)| *d <= radius)
        .collect();
    found.sort_by(|(da, pa), (db, pb)| da.total_cmp(db).then(pa.id.cmp(&pb.id)));
    found.into_iter().map(|(_, p)| p).collect()
}

/// What a phone does with a decoded frame.
#[derive(Clone, Debug, PartialEq)]
pub enum PhoneAction {
    /// Relay the payload (emergency marker stripped) to the emergency center.
    ForwardToEmergencyCenter(Frame),
    /// Relay the report to the hospital database.
    ForwardToDatabase(Frame),
    /// Acknowledge back to the cluster head.
    AckToClusterHead(Frame),
}

/// Phone receive behavior. An emergency broadcast is forwarded to the
/// emergency center with the marker stripped and acknowledged to the cluster
/// head in the same instant; a daily report on the personal phone is
/// forwarded to the database and acknowledged; a beacon is acknowledged
/// only; everything else is dropped (ACKs terminate at the cluster head).
pub fn phone_on_receive(phone: &PhoneNode, frame: &Frame) -> Vec<PhoneAction> {
    match frame {
        Frame::EmergencyBroadcast {
            fingerprint,
            events,
        } => vec![
            PhoneAction::ForwardToEmergencyCenter(Frame::SatelliteReport {
                fingerprint: *fingerprint,
                events: events.clone(),
            }),
            PhoneAction::AckToClusterHead(Frame::Ack {
                fingerprint: *fingerprint,
            }),
        ],
        Frame::DailyReport { fingerprint, .. } if phone.role == PhoneRole::Personal => vec![
            PhoneAction::ForwardToDatabase(frame.clone()),
            PhoneAction::AckToClusterHead(Frame::Ack {
                fingerprint: *fingerprint,
            }),
        ],
        Frame::Beacon { fingerprint } => vec![PhoneAction::AckToClusterHead(Frame::Ack {
            fingerprint: *fingerprint,
        })],
        _ => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_status_field, EventRecord, Fingerprint};
    use proptest::prelude::*;

    fn phone(id: u32, x: f64, role: PhoneRole) -> PhoneNode {
        PhoneNode {
            id,
            position: [x, 0.0],
            reachable: true,
            role,
        }
    }

    #[test]
    fn discovery_boundary_is_closed_at_the_radius() {
        let phones = vec![
            phone(1, 39.9, PhoneRole::Bystander),
            phone(2, 40.0, PhoneRole::Bystander),
            phone(3, 40.1, PhoneRole::Bystander),
        ];
        let found = discover_nearby(&phones, [0.0, 0.0], 40.0);
        let ids: Vec<u32> = found.iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![1, 2]);
    }

    #[test]
    fn unreachable_and_personal_phones_are_excluded() {
        let mut off = phone(1, 10.0, PhoneRole::Bystander);
        off.reachable = false;
        let phones = vec![off, phone(2, 5.0, PhoneRole::Personal)];
        assert!(discover_nearby(&phones, [0.0, 0.0], 40.0).is_empty());
    }

    #[test]
    fn discovery_orders_by_distance_then_id() {
        let phones = vec![
            phone(9, 20.0, PhoneRole::Bystander),
            phone(3, 20.0, PhoneRole::Bystander),
            phone(5, 10.0, PhoneRole::Bystander),
        ];
        let ids: Vec<u32> = discover_nearby(&phones, [0.0, 0.0], 40.0)
            .iter()
            .map(|p| p.id)
            .collect();
        assert_eq!(ids, vec![5, 3, 9]);
    }

    fn broadcast() -> Frame {
        Frame::EmergencyBroadcast {
            fingerprint: Fingerprint(12),
            events: vec![EventRecord {
                sensor_index: 1,
                qvalue: 99,
                t_offset_ms: 4,
            }],
        }
    }

    #[test]
    fn bystander_forwards_and_acks_an_emergency_broadcast() {
        let b = phone(4, 20.0, PhoneRole::Bystander);
        let actions = phone_on_receive(&b, &broadcast());
        assert_eq!(actions.len(), 2);
        match &actions[0] {
            PhoneAction::ForwardToEmergencyCenter(Frame::SatelliteReport {
                fingerprint,
                events,
            }) => {
                assert_eq!(*fingerprint, Fingerprint(12));
                assert_eq!(events.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            actions[1],
            PhoneAction::AckToClusterHead(Frame::Ack {
                fingerprint: Fingerprint(12)
            })
        );
    }

    #[test]
    fn personal_phone_forwards_daily_report_to_database() {
        let p = phone(1, 1.0, PhoneRole::Personal);
        let report = Frame::DailyReport {
            fingerprint: Fingerprint(12),
            status: build_status_field(&[true; 4]),
            events: vec![],
        };
        let actions = phone_on_receive(&p, &report);
        assert_eq!(actions.len(), 2);
        assert!(matches!(
            &actions[0],
            PhoneAction::ForwardToDatabase(Frame::DailyReport { .. })
        ));
        assert!(matches!(&actions[1], PhoneAction::AckToClusterHead(_)));

        // A bystander ignores a daily report.
        let b = phone(2, 20.0, PhoneRole::Bystander);
        assert!(phone_on_receive(&b, &report).is_empty());
    }

    #[test]
    fn acks_terminate_at_phones() {
        let b = phone(4, 20.0, PhoneRole::Bystander);
        let ack = Frame::Ack {
            fingerprint: Fingerprint(12),
        };
        assert!(phone_on_receive(&b, &ack).is_empty());
    }

    #[test]
    fn beacon_is_acked_only() {
        let p = phone(1, 1.0, PhoneRole::Personal);
        let actions = phone_on_receive(
            &p,
            &Frame::Beacon {
                fingerprint: Fingerprint(3),
            },
        );
        assert_eq!(
            actions,
            vec![PhoneAction::AckToClusterHead(Frame::Ack {
                fingerprint: Fingerprint(3)
            })]
        );
    }

    proptest! {
        /// Identical phone sets give identical ordered results regardless of
        /// input order.
        #[test]
        fn discovery_is_deterministic_under_shuffling(
            xs in proptest::collection::vec((0.0f64..80.0, 0.0f64..80.0), 1..12),
            rotate in any::<usize>(),
        ) {
            let phones: Vec<PhoneNode> = xs
                .iter()
                .enumerate()
                .map(|(i, (x, y))| PhoneNode {
                    id: i as u32,
                    position: [*x, *y],
                    reachable: true,
                    role: PhoneRole::Bystander,
                })
                .collect();
            let mut shuffled = phones.clone();
            shuffled.rotate_left(rotate % phones.len().max(1));
            let a = discover_nearby(&phones, [40.0, 40.0], 40.0);
            let b = discover_nearby(&shuffled, [40.0, 40.0], 40.0);
            prop_assert_eq!(a, b);
        }
    }
}
