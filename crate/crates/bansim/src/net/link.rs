//! Loss/latency/energy channel models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::time::{VirtualDuration, VirtualTime};

/// Which radio a frame rides. Energy costs are configured per kind; the
/// defaults order them personal < nearby broadcast < satellite, with
/// internal (wired/Internet) legs free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Personal,
    NearbyBroadcast,
    Satellite,
    Internal,
}

impl LinkKind {
    pub fn name(&self) -> &'static str {
        match self {
            LinkKind::Personal => "personal",
            LinkKind::NearbyBroadcast => "nearby_broadcast",
            LinkKind::Satellite => "satellite",
            LinkKind::Internal => "internal",
        }
    }
}

/// One direction of a channel: delivery probability, base latency with
/// uniform jitter, and the energy the sender spends per transmitted frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub delivery_prob: f64,
    pub latency_base_ms: u64,
    #[serde(default)]
    pub latency_jitter_ms: u64,
    pub energy_cost: f64,
}

impl LinkModel {
    /// Perfect instantaneous free link; useful in tests.
    pub fn ideal() -> Self {
        LinkModel {
            delivery_prob: 1.0,
            latency_base_ms: 0,
            latency_jitter_ms: 0,
            energy_cost: 0.0,
        }
    }

    /// Violations of the link invariants, as human-readable strings.
    pub fn violations(&self, label: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.delivery_prob) {
            out.push(format!(
                "link {label}: delivery_prob {} outside [0, 1]",
                self.delivery_prob
            ));
        }
        if self.latency_jitter_ms > self.latency_base_ms {
            out.push(format!(
                "link {label}: latency_jitter_ms {} exceeds latency_base_ms {} (latency could go negative)",
                self.latency_jitter_ms, self.latency_base_ms
            ));
        }
        if !self.energy_cost.is_finite() || self.energy_cost < 0.0 {
            out.push(format!(
                "link {label}: energy_cost {} must be finite and nonnegative",
                self.energy_cost
            ));
        }
        out
    }
}

/// A frame in flight: what was sent, when, and when it lands.
#[derive(Clone, Debug, PartialEq)]
pub struct DeliveryEvent {
    pub bytes: Vec<u8>,
    pub send_time: VirtualTime,
    pub arrive_time: VirtualTime,
    pub energy_spent: f64,
}

/// Realizes one transmission over `link`. With probability `delivery_prob`
/// the frame arrives after `base ± uniform(jitter)` milliseconds; otherwise
/// it is lost. The sender's energy is spent either way.
pub fn transmit<R: Rng>(
    link: &LinkModel,
    bytes: &[u8],
    now: VirtualTime,
    rng: &mut R,
) -> Option<DeliveryEvent> {
    let delivered = link.delivery_prob > 0.0
        && (link.delivery_prob >= 1.0 || rng.random_bool(link.delivery_prob));
    if !delivered {
        return None;
    }
    let latency = if link.latency_jitter_ms == 0 {
        link.latency_base_ms
    } else {
        let jitter = link.latency_jitter_ms as i64;
        let offset = rng.random_range(-jitter..=jitter);
        (link.latency_base_ms as i64 + offset).max(0) as u64
    };
    Some(DeliveryEvent {
        bytes: bytes.to_vec(),
        send_time: now,
        arrive_time: now + VirtualDuration::from_millis(latency),
        energy_spent: link.energy_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(99)
    }

    #[test]
    fn sure_link_always_delivers_on_time() {
        let link = LinkModel {
            delivery_prob: 1.0,
            latency_base_ms: 10,
            latency_jitter_ms: 0,
            energy_cost: 1.0,
        };
        let mut r = rng();
        for _ in 0..100 {
            let d = transmit(&link, &[1, 2, 3], VirtualTime::from_millis(500), &mut r).unwrap();
            assert_eq!(d.arrive_time, VirtualTime::from_millis(510));
            assert_eq!(d.bytes, vec![1, 2, 3]);
            assert_eq!(d.energy_spent, 1.0);
        }
    }

    #[test]
    fn dead_link_never_delivers() {
        let link = LinkModel {
            delivery_prob: 0.0,
            latency_base_ms: 10,
            latency_jitter_ms: 0,
            energy_cost: 2.0,
        };
        let mut r = rng();
        for _ in 0..100 {
            assert!(transmit(&link, &[0], VirtualTime::ZERO, &mut r).is_none());
        }
    }

    #[test]
    fn half_link_delivers_about_half() {
        let link = LinkModel {
            delivery_prob: 0.5,
            latency_base_ms: 10,
            latency_jitter_ms: 5,
            energy_cost: 1.0,
        };
        let mut r = rng();
        let trials = 10_000;
        let mut delivered = 0;
        for _ in 0..trials {
            if transmit(&link, &[0], VirtualTime::ZERO, &mut r).is_some() {
                delivered += 1;
            }
        }
        let rate = delivered as f64 / trials as f64;
        assert!((rate - 0.5).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn jitter_stays_within_bounds_and_never_goes_negative() {
        let link = LinkModel {
            delivery_prob: 1.0,
            latency_base_ms: 10,
            latency_jitter_ms: 10,
            energy_cost: 0.0,
        };
        let mut r = rng();
        let mut seen_low = false;
        let mut seen_high = false;
        for _ in 0..2_000 {
            let d = transmit(&link, &[0], VirtualTime::ZERO, &mut r).unwrap();
            let latency = d.arrive_time.as_millis();
            assert!(latency <= 20, "latency {latency}");
            if latency < 5 {
                seen_low = true;
            }
            if latency > 15 {
                seen_high = true;
            }
        }
        assert!(seen_low && seen_high, "jitter did not spread");
    }

    #[test]
    fn invariant_violations_are_reported() {
        let bad = LinkModel {
            delivery_prob: 1.5,
            latency_base_ms: 5,
            latency_jitter_ms: 10,
            energy_cost: -1.0,
        };
        let v = bad.violations("test");
        assert_eq!(v.len(), 3);
        assert!(LinkModel::ideal().violations("ok").is_empty());
    }
}
