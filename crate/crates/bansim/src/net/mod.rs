//! Simulated communication endpoints and channels: the personal phone,
//! bystander phones discovered within a radius, the emergency center and
//! hospital database sinks, and the satellite uplink. Channels lose frames
//! and delay them; they never corrupt payloads in flight.

mod link;
mod phone;
mod sink;

pub use link::{transmit, DeliveryEvent, LinkKind, LinkModel};
pub use phone::{discover_nearby, phone_on_receive, PhoneAction, PhoneNode, PhoneRole};
pub use sink::{database_on_receive, SinkAction};

/// Default discovery radius for nearby phones, in meters.
pub const DEFAULT_BROADCAST_RADIUS_M: f64 = 40.0;
