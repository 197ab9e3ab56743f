//! Millisecond-resolution virtual clock shared by the protocol state machines
//! and the simulation engine.
//!
//! All protocol timers are measured against this clock, never wall time.
//! One tick is one millisecond; a `u64` tick counter spans far beyond the
//! multi-day horizons the simulator needs.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// A point on the virtual timeline, in milliseconds since run start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
pub struct VirtualTime(u64);

/// A span of virtual time, in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
pub struct VirtualDuration(u64);

impl VirtualTime {
    pub const ZERO: VirtualTime = VirtualTime(0);

    pub const fn from_millis(ms: u64) -> Self {
        VirtualTime(ms)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    /// Elapsed span since `earlier`. Panics if `earlier` is in the future;
    /// the engine only ever measures forward.
    pub fn since(self, earlier: VirtualTime) -> VirtualDuration {
        assert!(
            earlier.0 <= self.0,
            "time went backwards: {earlier} is after {self}"
        );
        VirtualDuration(self.0 - earlier.0)
    }

    /// True when this instant lies on a multiple of `period`.
    pub fn is_multiple_of(self, period: VirtualDuration) -> bool {
        period.0 != 0 && self.0 % period.0 == 0
    }
}

impl VirtualDuration {
    pub const ZERO: VirtualDuration = VirtualDuration(0);

    pub const fn from_millis(ms: u64) -> Self {
        VirtualDuration(ms)
    }

    pub const fn from_secs(s: u64) -> Self {
        VirtualDuration(s * 1_000)
    }

    pub const fn from_minutes(m: u64) -> Self {
        VirtualDuration(m * 60_000)
    }

    pub const fn from_hours(h: u64) -> Self {
        VirtualDuration(h * 3_600_000)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add<VirtualDuration> for VirtualTime {
    type Output = VirtualTime;

    fn add(self, rhs: VirtualDuration) -> VirtualTime {
        VirtualTime(self.0 + rhs.0)
    }
}

impl AddAssign<VirtualDuration> for VirtualTime {
    fn add_assign(&mut self, rhs: VirtualDuration) {
        self.0 += rhs.0;
    }
}

impl Add for VirtualDuration {
    type Output = VirtualDuration;

    fn add(self, rhs: VirtualDuration) -> VirtualDuration {
        VirtualDuration(self.0 + rhs.0)
    }
}

impl Sub for VirtualDuration {
    type Output = VirtualDuration;

    fn sub(self, rhs: VirtualDuration) -> VirtualDuration {
        VirtualDuration(self.0.saturating_sub(rhs.0))
    }
}

impl fmt::Display for VirtualTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}ms", self.0)
    }
}

impl fmt::Display for VirtualDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_constructors_agree() {
        assert_eq!(VirtualDuration::from_secs(2).as_millis(), 2_000);
        assert_eq!(VirtualDuration::from_minutes(3).as_millis(), 180_000);
        assert_eq!(VirtualDuration::from_hours(24).as_millis(), 86_400_000);
    }

    #[test]
    fn a_week_fits_comfortably() {
        let week = VirtualDuration::from_hours(7 * 24);
        let t = VirtualTime::ZERO + week;
        assert_eq!(t.as_millis(), 604_800_000);
    }

    #[test]
    fn since_measures_forward() {
        let a = VirtualTime::from_millis(100);
        let b = VirtualTime::from_millis(250);
        assert_eq!(b.since(a), VirtualDuration::from_millis(150));
    }

    #[test]
    #[should_panic(expected = "time went backwards")]
    fn since_rejects_backwards() {
        let a = VirtualTime::from_millis(100);
        let _ = a.since(VirtualTime::from_millis(200));
    }

    #[test]
    fn multiples() {
        let hour = VirtualDuration::from_hours(1);
        assert!(VirtualTime::from_millis(7_200_000).is_multiple_of(hour));
        assert!(!VirtualTime::from_millis(7_200_001).is_multiple_of(hour));
        assert!(!VirtualTime::ZERO.is_multiple_of(VirtualDuration::ZERO));
    }
}
