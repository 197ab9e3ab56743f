//! Fixed-width quantization of vital-sign readings.
//!
//! Each sensor maps its physical range onto an unsigned integer of a
//! configurable bit width before the value goes on the wire.

use serde::{Deserialize, Serialize};

use super::CodecError;

/// Quantization parameters for one sensor: the physical range it can report
/// and the number of bits it spends per reading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantSpec {
    pub lo: f64,
    pub hi: f64,
    pub bits: u8,
}

impl QuantSpec {
    /// Builds a spec, rejecting inverted ranges and bit widths outside 1..=16.
    pub fn new(lo: f64, hi: f64, bits: u8) -> Result<Self, CodecError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CodecError::InvalidQuantRange { lo, hi });
        }
        if bits == 0 || bits > 16 {
            return Err(CodecError::InvalidQuantBits { bits });
        }
        Ok(QuantSpec { lo, hi, bits })
    }

    /// Largest code point: 2^bits - 1.
    pub fn max_code(&self) -> u16 {
        if self.bits == 16 {
            u16::MAX
        } else {
            (1u16 << self.bits) - 1
        }
    }

    /// Physical width of one code step.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.max_code() as f64
    }
}

/// Maps a reading onto the sensor's code space. Out-of-range values clamp to
/// the nearest bound; whether clamping happened is the caller's business.
/// Ties round away from zero.
pub fn quantize(v: f64, spec: &QuantSpec) -> u16 {
    let clamped = v.clamp(spec.lo, spec.hi);
    let scaled = (clamped - spec.lo) / (spec.hi - spec.lo) * spec.max_code() as f64;
    scaled.round() as u16
}

/// Inverse of [`quantize`] up to the quantization step.
pub fn dequantize(q: u16, spec: &QuantSpec) -> Result<f64, CodecError> {
    if q > spec.max_code() {
        return Err(CodecError::QvalueOutOfRange {
            qvalue: q,
            bits: spec.bits,
        });
    }
    Ok(spec.lo + q as f64 / spec.max_code() as f64 * (spec.hi - spec.lo))
}
