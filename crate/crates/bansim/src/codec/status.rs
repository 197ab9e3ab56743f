//! Per-sensor agreement bit vector carried in daily reports.
//!
//! Bit i is 1 when sensor i's predicted value agreed with its sensed value
//! and 0 on conflict. The field renders with sensor index 0 leftmost, so a
//! ten-sensor body with a single conflict at index 5 displays as
//! `1111101111`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::CodecError;

/// Ordered agreement flags, one per sensor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorStatusField {
    bits: Vec<bool>,
}

/// Builds the status field from per-sensor agreement verdicts.
pub fn build_status_field(verdicts: &[bool]) -> SensorStatusField {
    SensorStatusField {
        bits: verdicts.to_vec(),
    }
}

impl SensorStatusField {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Agreement flag for sensor `index`.
    pub fn agrees(&self, index: usize) -> bool {
        self.bits[index]
    }

    /// Indices of sensors whose bit is zero (prediction conflict).
    pub fn conflict_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (!b).then_some(i))
            .collect()
    }

    /// Packs into wire bytes, sensor 0 at the most significant bit of the
    /// first byte; trailing pad bits are zero.
    pub fn pack(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &bit) in self.bits.iter().enumerate() {
            if bit {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        bytes
    }

    /// Unpacks `n_sensors` flags from wire bytes, rejecting short buffers and
    /// nonzero padding so the encoding stays canonical.
    pub fn unpack(bytes: &[u8], n_sensors: usize) -> Result<Self, CodecError> {
        let needed = n_sensors.div_ceil(8);
        if bytes.len() != needed {
            return Err(CodecError::Truncated {
                needed,
                got: bytes.len(),
            });
        }
        let mut bits = Vec::with_capacity(n_sensors);
        for i in 0..n_sensors {
            bits.push(bytes[i / 8] & (0x80 >> (i % 8)) != 0);
        }
        for i in n_sensors..needed * 8 {
            if bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                return Err(CodecError::NonZeroStatusPadding);
            }
        }
        Ok(SensorStatusField { bits })
    }
}

impl fmt::Display for SensorStatusField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.bits {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_agree_renders_all_ones() {
        let field = build_status_field(&[true; 10]);
        assert_eq!(field.to_string(), "1111111111");
    }

    #[test]
    fn conflict_at_index_four_renders_fifth_char_zero() {
        let mut verdicts = [true; 10];
        verdicts[4] = false;
        assert_eq!(build_status_field(&verdicts).to_string(), "1111011111");
    }

    #[test]
    fn conflict_at_index_five_reproduces_reference_pattern() {
        let mut verdicts = [true; 10];
        verdicts[5] = false;
        let field = build_status_field(&verdicts);
        assert_eq!(field.to_string(), "1111101111");
        assert_eq!(field.conflict_indices(), vec![5]);
    }

    #[test]
    fn all_conflict_renders_all_zeros() {
        let field = build_status_field(&[false; 10]);
        assert_eq!(field.to_string(), "0000000000");
    }

    #[test]
    fn packing_puts_sensor_zero_at_msb() {
        let mut verdicts = [false; 10];
        verdicts[0] = true;
        assert_eq!(build_status_field(&verdicts).pack(), vec![0x80, 0x00]);
        verdicts[0] = false;
        verdicts[9] = true;
        assert_eq!(build_status_field(&verdicts).pack(), vec![0x00, 0x40]);
    }

    #[test]
    fn unpack_rejects_nonzero_padding() {
        // 10 sensors leave 6 pad bits in the second byte.
        assert!(matches!(
            SensorStatusField::unpack(&[0xFF, 0xC1], 10),
            Err(CodecError::NonZeroStatusPadding)
        ));
        assert!(SensorStatusField::unpack(&[0xFF, 0xC0], 10).is_ok());
    }

    proptest! {
        #[test]
        fn flipping_verdict_i_flips_exactly_bit_i(
            verdicts in proptest::collection::vec(any::<bool>(), 1..40),
            idx in any::<usize>(),
        ) {
            let idx = idx % verdicts.len();
            let base = build_status_field(&verdicts).to_string();
            let mut flipped = verdicts.clone();
            flipped[idx] = !flipped[idx];
            let changed = build_status_field(&flipped).to_string();
            for (i, (a, b)) in base.chars().zip(changed.chars()).enumerate() {
                if i == idx {
                    prop_assert_ne!(a, b);
                } else {
                    prop_assert_eq!(a, b);
                }
            }
        }

        #[test]
        fn pack_unpack_round_trips(verdicts in proptest::collection::vec(any::<bool>(), 1..40)) {
            let field = build_status_field(&verdicts);
            let back = SensorStatusField::unpack(&field.pack(), verdicts.len()).unwrap();
            prop_assert_eq!(back, field);
        }
    }
}
