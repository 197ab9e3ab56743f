//! CRC-16/CCITT-FALSE frame trailer.
//!
//! Polynomial 0x1021, initial register 0xFFFF, no bit reflection, no final
//! xor. Every frame closes with this checksum over the tag and body bytes.

const POLY: u16 = 0x1021;
const INIT: u16 = 0xFFFF;

const fn build_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u16) << 8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ POLY
            } else {
                crc << 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static TABLE: [u16; 256] = build_table();

/// CRC-16/CCITT-FALSE over `bytes`. Empty input leaves the register at its
/// initial value 0xFFFF.
pub fn crc16(bytes: &[u8]) -> u16 {
    bytes.iter().fold(INIT, |crc, &b| {
        (crc << 8) ^ TABLE[(((crc >> 8) ^ b as u16) & 0xFF) as usize]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent bit-serial long-division oracle: shifts the message through
    /// a 16-bit register one bit at a time. Kept separate from the table-driven
    /// implementation above so the two can cross-check each other.
    fn crc16_bitwise(bytes: &[u8]) -> u16 {
        let mut reg = INIT;
        for &byte in bytes {
            reg ^= (byte as u16) << 8;
            for _ in 0..8 {
                reg = if reg & 0x8000 != 0 {
                    (reg << 1) ^ POLY
                } else {
                    reg << 1
                };
            }
        }
        reg
    }

    #[test]
    fn empty_input_keeps_initial_register() {
        assert_eq!(crc16(&[]), 0xFFFF);
        assert_eq!(crc16_bitwise(&[]), 0xFFFF);
    }

    #[test]
    fn check_string_matches_bitwise_oracle() {
        // Frozen from the bit-serial oracle over the ASCII digits "123456789".
        let oracle = crc16_bitwise(b"123456789");
        assert_eq!(oracle, 0x29B1);
        assert_eq!(crc16(b"123456789"), oracle);
    }

    #[test]
    fn single_bit_flip_always_changes_checksum() {
        let data = b"body area network frame";
        let base = crc16(data);
        for byte_idx in 0..data.len() {
            for bit in 0..8 {
                let mut corrupted = data.to_vec();
                corrupted[byte_idx] ^= 1 << bit;
                assert_ne!(
                    crc16(&corrupted),
                    base,
                    "flip at byte {byte_idx} bit {bit} went undetected"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn table_driven_matches_bitwise_oracle(data in proptest::collection::vec(any::<u8>(), 0..512)) {
            prop_assert_eq!(crc16(&data), crc16_bitwise(&data));
        }

        #[test]
        fn any_single_bit_flip_detected(
            data in proptest::collection::vec(any::<u8>(), 1..128),
            idx in any::<usize>(),
            bit in 0u8..8,
        ) {
            let idx = idx % data.len();
            let mut corrupted = data.clone();
            corrupted[idx] ^= 1 << bit;
            prop_assert_ne!(crc16(&corrupted), crc16(&data));
        }
    }
}
