//! Bit-exact encoding and decoding of the on-air frame formats.
//!
//! Every frame is laid out big-endian as `[1-byte tag][body][2-byte CRC]`
//! with the CRC-16/CCITT-FALSE trailer covering tag and body:
//!
//! ```text
//! tag    frame               body
//! ────   ─────────────────   ─────────────────────────────────────────────
//! 0x01   Beacon              [8B fingerprint]
//! 0x02   DailyReport         [8B fingerprint][1B n_sensors][status bytes]
//!                            [2B event count][7B events...]
//! 0x03   EmergencyBroadcast  [1B 0xEB marker][8B fingerprint]
//!                            [2B event count][7B events...]
//! 0x04   SatelliteReport     [8B fingerprint][2B event count][7B events...]
//! 0x05   Ack                 [8B fingerprint]
//! ```
//!
//! An event record is `[1B sensor index][2B quantized value][4B ms offset]`.
//! Status bytes pack sensor 0 at the MSB of the first byte. Decoding is
//! total: any byte sequence yields either a frame or a structured error.

mod crc;
mod quant;
mod status;

pub use crc::crc16;
pub use quant::{dequantize, quantize, QuantSpec};
pub use status::{build_status_field, SensorStatusField};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker byte opening an emergency broadcast body.
pub const EMERGENCY_MARKER: u8 = 0xEB;

const TAG_BEACON: u8 = 0x01;
const TAG_DAILY_REPORT: u8 = 0x02;
const TAG_EMERGENCY_BROADCAST: u8 = 0x03;
const TAG_SATELLITE_REPORT: u8 = 0x04;
const TAG_ACK: u8 = 0x05;

/// Errors raised while encoding or decoding frames.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("input truncated: needed {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("trailing garbage: frame ends at byte {expected} but input has {got}")]
    TrailingBytes { expected: usize, got: usize },
    #[error("unknown frame tag 0x{tag:02X}")]
    UnknownTag { tag: u8 },
    #[error("checksum mismatch: stored 0x{stored:04X}, computed 0x{computed:04X}")]
    ChecksumMismatch { stored: u16, computed: u16 },
    #[error("fingerprint must be nonzero")]
    ZeroFingerprint,
    #[error("status field has {got} bits but {expected} sensors are configured")]
    StatusLengthMismatch { expected: usize, got: usize },
    #[error("frame declares {declared} sensors but {configured} are configured")]
    SensorCountMismatch { declared: usize, configured: usize },
    #[error("status padding bits must be zero")]
    NonZeroStatusPadding,
    #[error("event sensor index {index} out of range for {count} sensors")]
    SensorIndexOutOfRange { index: usize, count: usize },
    #[error("event qvalue {qvalue} does not fit in {bits} bits")]
    QvalueOutOfRange { qvalue: u16, bits: u8 },
    #[error("emergency marker byte is 0x{got:02X}, expected 0x{expected:02X}")]
    BadEmergencyMarker { got: u8, expected: u8 },
    #[error("quantization range [{lo}, {hi}] is not a valid interval")]
    InvalidQuantRange { lo: f64, hi: f64 },
    #[error("quantization bit width {bits} outside 1..=16")]
    InvalidQuantBits { bits: u8 },
}

/// Opaque nonzero patient identifier carried by every frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(pub u64);

impl Fingerprint {
    pub fn as_u64(self) -> u64 {
        self.0
    }

    fn check(self) -> Result<u64, CodecError> {
        if self.0 == 0 {
            Err(CodecError::ZeroFingerprint)
        } else {
            Ok(self.0)
        }
    }
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}

/// One undesirable-event record: which sensor crossed its threshold, the
/// quantized reading, and when it happened relative to the frame epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub sensor_index: u8,
    pub qvalue: u16,
    pub t_offset_ms: u32,
}

/// The frame vocabulary. Identity beacons and acks carry only the
/// fingerprint; report frames add status and event payloads. Checksums are
/// computed on encode and verified on decode, never stored here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case")]
pub enum Frame {
    Beacon {
        fingerprint: Fingerprint,
    },
    DailyReport {
        fingerprint: Fingerprint,
        status: SensorStatusField,
        events: Vec<EventRecord>,
    },
    EmergencyBroadcast {
        fingerprint: Fingerprint,
        events: Vec<EventRecord>,
    },
    SatelliteReport {
        fingerprint: Fingerprint,
        events: Vec<EventRecord>,
    },
    Ack {
        fingerprint: Fingerprint,
    },
}

impl Frame {
    pub fn fingerprint(&self) -> Fingerprint {
        match self {
            Frame::Beacon { fingerprint }
            | Frame::DailyReport { fingerprint, .. }
            | Frame::EmergencyBroadcast { fingerprint, .. }
            | Frame::SatelliteReport { fingerprint, .. }
            | Frame::Ack { fingerprint } => *fingerprint,
        }
    }

    /// Short lowercase name used in traces and summaries.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Frame::Beacon { .. } => "beacon",
            Frame::DailyReport { .. } => "daily_report",
            Frame::EmergencyBroadcast { .. } => "emergency_broadcast",
            Frame::SatelliteReport { .. } => "satellite_report",
            Frame::Ack { .. } => "ack",
        }
    }
}

fn check_events(events: &[EventRecord], specs: &[QuantSpec]) -> Result<(), CodecError> {
    if events.len() > u16::MAX as usize {
        return Err(CodecError::Truncated {
            needed: u16::MAX as usize,
            got: events.len(),
        });
    }
    for ev in events {
        let idx = ev.sensor_index as usize;
        let spec = specs.get(idx).ok_or(CodecError::SensorIndexOutOfRange {
            index: idx,
            count: specs.len(),
        })?;
        if ev.qvalue > spec.max_code() {
            return Err(CodecError::QvalueOutOfRange {
                qvalue: ev.qvalue,
                bits: spec.bits,
            });
        }
    }
    Ok(())
}

fn push_events(out: &mut Vec<u8>, events: &[EventRecord]) {
    out.extend_from_slice(&(events.len() as u16).to_be_bytes());
    for ev in events {
        out.push(ev.sensor_index);
        out.extend_from_slice(&ev.qvalue.to_be_bytes());
        out.extend_from_slice(&ev.t_offset_ms.to_be_bytes());
    }
}

/// Encodes a frame into its wire bytes, computing the CRC trailer.
/// Malformed frames (zero fingerprint, status length mismatch, event value
/// overflow) are rejected with an error naming the offending field.
pub fn encode_frame(frame: &Frame, specs: &[QuantSpec]) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    match frame {
        Frame::Beacon { fingerprint } => {
            out.push(TAG_BEACON);
            out.extend_from_slice(&fingerprint.check()?.to_be_bytes());
        }
        Frame::Ack { fingerprint } => {
            out.push(TAG_ACK);
            out.extend_from_slice(&fingerprint.check()?.to_be_bytes());
        }
        Frame::DailyReport {
            fingerprint,
            status,
            events,
        } => {
            if status.len() != specs.len() {
                return Err(CodecError::StatusLengthMismatch {
                    expected: specs.len(),
                    got: status.len(),
                });
            }
            check_events(events, specs)?;
            out.push(TAG_DAILY_REPORT);
            out.extend_from_slice(&fingerprint.check()?.to_be_bytes());
            out.push(status.len() as u8);
            out.extend_from_slice(&status.pack());
            push_events(&mut out, events);
        }
        Frame::EmergencyBroadcast {
            fingerprint,
            events,
        } => {
            check_events(events, specs)?;
            out.push(TAG_EMERGENCY_BROADCAST);
            out.push(EMERGENCY_MARKER);
            out.extend_from_slice(&fingerprint.check()?.to_be_bytes());
            push_events(&mut out, events);
        }
        Frame::SatelliteReport {
            fingerprint,
            events,
        } => {
            check_events(events, specs)?;
            out.push(TAG_SATELLITE_REPORT);
            out.extend_from_slice(&fingerprint.check()?.to_be_bytes());
            push_events(&mut out, events);
        }
    }
    let checksum = crc16(&out);
    out.extend_from_slice(&checksum.to_be_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.pos + n > self.bytes.len() {
            return Err(CodecError::Truncated {
                needed: self.pos + n,
                got: self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes(b.try_into().unwrap()))
    }
}

fn read_fingerprint(r: &mut Reader<'_>) -> Result<Fingerprint, CodecError> {
    let raw = r.u64()?;
    if raw == 0 {
        return Err(CodecError::ZeroFingerprint);
    }
    Ok(Fingerprint(raw))
}

fn read_events(r: &mut Reader<'_>, specs: &[QuantSpec]) -> Result<Vec<EventRecord>, CodecError> {
    let count = r.u16()? as usize;
    let mut events = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let sensor_index = r.u8()?;
        let qvalue = r.u16()?;
        let t_offset_ms = r.u32()?;
        let idx = sensor_index as usize;
        let spec = specs.get(idx).ok_or(CodecError::SensorIndexOutOfRange {
            index: idx,
            count: specs.len(),
        })?;
        if qvalue > spec.max_code() {
            return Err(CodecError::QvalueOutOfRange {
                qvalue,
                bits: spec.bits,
            });
        }
        events.push(EventRecord {
            sensor_index,
            qvalue,
            t_offset_ms,
        });
    }
    Ok(events)
}

/// Decodes wire bytes back into a frame, verifying structure and the CRC
/// trailer against the configured sensor table. Never panics on malformed
/// input.
pub fn decode_frame(bytes: &[u8], specs: &[QuantSpec]) -> Result<Frame, CodecError> {
    // Tag + CRC is the absolute minimum.
    if bytes.len() < 3 {
        return Err(CodecError::Truncated {
            needed: 3,
            got: bytes.len(),
        });
    }
    let tag = bytes[0];
    match tag {
        TAG_BEACON | TAG_DAILY_REPORT | TAG_EMERGENCY_BROADCAST | TAG_SATELLITE_REPORT
        | TAG_ACK => {}
        _ => return Err(CodecError::UnknownTag { tag }),
    }

    let body_end = bytes.len() - 2;
    let stored = u16::from_be_bytes([bytes[body_end], bytes[body_end + 1]]);
    let computed = crc16(&bytes[..body_end]);
    if stored != computed {
        return Err(CodecError::ChecksumMismatch { stored, computed });
    }

    let mut r = Reader {
        bytes: &bytes[..body_end],
        pos: 1,
    };
    let frame = match tag {
        TAG_BEACON => Frame::Beacon {
            fingerprint: read_fingerprint(&mut r)?,
        },
        TAG_ACK => Frame::Ack {
            fingerprint: read_fingerprint(&mut r)?,
        },
        TAG_DAILY_REPORT => {
            let fingerprint = read_fingerprint(&mut r)?;
            let declared = r.u8()? as usize;
            if declared != specs.len() {
                return Err(CodecError::SensorCountMismatch {
                    declared,
                    configured: specs.len(),
                });
            }
            let status_bytes = r.take(declared.div_ceil(8))?;
            let status = SensorStatusField::unpack(status_bytes, declared)?;
            let events = read_events(&mut r, specs)?;
            Frame::DailyReport {
                fingerprint,
                status,
                events,
            }
        }
        TAG_EMERGENCY_BROADCAST => {
            let marker = r.u8()?;
            if marker != EMERGENCY_MARKER {
                return Err(CodecError::BadEmergencyMarker {
                    got: marker,
                    expected: EMERGENCY_MARKER,
                });
            }
            let fingerprint = read_fingerprint(&mut r)?;
            let events = read_events(&mut r, specs)?;
            Frame::EmergencyBroadcast {
                fingerprint,
                events,
            }
        }
        TAG_SATELLITE_REPORT => {
            let fingerprint = read_fingerprint(&mut r)?;
            let events = read_events(&mut r, specs)?;
            Frame::SatelliteReport {
                fingerprint,
                events,
            }
        }
        _ => unreachable!("tag validated above"),
    };

    if r.pos != body_end {
        return Err(CodecError::TrailingBytes {
            expected: r.pos + 2,
            got: bytes.len(),
        });
    }
    Ok(frame)
}
