//! Bit-exact Sigfox frame codec and the WaterS application payloads.

mod bits;
mod downlink;
mod ecc;
mod fcs;
mod mac;
mod payload;
mod uplink;

use thiserror::Error;

pub use bits::{flip_bit, from_bit_str, from_hex, push_uint, read_uint, to_bit_str, to_bytes, to_hex, Bits, BitsRef};
pub use downlink::{
    decode_downlink_frame, decode_downlink_hex, downlink_frame_len, encode_downlink_frame, DownlinkFrame,
    QUOTED_FRAME_BITS as DOWNLINK_QUOTED_FRAME_BITS,
};
pub use ecc::{correct as ecc_correct, encode_ecc, Corrected, Uncorrectable, ECC_BITS};
pub use fcs::compute_fcs;
pub use mac::{compute_mac, MacKey, MAC_LENGTHS};
pub use payload::{
    pack_gps_payload, pack_sensor_payload, ph_from_raw, ph_to_raw, turbidity_to_raw, unpack_gps_payload,
    unpack_sensor_payload, FrameType, GpsPayload, SensorPayload, PAYLOAD_BITS,
};
pub use uplink::{
    decode_uplink_frame, decode_uplink_hex, encode_uplink_frame, uplink_frame_len, UplinkFrame, UplinkRequest,
    MAX_FRAME_BITS as UPLINK_MAX_FRAME_BITS, MAX_PAYLOAD_BITS as UPLINK_MAX_PAYLOAD_BITS, MAX_SEQUENCE,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("WrongLength: expected {expected} bits, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("PayloadTooLong: payload of {actual} bits exceeds {max}")]
    PayloadTooLong { max: usize, actual: usize },
    #[error("BadMacLength: {0} bits is not one of 16, 24, 32, 40")]
    BadMacLength(usize),
    #[error("SequenceOutOfRange: {0} does not fit in 12 bits")]
    SequenceOutOfRange(u16),
    #[error("OutOfRange: {0}")]
    OutOfRange(String),
    #[error("BadPreamble: preamble pattern not found")]
    BadPreamble,
    #[error("BadSync: unknown frame synchronization marker")]
    BadSync,
    #[error("BadFcs: received {received:#06x}, computed {computed:#06x}")]
    BadFcs { received: u16, computed: u16 },
    #[error("BadMac: authentication tag mismatch")]
    BadMac,
    #[error("BadEcc: uncorrectable error in payload block {block}")]
    BadEcc { block: usize },
    #[error("Truncated: need {needed} bits, got {actual}")]
    Truncated { needed: usize, actual: usize },
    #[error("LengthMismatch: header implies {header} bits, frame has {actual}")]
    LengthMismatch { header: usize, actual: usize },
    #[error("BadHex: {0}")]
    BadHex(String),
    #[error("BadKey: {0}")]
    BadKey(String),
}

impl CodecError {
    /// Stable error name, used in diagnostics and machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            CodecError::WrongLength { .. } => "WrongLength",
            CodecError::PayloadTooLong { .. } => "PayloadTooLong",
            CodecError::BadMacLength(_) => "BadMacLength",
            CodecError::SequenceOutOfRange(_) => "SequenceOutOfRange",
            CodecError::OutOfRange(_) => "OutOfRange",
            CodecError::BadPreamble => "BadPreamble",
            CodecError::BadSync => "BadSync",
            CodecError::BadFcs { .. } => "BadFcs",
            CodecError::BadMac => "BadMac",
            CodecError::BadEcc { .. } => "BadEcc",
            CodecError::Truncated { .. } => "Truncated",
            CodecError::LengthMismatch { .. } => "LengthMismatch",
            CodecError::BadHex(_) => "BadHex",
            CodecError::BadKey(_) => "BadKey",
        }
    }
}
