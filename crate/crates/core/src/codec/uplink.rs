//! Uplink frame layout (MSB first):
//!
//! | field      | bits   | content                                             |
//! |------------|--------|-----------------------------------------------------|
//! | preamble   | 19     | `1010101010101010101`                               |
//! | frame_sync | 29     | marker(7) type(1) mac_code(2) payload_len(7) seq(12) |
//! | device_id  | 32     | unsigned                                            |
//! | payload    | 0..=96 | application data                                    |
//! | mac        | 16..=40| HMAC tag over device_id, seq and payload            |
//! | fcs        | 16     | CRC-16/CCITT-FALSE over every preceding bit         |
//!
//! The frame_sync marker is `1011001`; `mac_code` encodes the MAC width as
//! `(mac_len / 8) - 2`. Carrying the payload length in the header makes the
//! frame self-describing, so trailing byte padding can be stripped.

use serde::{Deserialize, Serialize};

use super::bits::{from_hex, push_uint, read_uint, Bits, BitsRef};
use super::fcs::compute_fcs;
use super::mac::{compute_mac, MacKey, MAC_LENGTHS};
use super::payload::FrameType;
use super::CodecError;

pub const PREAMBLE_BITS: usize = 19;
pub const SYNC_BITS: usize = 29;
pub const DEVICE_ID_BITS: usize = 32;
pub const MAX_PAYLOAD_BITS: usize = 96;
pub const FCS_BITS: usize = 16;
pub const SEQUENCE_BITS: usize = 12;
pub const MAX_SEQUENCE: u16 = (1 << SEQUENCE_BITS) - 1;
/// Length of a frame with a full payload and the widest MAC.
pub const MAX_FRAME_BITS: usize =
    PREAMBLE_BITS + SYNC_BITS + DEVICE_ID_BITS + MAX_PAYLOAD_BITS + 40 + FCS_BITS;

const PREAMBLE: u64 = 0b101_0101_0101_0101_0101;
const SYNC_MARKER: u64 = 0b101_1001;
const HEADER_BITS: usize = PREAMBLE_BITS + SYNC_BITS + DEVICE_ID_BITS;
const MIN_FRAME_BITS: usize = HEADER_BITS + 16 + FCS_BITS;

/// A parsed uplink frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UplinkFrame {
    pub device_id: u32,
    pub sequence_number: u16,
    pub frame_type: FrameType,
    pub payload: Bits,
    pub mac: Bits,
    pub fcs: u16,
}

/// Everything the encoder needs apart from the key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkRequest {
    pub device_id: u32,
    pub sequence_number: u16,
    pub frame_type: FrameType,
    #[serde(skip)]
    pub payload: Bits,
    pub mac_len: usize,
}

/// Total encoded length for a payload/MAC size pair.
pub fn uplink_frame_len(payload_bits: usize, mac_bits: usize) -> usize {
    HEADER_BITS + payload_bits + mac_bits + FCS_BITS
}

fn mac_input(device_id: u32, sequence_number: u16, payload: &BitsRef) -> Bits {
    let mut fields = Bits::with_capacity(DEVICE_ID_BITS + SEQUENCE_BITS + payload.len());
    push_uint(&mut fields, u64::from(device_id), DEVICE_ID_BITS);
    push_uint(&mut fields, u64::from(sequence_number), SEQUENCE_BITS);
    fields.extend_from_bitslice(payload);
    fields
}

pub fn encode_uplink_frame(request: &UplinkRequest, key: &MacKey) -> Result<Bits, CodecError> {
    if request.payload.len() > MAX_PAYLOAD_BITS {
        return Err(CodecError::PayloadTooLong {
            max: MAX_PAYLOAD_BITS,
            actual: request.payload.len(),
        });
    }
    if request.sequence_number > MAX_SEQUENCE {
        return Err(CodecError::SequenceOutOfRange(request.sequence_number));
    }
    if !MAC_LENGTHS.contains(&request.mac_len) {
        return Err(CodecError::BadMacLength(request.mac_len));
    }

    let mut bits = Bits::with_capacity(uplink_frame_len(request.payload.len(), request.mac_len));
    push_uint(&mut bits, PREAMBLE, PREAMBLE_BITS);
    push_uint(&mut bits, SYNC_MARKER, 7);
    bits.push(request.frame_type == FrameType::Gps);
    push_uint(&mut bits, (request.mac_len / 8 - 2) as u64, 2);
    push_uint(&mut bits, request.payload.len() as u64, 7);
    push_uint(&mut bits, u64::from(request.sequence_number), SEQUENCE_BITS);
    push_uint(&mut bits, u64::from(request.device_id), DEVICE_ID_BITS);
    bits.extend_from_bitslice(&request.payload);
    let tag = compute_mac(
        key,
        &mac_input(request.device_id, request.sequence_number, &request.payload),
        request.mac_len,
    )?;
    bits.extend_from_bitslice(&tag);
    let fcs = compute_fcs(&bits);
    push_uint(&mut bits, u64::from(fcs), FCS_BITS);
    Ok(bits)
}

/// Decodes an exact-length uplink frame.
///
/// Checks run in order: length, preamble, FCS, header consistency, MAC. The
/// FCS is the trailing 16 bits, so any single corrupted bit outside the
/// preamble is reported as [`CodecError::BadFcs`].
pub fn decode_uplink_frame(bits: &BitsRef, key: &MacKey) -> Result<UplinkFrame, CodecError> {
    if bits.len() < MIN_FRAME_BITS {
        return Err(CodecError::Truncated {
            needed: MIN_FRAME_BITS,
            actual: bits.len(),
        });
    }
    if read_uint(bits, 0, PREAMBLE_BITS) != PREAMBLE {
        return Err(CodecError::BadPreamble);
    }
    let body_len = bits.len() - FCS_BITS;
    let fcs = read_uint(bits, body_len, FCS_BITS) as u16;
    let expected_fcs = compute_fcs(&bits[..body_len]);
    if fcs != expected_fcs {
        return Err(CodecError::BadFcs {
            received: fcs,
            computed: expected_fcs,
        });
    }

    let header = parse_header(bits)?;
    let total = uplink_frame_len(header.payload_len, header.mac_len);
    if total != bits.len() {
        return Err(CodecError::LengthMismatch {
            header: total,
            actual: bits.len(),
        });
    }
    let payload_start = HEADER_BITS;
    let mac_start = payload_start + header.payload_len;
    let device_id = read_uint(bits, PREAMBLE_BITS + SYNC_BITS, DEVICE_ID_BITS) as u32;
    let payload = bits[payload_start..mac_start].to_bitvec();
    let mac = bits[mac_start..body_len].to_bitvec();
    let expected_mac = compute_mac(
        key,
        &mac_input(device_id, header.sequence_number, &payload),
        header.mac_len,
    )?;
    if mac != expected_mac {
        return Err(CodecError::BadMac);
    }
    Ok(UplinkFrame {
        device_id,
        sequence_number: header.sequence_number,
        frame_type: header.frame_type,
        payload,
        mac,
        fcs,
    })
}

/// Decodes a hex-encoded uplink frame, using the header to strip padding.
pub fn decode_uplink_hex(hex: &str, key: &MacKey) -> Result<UplinkFrame, CodecError> {
    let bits = from_hex(hex)?;
    if bits.len() < PREAMBLE_BITS + SYNC_BITS {
        return Err(CodecError::Truncated {
            needed: MIN_FRAME_BITS,
            actual: bits.len(),
        });
    }
    if read_uint(&bits, 0, PREAMBLE_BITS) != PREAMBLE {
        return Err(CodecError::BadPreamble);
    }
    let header = parse_header(&bits)?;
    let total = uplink_frame_len(header.payload_len, header.mac_len);
    if bits.len() < total {
        return Err(CodecError::Truncated {
            needed: total,
            actual: bits.len(),
        });
    }
    decode_uplink_frame(&bits[..total], key)
}

struct Header {
    frame_type: FrameType,
    mac_len: usize,
    payload_len: usize,
    sequence_number: u16,
}

fn parse_header(bits: &BitsRef) -> Result<Header, CodecError> {
    let s = PREAMBLE_BITS;
    if read_uint(bits, s, 7) != SYNC_MARKER {
        return Err(CodecError::BadSync);
    }
    let payload_len = read_uint(bits, s + 10, 7) as usize;
    if payload_len > MAX_PAYLOAD_BITS {
        return Err(CodecError::PayloadTooLong {
            max: MAX_PAYLOAD_BITS,
            actual: payload_len,
        });
    }
    Ok(Header {
        frame_type: FrameType::from_bit(bits[s + 7]),
        mac_len: (read_uint(bits, s + 8, 2) as usize + 2) * 8,
        payload_len,
        sequence_number: read_uint(bits, s + 17, SEQUENCE_BITS) as u16,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::bits::{flip_bit, from_bit_str, to_hex};
    use crate::codec::payload::pack_sensor_payload;

    const KEY: MacKey = MacKey([0x5a; 16]);

    fn request(payload: Bits, mac_len: usize) -> UplinkRequest {
        UplinkRequest {
            device_id: 0x001A_2B3C,
            sequence_number: 42,
            frame_type: FrameType::Sensor,
            payload,
            mac_len,
        }
    }

    #[test]
    fn maximal_frame_is_232_bits() {
        let frame = encode_uplink_frame(&request(Bits::repeat(true, 96), 40), &KEY).unwrap();
        assert_eq!(frame.len(), 232);
        assert_eq!(MAX_FRAME_BITS, 232);
    }

    #[test]
    fn roundtrip_sensor_frame() {
        let req = request(pack_sensor_payload(17.9, 740, 12), 32);
        let bits = encode_uplink_frame(&req, &KEY).unwrap();
        assert_eq!(bits.len(), 19 + 29 + 32 + 64 + 32 + 16);
        let frame = decode_uplink_frame(&bits, &KEY).unwrap();
        assert_eq!(frame.device_id, req.device_id);
        assert_eq!(frame.sequence_number, 42);
        assert_eq!(frame.frame_type, FrameType::Sensor);
        assert_eq!(frame.payload, req.payload);
        assert_eq!(frame.mac.len(), 32);
    }

    #[test]
    fn payload_too_long() {
        let err = encode_uplink_frame(&request(Bits::repeat(false, 97), 40), &KEY).unwrap_err();
        assert_eq!(err, CodecError::PayloadTooLong { max: 96, actual: 97 });
    }

    #[test]
    fn sequence_range() {
        let mut req = request(Bits::new(), 16);
        req.sequence_number = 4096;
        assert_eq!(
            encode_uplink_frame(&req, &KEY).unwrap_err(),
            CodecError::SequenceOutOfRange(4096)
        );
    }

    #[test]
    fn flipped_payload_bit_is_bad_fcs() {
        let bits = encode_uplink_frame(&request(Bits::repeat(true, 96), 40), &KEY).unwrap();
        let mut bad = bits.clone();
        let i = HEADER_BITS + 10;
        flip_bit(&mut bad, i);
        assert!(matches!(decode_uplink_frame(&bad, &KEY), Err(CodecError::BadFcs { .. })));
    }

    #[test]
    fn wrong_key_is_bad_mac() {
        let bits = encode_uplink_frame(&request(Bits::repeat(true, 96), 40), &KEY).unwrap();
        let other = MacKey([0xa5; 16]);
        assert_eq!(decode_uplink_frame(&bits, &other), Err(CodecError::BadMac));
    }

    #[test]
    fn truncated_and_preamble() {
        let bits = encode_uplink_frame(&request(Bits::new(), 16), &KEY).unwrap();
        assert!(matches!(
            decode_uplink_frame(&bits[..50], &KEY),
            Err(CodecError::Truncated { .. })
        ));
        let mut bad = bits.clone();
        flip_bit(&mut bad, 0);
        assert_eq!(decode_uplink_frame(&bad, &KEY), Err(CodecError::BadPreamble));
    }

    #[test]
    fn hex_roundtrip_with_padding() {
        // 19+29+32+5+16+16 = 117 bits -> 3 bits of padding.
        let req = request(from_bit_str("10110"), 16);
        let bits = encode_uplink_frame(&req, &KEY).unwrap();
        let hex = to_hex(&bits);
        assert_eq!(hex.len(), 30);
        let frame = decode_uplink_hex(&hex, &KEY).unwrap();
        assert_eq!(frame.payload, req.payload);
        assert!(matches!(
            decode_uplink_hex(&hex[..20], &KEY),
            Err(CodecError::Truncated { .. })
        ));
    }
}
