//! Downlink frame layout (MSB first):
//!
//! | field      | bits   | content                                       |
//! |------------|--------|-----------------------------------------------|
//! | preamble   | 91     | alternating `1010...1`                        |
//! | frame_sync | 13     | marker(6) = `100111`, payload_len(7)          |
//! | ecc        | 32     | four SECDED check bytes, see [`super::ecc`]   |
//! | payload    | 0..=64 | application data                              |
//! | mac        | 16     | HMAC tag over device_id and payload           |
//! | fcs        | 16     | CRC-16/CCITT-FALSE over every preceding bit   |
//!
//! With a full 64-bit payload the field widths add up to 232 bits. Published
//! descriptions of the Sigfox downlink quote an overall size of 224 bits,
//! which the listed field widths do not reproduce; the widths are treated as
//! normative here.

use super::bits::{from_hex, push_uint, read_uint, Bits, BitsRef};
use super::ecc::{correct, encode_ecc, ECC_BITS};
use super::fcs::compute_fcs;
use super::mac::{compute_mac, MacKey};
use super::CodecError;

pub const PREAMBLE_BITS: usize = 91;
pub const SYNC_BITS: usize = 13;
pub const MAX_PAYLOAD_BITS: usize = 64;
pub const MAC_BITS: usize = 16;
pub const FCS_BITS: usize = 16;
/// Overall downlink size quoted in the Sigfox literature; see module docs.
pub const QUOTED_FRAME_BITS: usize = 224;

const SYNC_MARKER: u64 = 0b10_0111;
const HEADER_BITS: usize = PREAMBLE_BITS + SYNC_BITS + ECC_BITS;
const MIN_FRAME_BITS: usize = HEADER_BITS + MAC_BITS + FCS_BITS;

/// A parsed downlink frame after error correction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownlinkFrame {
    pub payload: Bits,
    pub ecc: Bits,
    pub mac: Bits,
    pub fcs: u16,
    /// Bits repaired by the ECC on the way in.
    pub corrected_bits: usize,
}

pub fn downlink_frame_len(payload_bits: usize) -> usize {
    HEADER_BITS + payload_bits + MAC_BITS + FCS_BITS
}

fn preamble_bit(i: usize) -> bool {
    i.is_multiple_of(2)
}

fn mac_input(device_id: u32, payload: &BitsRef) -> Bits {
    let mut fields = Bits::with_capacity(32 + payload.len());
    push_uint(&mut fields, u64::from(device_id), 32);
    fields.extend_from_bitslice(payload);
    fields
}

pub fn encode_downlink_frame(device_id: u32, payload: &BitsRef, key: &MacKey) -> Result<Bits, CodecError> {
    if payload.len() > MAX_PAYLOAD_BITS {
        return Err(CodecError::PayloadTooLong {
            max: MAX_PAYLOAD_BITS,
            actual: payload.len(),
        });
    }
    let mut bits = Bits::with_capacity(downlink_frame_len(payload.len()));
    bits.extend((0..PREAMBLE_BITS).map(preamble_bit));
    push_uint(&mut bits, SYNC_MARKER, 6);
    push_uint(&mut bits, payload.len() as u64, 7);
    bits.extend_from_bitslice(&encode_ecc(payload));
    bits.extend_from_bitslice(payload);
    bits.extend_from_bitslice(&compute_mac(key, &mac_input(device_id, payload), MAC_BITS)?);
    let fcs = compute_fcs(&bits);
    push_uint(&mut bits, u64::from(fcs), FCS_BITS);
    Ok(bits)
}

/// Decodes an exact-length downlink frame addressed to `device_id`.
///
/// The payload is corrected first; the FCS is then verified over the
/// corrected fields, then the MAC.
pub fn decode_downlink_frame(bits: &BitsRef, key: &MacKey, device_id: u32) -> Result<DownlinkFrame, CodecError> {
    if bits.len() < MIN_FRAME_BITS {
        return Err(CodecError::Truncated {
            needed: MIN_FRAME_BITS,
            actual: bits.len(),
        });
    }
    if !(0..PREAMBLE_BITS).all(|i| bits[i] == preamble_bit(i)) {
        return Err(CodecError::BadPreamble);
    }
    let payload_len = parse_sync(bits)?;
    let total = downlink_frame_len(payload_len);
    if total > bits.len() {
        return Err(CodecError::Truncated {
            needed: total,
            actual: bits.len(),
        });
    }
    if total < bits.len() {
        return Err(CodecError::LengthMismatch {
            header: total,
            actual: bits.len(),
        });
    }

    let ecc_start = PREAMBLE_BITS + SYNC_BITS;
    let payload_start = HEADER_BITS;
    let mac_start = payload_start + payload_len;
    let fcs_start = mac_start + MAC_BITS;
    let fixed = correct(&bits[payload_start..mac_start], &bits[ecc_start..payload_start])
        .map_err(|e| CodecError::BadEcc { block: e.block })?;

    let mut repaired = bits[..fcs_start].to_bitvec();
    repaired[ecc_start..payload_start].copy_from_bitslice(&fixed.ecc);
    repaired[payload_start..mac_start].copy_from_bitslice(&fixed.payload);
    let fcs = read_uint(bits, fcs_start, FCS_BITS) as u16;
    let computed = compute_fcs(&repaired);
    if fcs != computed {
        return Err(CodecError::BadFcs {
            received: fcs,
            computed,
        });
    }
    let mac = bits[mac_start..fcs_start].to_bitvec();
    if mac != compute_mac(key, &mac_input(device_id, &fixed.payload), MAC_BITS)? {
        return Err(CodecError::BadMac);
    }
    Ok(DownlinkFrame {
        payload: fixed.payload,
        ecc: fixed.ecc,
        mac,
        fcs,
        corrected_bits: fixed.corrected_bits,
    })
}

pub fn decode_downlink_hex(hex: &str, key: &MacKey, device_id: u32) -> Result<DownlinkFrame, CodecError> {
    let bits = from_hex(hex)?;
    if bits.len() < PREAMBLE_BITS + SYNC_BITS {
        return Err(CodecError::Truncated {
            needed: MIN_FRAME_BITS,
            actual: bits.len(),
        });
    }
    let total = downlink_frame_len(parse_sync(&bits)?);
    if bits.len() < total {
        return Err(CodecError::Truncated {
            needed: total,
            actual: bits.len(),
        });
    }
    decode_downlink_frame(&bits[..total], key, device_id)
}

fn parse_sync(bits: &BitsRef) -> Result<usize, CodecError> {
    if read_uint(bits, PREAMBLE_BITS, 6) != SYNC_MARKER {
        return Err(CodecError::BadSync);
    }
    let payload_len = read_uint(bits, PREAMBLE_BITS + 6, 7) as usize;
    if payload_len > MAX_PAYLOAD_BITS {
        return Err(CodecError::PayloadTooLong {
            max: MAX_PAYLOAD_BITS,
            actual: payload_len,
        });
    }
    Ok(payload_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::bits::{flip_bit, to_hex};

    const KEY: MacKey = MacKey([0x11; 16]);
    const DEVICE: u32 = 0xCAFE_0001;

    fn payload() -> Bits {
        Bits::from_vec(vec![0xde, 0xad, 0xbe, 0xef, 0x01, 0x23, 0x45, 0x67])
    }

    #[test]
    fn field_widths() {
        let bits = encode_downlink_frame(DEVICE, &payload(), &KEY).unwrap();
        assert_eq!(bits.len(), 91 + 13 + 32 + 64 + 16 + 16);
        assert_eq!(bits.len(), 232);
        assert_ne!(bits.len(), QUOTED_FRAME_BITS);
    }

    #[test]
    fn clean_roundtrip() {
        let bits = encode_downlink_frame(DEVICE, &payload(), &KEY).unwrap();
        let frame = decode_downlink_frame(&bits, &KEY, DEVICE).unwrap();
        assert_eq!(frame.payload, payload());
        assert_eq!(frame.corrected_bits, 0);
        let frame = decode_downlink_hex(&to_hex(&bits), &KEY, DEVICE).unwrap();
        assert_eq!(frame.payload, payload());
    }

    #[test]
    fn single_payload_error_corrected() {
        let bits = encode_downlink_frame(DEVICE, &payload(), &KEY).unwrap();
        for i in 0..64 {
            let mut bad = bits.clone();
            flip_bit(&mut bad, HEADER_BITS + i);
            let frame = decode_downlink_frame(&bad, &KEY, DEVICE).unwrap();
            assert_eq!(frame.payload, payload());
            assert_eq!(frame.corrected_bits, 1);
        }
    }

    #[test]
    fn double_error_in_block_is_bad_ecc() {
        let bits = encode_downlink_frame(DEVICE, &payload(), &KEY).unwrap();
        let mut bad = bits.clone();
        for i in [HEADER_BITS + 16, HEADER_BITS + 20] {
            flip_bit(&mut bad, i);
        }
        assert_eq!(
            decode_downlink_frame(&bad, &KEY, DEVICE),
            Err(CodecError::BadEcc { block: 1 })
        );
    }

    #[test]
    fn wrong_device_or_key_is_bad_mac() {
        let bits = encode_downlink_frame(DEVICE, &payload(), &KEY).unwrap();
        assert_eq!(decode_downlink_frame(&bits, &KEY, DEVICE + 1), Err(CodecError::BadMac));
        assert_eq!(
            decode_downlink_frame(&bits, &MacKey([0; 16]), DEVICE),
            Err(CodecError::BadMac)
        );
    }

    #[test]
    fn corrupted_mac_is_bad_fcs() {
        let bits = encode_downlink_frame(DEVICE, &payload(), &KEY).unwrap();
        let mut bad = bits.clone();
        let i = HEADER_BITS + 64 + 3;
        flip_bit(&mut bad, i);
        assert!(matches!(
            decode_downlink_frame(&bad, &KEY, DEVICE),
            Err(CodecError::BadFcs { .. })
        ));
    }

    #[test]
    fn oversized_payload() {
        let err = encode_downlink_frame(DEVICE, &Bits::repeat(false, 65), &KEY).unwrap_err();
        assert_eq!(err, CodecError::PayloadTooLong { max: 64, actual: 65 });
    }
}
