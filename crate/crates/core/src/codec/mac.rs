//! Keyed authentication tag: HMAC-SHA256 truncated to the frame's MAC width.

use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::bits::{to_bytes, Bits, BitsRef};
use super::CodecError;

/// 128-bit device key.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct MacKey(pub [u8; 16]);

impl MacKey {
    /// Parses 32 hex characters.
    pub fn from_hex(text: &str) -> Result<Self, CodecError> {
        let text = text.trim();
        if text.len() != 32 {
            return Err(CodecError::BadKey(format!(
                "expected 32 hex characters, got {}",
                text.len()
            )));
        }
        let mut key = [0u8; 16];
        for (i, slot) in key.iter_mut().enumerate() {
            *slot = u8::from_str_radix(&text[2 * i..2 * i + 2], 16)
                .map_err(|_| CodecError::BadKey("non-hex character in key".into()))?;
        }
        Ok(Self(key))
    }
}

impl std::fmt::Debug for MacKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MacKey(..)")
    }
}

/// Widths a MAC field may take, in bits.
pub const MAC_LENGTHS: [usize; 4] = [16, 24, 32, 40];

/// Computes a `mac_len`-bit tag over `fields`.
///
/// The HMAC input is the bit length as a big-endian `u32` followed by the
/// zero-padded bytes, so bit strings that differ only in trailing zeros get
/// different tags.
pub fn compute_mac(key: &MacKey, fields: &BitsRef, mac_len: usize) -> Result<Bits, CodecError> {
    if !MAC_LENGTHS.contains(&mac_len) {
        return Err(CodecError::BadMacLength(mac_len));
    }
    let mut hmac = Hmac::<Sha256>::new_from_slice(&key.0).expect("HMAC accepts any key length");
    hmac.update(&(fields.len() as u32).to_be_bytes());
    hmac.update(&to_bytes(fields));
    let digest = hmac.finalize().into_bytes();
    Ok(Bits::from_vec(digest[..mac_len / 8].to_vec()))
}
