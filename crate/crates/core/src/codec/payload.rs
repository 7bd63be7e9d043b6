//! Application payloads carried in uplink frames.
//!
//! Frame type 0 carries measurements, frame type 1 carries a GPS fix. Both
//! pack to exactly 64 bits, big endian.

use serde::{Deserialize, Serialize};

use super::bits::{push_uint, read_uint, Bits, BitsRef};
use super::CodecError;

pub const PAYLOAD_BITS: usize = 64;

/// Frame type 0: measured values.
///
/// pH travels as `pH x 100` and turbidity as whole NTU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorPayload {
    pub temperature: f32,
    pub ph_raw: i16,
    pub turbidity_raw: i16,
}

/// Frame type 1: latitude and longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsPayload {
    pub latitude: f32,
    pub longitude: f32,
}

/// Discriminates the two application payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameType {
    Sensor = 0,
    Gps = 1,
}

impl FrameType {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            FrameType::Gps
        } else {
            FrameType::Sensor
        }
    }
}

/// Converts a pH reading to its wire form, rounding to the nearest hundredth.
pub fn ph_to_raw(ph: f64) -> i16 {
    (ph * 100.0).round() as i16
}

pub fn ph_from_raw(raw: i16) -> f64 {
    f64::from(raw) / 100.0
}

/// Converts turbidity in NTU to its wire form.
pub fn turbidity_to_raw(ntu: f64) -> i16 {
    ntu.round() as i16
}

pub fn pack_sensor_payload(temperature: f32, ph_raw: i16, turbidity_raw: i16) -> Bits {
    let mut bits = Bits::with_capacity(PAYLOAD_BITS);
    push_uint(&mut bits, u64::from(temperature.to_bits()), 32);
    push_uint(&mut bits, u64::from(ph_raw as u16), 16);
    push_uint(&mut bits, u64::from(turbidity_raw as u16), 16);
    bits
}

pub fn unpack_sensor_payload(bits: &BitsRef) -> Result<SensorPayload, CodecError> {
    check_len(bits)?;
    Ok(SensorPayload {
        temperature: f32::from_bits(read_uint(bits, 0, 32) as u32),
        ph_raw: read_uint(bits, 32, 16) as u16 as i16,
        turbidity_raw: read_uint(bits, 48, 16) as u16 as i16,
    })
}

/// Packs a GPS fix. Coordinates outside [-90, 90] x [-180, 180] are rejected.
pub fn pack_gps_payload(latitude: f32, longitude: f32) -> Result<Bits, CodecError> {
    if !(-90.0..=90.0).contains(&latitude) {
        return Err(CodecError::OutOfRange(format!("latitude {latitude}")));
    }
    if !(-180.0..=180.0).contains(&longitude) {
        return Err(CodecError::OutOfRange(format!("longitude {longitude}")));
    }
    let mut bits = Bits::with_capacity(PAYLOAD_BITS);
    push_uint(&mut bits, u64::from(latitude.to_bits()), 32);
    push_uint(&mut bits, u64::from(longitude.to_bits()), 32);
    Ok(bits)
}

pub fn unpack_gps_payload(bits: &BitsRef) -> Result<GpsPayload, CodecError> {
    check_len(bits)?;
    Ok(GpsPayload {
        latitude: f32::from_bits(read_uint(bits, 0, 32) as u32),
        longitude: f32::from_bits(read_uint(bits, 32, 32) as u32),
    })
}

impl SensorPayload {
    pub fn to_bits(&self) -> Bits {
        pack_sensor_payload(self.temperature, self.ph_raw, self.turbidity_raw)
    }

    pub fn ph(&self) -> f64 {
        ph_from_raw(self.ph_raw)
    }
}

impl GpsPayload {
    pub fn to_bits(&self) -> Result<Bits, CodecError> {
        pack_gps_payload(self.latitude, self.longitude)
    }
}

fn check_len(bits: &BitsRef) -> Result<(), CodecError> {
    if bits.len() != PAYLOAD_BITS {
        return Err(CodecError::WrongLength {
            expected: PAYLOAD_BITS,
            actual: bits.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::bits::{to_bit_str, to_hex};
    use proptest::prelude::*;

    #[test]
    fn zeros_pack_to_zero_bits() {
        let bits = pack_sensor_payload(0.0, 0, 0);
        assert_eq!(bits.len(), 64);
        assert!(bits.not_any());
        assert_eq!(
            unpack_sensor_payload(&bits).unwrap(),
            SensorPayload { temperature: 0.0, ph_raw: 0, turbidity_raw: 0 }
        );
        assert!(pack_gps_payload(0.0, 0.0).unwrap().not_any());
    }

    #[test]
    fn sensor_reference_vector() {
        // 17.9f32 = 0x418F3333 (sign 0, exponent 131, mantissa 0x0F3333);
        // 740 = 0x02E4; 12 = 0x000C.
        let bits = pack_sensor_payload(17.9, 740, 12);
        assert_eq!(to_hex(&bits), "418f333302e4000c");
        assert_eq!(
            to_bit_str(&bits[..32]),
            "01000001100011110011001100110011"
        );
        let p = unpack_sensor_payload(&bits).unwrap();
        assert_eq!(p.temperature, 17.9f32);
        assert_eq!((p.ph_raw, p.turbidity_raw), (740, 12));
        assert!((p.ph() - 7.40).abs() < 1e-12);
    }

    #[test]
    fn gps_reference_vector() {
        // 41.1171f32 = 0x422477E9, 16.8719f32 = 0x4186F9A7.
        let bits = pack_gps_payload(41.1171, 16.8719).unwrap();
        assert_eq!(to_hex(&bits), "422477e94186f9a7");
    }

    #[test]
    fn negative_fields_use_twos_complement() {
        let bits = pack_sensor_payload(-1.5, -1, i16::MIN);
        assert_eq!(to_hex(&bits), "bfc00000ffff8000");
        let p = unpack_sensor_payload(&bits).unwrap();
        assert_eq!((p.ph_raw, p.turbidity_raw), (-1, i16::MIN));
    }

    #[test]
    fn wrong_length() {
        let bits = Bits::repeat(false, 63);
        assert_eq!(
            unpack_sensor_payload(&bits),
            Err(CodecError::WrongLength { expected: 64, actual: 63 })
        );
        assert!(unpack_gps_payload(&bits).is_err());
    }

    #[test]
    fn gps_range_checked() {
        assert!(pack_gps_payload(90.5, 0.0).is_err());
        assert!(pack_gps_payload(0.0, -180.5).is_err());
        assert!(pack_gps_payload(-90.0, 180.0).is_ok());
    }

    #[test]
    fn scaling_helpers() {
        assert_eq!(ph_to_raw(7.40), 740);
        assert_eq!(ph_to_raw(7.0), 700);
        assert_eq!(turbidity_to_raw(12.4), 12);
    }

    proptest! {
        #[test]
        fn sensor_roundtrip(bits in any::<u32>(), ph in any::<i16>(), turb in any::<i16>()) {
            let t = f32::from_bits(bits);
            let packed = pack_sensor_payload(t, ph, turb);
            let p = unpack_sensor_payload(&packed).unwrap();
            prop_assert_eq!(p.temperature.to_bits(), bits);
            prop_assert_eq!(p.ph_raw, ph);
            prop_assert_eq!(p.turbidity_raw, turb);
        }

        #[test]
        fn gps_roundtrip(lat in -90.0f32..=90.0, lon in -180.0f32..=180.0) {
            let p = unpack_gps_payload(&pack_gps_payload(lat, lon).unwrap()).unwrap();
            prop_assert_eq!(p.latitude.to_bits(), lat.to_bits());
            prop_assert_eq!(p.longitude.to_bits(), lon.to_bits());
        }
    }
}
