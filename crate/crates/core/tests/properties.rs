use proptest::prelude::*;

use waters_core::codec::{
    compute_fcs, decode_downlink_frame, decode_uplink_frame, decode_uplink_hex, encode_downlink_frame,
    encode_uplink_frame, flip_bit, to_hex, Bits, FrameType, MacKey, UplinkRequest, MAC_LENGTHS,
};
use waters_core::data::{
    apply_standardizer, fit_standardizer, invert_standardizer, split_counts, StandardizationParams,
};
use waters_core::netsim::{detect_collisions, interferes, run_simulation, SimConfig, Transmission};

const CCITT_FALSE: crc::Crc<u16> = crc::Crc::<u16>::new(&crc::CRC_16_IBM_3740);

fn key() -> MacKey {
    MacKey::from_hex("2b7e151628aed2a6abf7158809cf4f3c").unwrap()
}

fn tx(start: f64, freq: f64) -> Transmission {
    Transmission {
        device_id: 0,
        message_id: 0,
        replica_index: 0,
        start_time: start,
        duration: 2.32,
        center_frequency: freq,
    }
}

#[test]
fn fcs_check_value() {
    assert_eq!(compute_fcs(&Bits::from_vec(b"123456789".to_vec())), 0x29B1);
    assert_eq!(CCITT_FALSE.checksum(b"123456789"), 0x29B1);
}

#[test]
fn touching_and_edge_spacing_do_not_collide() {
    let a = tx(0.0, 1000.0);
    assert!(!interferes(&a, &tx(2.32, 1000.0), 100.0));
    assert!(!interferes(&a, &tx(1.0, 1100.0), 100.0));
    assert!(interferes(&a, &tx(1.0, 1099.999), 100.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fcs_matches_reference_crc(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        prop_assert_eq!(compute_fcs(&Bits::from_vec(bytes.clone())), CCITT_FALSE.checksum(&bytes));
    }

    #[test]
    fn uplink_roundtrip_and_hex(
        device_id in any::<u32>(),
        seq in 0u16..=4095,
        gps in any::<bool>(),
        payload in prop::collection::vec(any::<bool>(), 0..=96),
        mac_idx in 0usize..4,
    ) {
        let req = UplinkRequest {
            device_id,
            sequence_number: seq,
            frame_type: if gps { FrameType::Gps } else { FrameType::Sensor },
            payload: payload.iter().copied().collect(),
            mac_len: MAC_LENGTHS[mac_idx],
        };
        let bits = encode_uplink_frame(&req, &key()).unwrap();
        prop_assert!(bits.len() <= 232);
        let frame = decode_uplink_frame(&bits, &key()).unwrap();
        prop_assert_eq!(&frame.payload, &req.payload);
        let via_hex = decode_uplink_hex(&to_hex(&bits), &key()).unwrap();
        prop_assert_eq!(via_hex, frame);
    }

    #[test]
    fn uplink_flip_is_detected(payload in prop::collection::vec(any::<bool>(), 0..=96), at in 0usize..232) {
        let req = UplinkRequest {
            device_id: 7,
            sequence_number: 1,
            frame_type: FrameType::Sensor,
            payload: payload.iter().copied().collect(),
            mac_len: 16,
        };
        let mut bits = encode_uplink_frame(&req, &key()).unwrap();
        let at = at % bits.len();
        flip_bit(&mut bits, at);
        let err = decode_uplink_frame(&bits, &key()).unwrap_err();
        prop_assert!(matches!(err.kind(), "BadFcs" | "BadPreamble"));
    }

    #[test]
    fn downlink_corrects_single_flips(
        payload in prop::collection::vec(any::<bool>(), 0..=64),
        at in any::<prop::sample::Index>(),
    ) {
        let p: Bits = payload.iter().copied().collect();
        let bits = encode_downlink_frame(42, &p, &key()).unwrap();
        let clean = decode_downlink_frame(&bits, &key(), 42).unwrap();
        prop_assert_eq!(&clean.payload, &p);
        // ECC region starts after the 91-bit preamble and 13-bit sync.
        let region = 104..104 + 32 + p.len();
        let idx = region.start + at.index(region.len());
        let mut bad = bits.clone();
        flip_bit(&mut bad, idx);
        let fixed = decode_downlink_frame(&bad, &key(), 42).unwrap();
        prop_assert_eq!(fixed.payload, p);
    }

    #[test]
    fn collisions_are_symmetric(
        a in (0.0f64..10.0, 0.0f64..500.0),
        b in (0.0f64..10.0, 0.0f64..500.0),
    ) {
        let (x, y) = (tx(a.0, a.1), tx(b.0, b.1));
        prop_assert_eq!(interferes(&x, &y, 100.0), interferes(&y, &x, 100.0));
        let mut y2 = y;
        y2.device_id = 1;
        let out = detect_collisions(&[x, y2], 100.0);
        prop_assert_eq!(out.destroyed[0], out.destroyed[1]);
    }

    #[test]
    fn standardizer_inverts(rows in prop::collection::vec(prop::array::uniform4(-1e3f64..1e3), 2..50)) {
        if let Ok(params) = fit_standardizer(&rows) {
            let back = invert_standardizer(&params, &apply_standardizer(&params, &rows));
            for (r, b) in rows.iter().zip(&back) {
                for k in 0..4 {
                    prop_assert!((r[k] - b[k]).abs() <= 1e-9 * r[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn splits_conserve_and_order(n in 0usize..10_000) {
        let s = split_counts(n);
        prop_assert_eq!(s.train.len() + s.validation.len() + s.test.len(), n);
        prop_assert_eq!(s.train.end, s.validation.start);
        prop_assert_eq!(s.validation.end, s.test.start);
        prop_assert_eq!(s.train.len(), n / 2);
        prop_assert_eq!(s.validation.len(), n / 4);
    }
}

#[test]
fn simulation_accounts_for_every_message() {
    for n in [1u32, 50, 400] {
        let cfg = SimConfig {
            num_devices: n,
            horizon_s: 86_400.0,
            rng_seed: 9,
            ..SimConfig::default()
        };
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.lost_messages + r.delivered_messages, r.total_messages);
        assert_eq!(r.total_messages, u64::from(n) * 24);
        assert_eq!(r.total_transmissions, 3 * r.total_messages);
        assert!(r.per_device_per.iter().all(|p| (0.0..=1.0).contains(p)));
        let last = r.lost_packet_timeline.last().unwrap();
        assert!((last.cumulative_per - r.overall_per).abs() < 1e-12);
    }
}

#[test]
fn standardization_is_fitted_on_training_rows_only() {
    let rows: Vec<[f64; 4]> = (0..100).map(|i| {
        let x = i as f64;
        [x, x * 2.0 + 1.0, (x * 0.1).sin(), 100.0 - x]
    }).collect();
    let s = split_counts(rows.len());
    let params: StandardizationParams = fit_standardizer(&rows[s.train.clone()]).unwrap();
    let test = apply_standardizer(&params, &rows[s.test.clone()]);
    let mean0 = test.iter().map(|r| r[0]).sum::<f64>() / test.len() as f64;
    assert!(mean0 > 1.0);
}
