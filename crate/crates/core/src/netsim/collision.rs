use std::collections::{BTreeMap, BTreeSet};

use super::schedule::{MessageKey, Transmission};

/// Two transmissions interfere when they overlap in time (open intervals)
/// and their carriers are closer than one channel width.
pub fn interferes(a: &Transmission, b: &Transmission, channel_width: f64) -> bool {
    a.start_time < b.end_time()
        && b.start_time < a.end_time()
        && (a.center_frequency - b.center_frequency).abs() < channel_width
}

/// Result of collision detection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionOutcome {
    /// `destroyed[i]` refers to `transmissions[i]` as passed in.
    pub destroyed: Vec<bool>,
    /// Messages whose every replica was destroyed.
    pub lost: BTreeSet<MessageKey>,
}

/// Pure-collision model: a replica is destroyed by any interferer, and a
/// message is lost only when all of its replicas are destroyed.
///
/// Sweeps the transmissions in start-time order, so each replica is only
/// compared against those that begin before it ends.
pub fn detect_collisions(transmissions: &[Transmission], channel_width: f64) -> CollisionOutcome {
    let mut order: Vec<usize> = (0..transmissions.len()).collect();
    order.sort_by(|&a, &b| {
        transmissions[a]
            .start_time
            .total_cmp(&transmissions[b].start_time)
            .then(a.cmp(&b))
    });

    let mut destroyed = vec![false; transmissions.len()];
    for (pos, &i) in order.iter().enumerate() {
        let a = &transmissions[i];
        let end = a.end_time();
        for &j in &order[pos + 1..] {
            let b = &transmissions[j];
            if b.start_time >= end {
                break;
            }
            if interferes(a, b, channel_width) {
                destroyed[i] = true;
                destroyed[j] = true;
            }
        }
    }

    let lost = lost_messages(transmissions, &destroyed);
    CollisionOutcome { destroyed, lost }
}

pub(crate) fn lost_messages(transmissions: &[Transmission], destroyed: &[bool]) -> BTreeSet<MessageKey> {
    let mut survived: BTreeMap<MessageKey, bool> = BTreeMap::new();
    for (t, &d) in transmissions.iter().zip(destroyed) {
        *survived.entry(t.message_key()).or_insert(false) |= !d;
    }
    survived
        .into_iter()
        .filter_map(|(k, ok)| (!ok).then_some(k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(device_id: u32, message_id: u32, replica: u32, start: f64, f: f64) -> Transmission {
        Transmission {
            device_id,
            message_id,
            replica_index: replica,
            start_time: start,
            duration: 2.32,
            center_frequency: f,
        }
    }

    #[test]
    fn lone_device_never_loses() {
        let list = vec![tx(0, 0, 0, 0.0, 500.0), tx(0, 0, 1, 2.32, 900.0), tx(0, 1, 0, 3600.0, 500.0)];
        let out = detect_collisions(&list, 100.0);
        assert!(out.lost.is_empty());
        assert!(out.destroyed.iter().all(|d| !d));
    }

    #[test]
    fn mutual_destruction() {
        let list = vec![tx(0, 0, 0, 10.0, 1000.0), tx(1, 0, 0, 11.0, 1050.0)];
        let out = detect_collisions(&list, 100.0);
        assert_eq!(out.destroyed, vec![true, true]);
        assert_eq!(out.lost.len(), 2);
    }

    #[test]
    fn one_surviving_replica_saves_message() {
        let list = vec![
            tx(0, 0, 0, 10.0, 1000.0),
            tx(0, 0, 1, 12.32, 5000.0),
            tx(1, 0, 0, 11.0, 1000.0),
        ];
        let out = detect_collisions(&list, 100.0);
        assert_eq!(out.destroyed, vec![true, false, true]);
        assert_eq!(
            out.lost.into_iter().collect::<Vec<_>>(),
            vec![MessageKey { device_id: 1, message_id: 0 }]
        );
    }

    #[test]
    fn touching_or_distant_does_not_collide() {
        let list = vec![tx(0, 0, 0, 0.0, 1000.0), tx(1, 0, 0, 2.32, 1000.0), tx(2, 0, 0, 1.0, 1100.0)];
        let out = detect_collisions(&list, 100.0);
        assert!(out.lost.is_empty());
    }

    #[test]
    fn order_independent() {
        let list = vec![
            tx(0, 0, 0, 10.0, 1000.0),
            tx(1, 0, 0, 11.0, 1010.0),
            tx(2, 0, 0, 12.0, 1020.0),
            tx(3, 0, 0, 30.0, 1020.0),
        ];
        let mut rev = list.clone();
        rev.reverse();
        assert_eq!(detect_collisions(&list, 100.0).lost, detect_collisions(&rev, 100.0).lost);
    }
}
