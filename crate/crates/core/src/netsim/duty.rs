use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{
    SimConfig, MAX_DUTY_CYCLE, MAX_MESSAGES_PER_DAY, MAX_MESSAGES_PER_HOUR, SECONDS_PER_DAY, SECONDS_PER_HOUR,
};
use super::schedule::{MessageKey, Transmission};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    MessagesPerHour,
    MessagesPerDay,
    Airtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub device_id: u32,
    pub kind: ViolationKind,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceDuty {
    pub device_id: u32,
    pub max_messages_per_hour: u32,
    pub max_messages_per_day: u32,
    /// Airtime divided by the configured horizon.
    pub airtime_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleReport {
    pub compliant: bool,
    pub devices: Vec<DeviceDuty>,
    pub violations: Vec<Violation>,
}

/// Checks a schedule against the uplink limits. Messages are counted in
/// clock-hour and clock-day buckets by the start of their first replica.
pub fn check_duty_cycle(schedule: &[Transmission], config: &SimConfig) -> DutyCycleReport {
    #[derive(Default)]
    struct Acc {
        first_start: BTreeMap<u32, f64>,
        airtime: f64,
    }
    let mut per_device: BTreeMap<u32, Acc> = BTreeMap::new();
    for t in schedule {
        let acc = per_device.entry(t.device_id).or_default();
        acc.airtime += t.duration;
        let start = acc.first_start.entry(t.message_id).or_insert(t.start_time);
        *start = start.min(t.start_time);
    }

    let mut devices = Vec::with_capacity(per_device.len());
    let mut violations = Vec::new();
    for (device_id, acc) in per_device {
        let max_in = |width: f64| {
            let mut counts: BTreeMap<i64, u32> = BTreeMap::new();
            for start in acc.first_start.values() {
                *counts.entry((start / width).floor() as i64).or_default() += 1;
            }
            counts.values().copied().max().unwrap_or(0)
        };
        let duty = DeviceDuty {
            device_id,
            max_messages_per_hour: max_in(SECONDS_PER_HOUR),
            max_messages_per_day: max_in(SECONDS_PER_DAY),
            airtime_fraction: acc.airtime / config.horizon_s,
        };
        let mut flag = |kind, value: f64, limit: f64| {
            if value > limit {
                violations.push(Violation { device_id, kind, value, limit });
            }
        };
        flag(
            ViolationKind::MessagesPerHour,
            f64::from(duty.max_messages_per_hour),
            f64::from(MAX_MESSAGES_PER_HOUR),
        );
        flag(
            ViolationKind::MessagesPerDay,
            f64::from(duty.max_messages_per_day),
            f64::from(MAX_MESSAGES_PER_DAY),
        );
        flag(ViolationKind::Airtime, duty.airtime_fraction, MAX_DUTY_CYCLE);
        devices.push(duty);
    }
    DutyCycleReport {
        compliant: violations.is_empty(),
        devices,
        violations,
    }
}

/// Distinct messages in a schedule.
pub fn message_count(schedule: &[Transmission]) -> usize {
    schedule
        .iter()
        .map(Transmission::message_key)
        .collect::<std::collections::BTreeSet<MessageKey>>()
        .len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::schedule::{device_rng, schedule_device, schedule_network};

    #[test]
    fn default_schedule_is_compliant() {
        let c = SimConfig { num_devices: 5, ..Default::default() };
        let report = check_duty_cycle(&schedule_network(&c), &c);
        assert!(report.compliant, "{:?}", report.violations);
        for d in &report.devices {
            assert_eq!(d.max_messages_per_hour, 1);
            assert_eq!(d.max_messages_per_day, 24);
            // 3 replicas x 2.32 s per 3600 s.
            assert!((d.airtime_fraction - 6.96 / 3600.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seven_messages_in_an_hour_flagged() {
        let c = SimConfig { horizon_s: 3600.0, ..Default::default() };
        let template = schedule_device(&c, 0, &mut device_rng(0, 0));
        let schedule: Vec<Transmission> = (0..7u32)
            .flat_map(|m| {
                template.iter().map(move |t| Transmission {
                    message_id: m,
                    start_time: f64::from(m) * 400.0 + t.replica_index as f64 * t.duration,
                    ..*t
                })
            })
            .collect();
        assert_eq!(message_count(&schedule), 7);
        let report = check_duty_cycle(&schedule, &c);
        assert!(!report.compliant);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::MessagesPerHour && v.value == 7.0));
        // 7 x 6.96 s = 48.72 s in one hour is also above 1 %.
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Airtime));
    }
}
