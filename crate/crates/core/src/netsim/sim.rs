use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::collision::detect_collisions;
use super::config::SimConfig;
use super::schedule::{schedule_network, MessageKey};
use super::SimError;

/// Lost packets within one reporting interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineBucket {
    pub interval_start_s: f64,
    pub lost_count: u64,
    /// Lost / sent over all messages up to the end of this interval.
    pub cumulative_per: f64,
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub num_devices: u32,
    pub rng_seed: u64,
    pub total_messages: u64,
    pub lost_messages: u64,
    pub delivered_messages: u64,
    pub total_transmissions: u64,
    pub destroyed_transmissions: u64,
    pub overall_per: f64,
    pub per_device_per: Vec<f64>,
    pub lost_packet_timeline: Vec<TimelineBucket>,
}

/// Runs one seeded simulation.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let transmissions = schedule_network(config);
    let outcome = detect_collisions(&transmissions, config.channel_width_hz);

    // First-replica start time of every message.
    let mut messages: BTreeMap<MessageKey, f64> = BTreeMap::new();
    for t in &transmissions {
        let start = messages.entry(t.message_key()).or_insert(t.start_time);
        *start = start.min(t.start_time);
    }

    let devices = config.num_devices as usize;
    let mut sent = vec![0u64; devices];
    let mut lost = vec![0u64; devices];
    let buckets = (config.horizon_s / config.timeline_interval_s).ceil().max(1.0) as usize;
    let mut bucket_sent = vec![0u64; buckets];
    let mut bucket_lost = vec![0u64; buckets];
    for (key, start) in &messages {
        let b = ((start / config.timeline_interval_s) as usize).min(buckets - 1);
        let is_lost = outcome.lost.contains(key);
        sent[key.device_id as usize] += 1;
        bucket_sent[b] += 1;
        if is_lost {
            lost[key.device_id as usize] += 1;
            bucket_lost[b] += 1;
        }
    }

    let mut cum_sent = 0u64;
    let mut cum_lost = 0u64;
    let lost_packet_timeline = (0..buckets)
        .map(|b| {
            cum_sent += bucket_sent[b];
            cum_lost += bucket_lost[b];
            TimelineBucket {
                interval_start_s: b as f64 * config.timeline_interval_s,
                lost_count: bucket_lost[b],
                cumulative_per: ratio(cum_lost, cum_sent),
            }
        })
        .collect();

    let total_messages = messages.len() as u64;
    let lost_messages = outcome.lost.len() as u64;
    Ok(SimResult {
        num_devices: config.num_devices,
        rng_seed: config.rng_seed,
        total_messages,
        lost_messages,
        delivered_messages: total_messages - lost_messages,
        total_transmissions: transmissions.len() as u64,
        destroyed_transmissions: outcome.destroyed.iter().filter(|d| **d).count() as u64,
        overall_per: ratio(lost_messages, total_messages),
        per_device_per: sent.iter().zip(&lost).map(|(&s, &l)| ratio(l, s)).collect(),
        lost_packet_timeline,
    })
}

/// Runs the same deployment under several seeds in parallel; results come
/// back in seed order.
pub fn run_seeds(config: &SimConfig, seeds: &[u64]) -> Result<Vec<SimResult>, SimError> {
    config.validate()?;
    seeds
        .par_iter()
        .map(|&seed| {
            run_simulation(&SimConfig {
                rng_seed: seed,
                ..config.clone()
            })
        })
        .collect()
}

pub fn mean_per(results: &[SimResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().map(|r| r.overall_per).sum::<f64>() / results.len() as f64
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One step of an empirical CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub per: f64,
    pub cumulative_fraction: f64,
}

/// Empirical CDF of per-device PER values, one point per distinct value.
pub fn per_cdf(values: &[f64]) -> Result<Vec<CdfPoint>, SimError> {
    if values.is_empty() {
        return Err(SimError::EmptyInput);
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(SimError::OutOfRange(format!("PER value {v} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<CdfPoint> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let cumulative_fraction = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.per == *v => last.cumulative_fraction = cumulative_fraction,
            _ => points.push(CdfPoint { per: *v, cumulative_fraction }),
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_device_has_no_losses() {
        let r = run_simulation(&SimConfig { num_devices: 1, rng_seed: 4, ..Default::default() }).unwrap();
        assert_eq!(r.total_messages, 168);
        assert_eq!(r.overall_per, 0.0);
        assert_eq!(r.per_device_per, vec![0.0]);
        assert_eq!(r.lost_packet_timeline.len(), 168);
    }

    #[test]
    fn conservation_and_determinism() {
        let c = SimConfig { num_devices: 300, rng_seed: 11, ..Default::default() };
        let a = run_simulation(&c).unwrap();
        let b = run_simulation(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.delivered_messages + a.lost_messages, a.total_messages);
        assert_eq!(a.total_messages, 300 * 168);
        assert_eq!(a.lost_packet_timeline.iter().map(|b| b.lost_count).sum::<u64>(), a.lost_messages);
        assert!((0.0..=1.0).contains(&a.overall_per));
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(matches!(
            run_simulation(&SimConfig { num_devices: 0, ..Default::default() }),
            Err(SimError::ConfigInvalid(_))
        ));
    }

    #[test]
    fn seeds_in_order() {
        let c = SimConfig { num_devices: 20, horizon_s: 86_400.0, ..Default::default() };
        let runs = run_seeds(&c, &[3, 1, 2]).unwrap();
        assert_eq!(runs.iter().map(|r| r.rng_seed).collect::<Vec<_>>(), vec![3, 1, 2]);
        assert_eq!(runs[1], run_simulation(&SimConfig { rng_seed: 1, ..c }).unwrap());
    }

    #[test]
    fn cdf_cases() {
        assert_eq!(
            per_cdf(&[0.0, 0.0, 0.0]).unwrap(),
            vec![CdfPoint { per: 0.0, cumulative_fraction: 1.0 }]
        );
        let cdf = per_cdf(&[1.0, 0.0, 0.5]).unwrap();
        assert_eq!(cdf.len(), 3);
        for (k, p) in cdf.iter().enumerate() {
            assert_eq!(p.per, k as f64 * 0.5);
            assert!((p.cumulative_fraction - (k + 1) as f64 / 3.0).abs() < 1e-15);
        }
        assert_eq!(per_cdf(&[]), Err(SimError::EmptyInput));
        assert!(per_cdf(&[1.5]).is_err());
    }

    proptest! {
        #[test]
        fn cdf_monotone(values in proptest::collection::vec(0.0f64..=1.0, 1..60)) {
            let cdf = per_cdf(&values).unwrap();
            for w in cdf.windows(2) {
                prop_assert!(w[0].per < w[1].per);
                prop_assert!(w[0].cumulative_fraction <= w[1].cumulative_fraction);
            }
            prop_assert_eq!(cdf.last().unwrap().cumulative_fraction, 1.0);
        }
    }
}
