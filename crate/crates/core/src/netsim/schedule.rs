use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{FrequencyMode, SimConfig};

/// One replica on the air.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub device_id: u32,
    pub message_id: u32,
    pub replica_index: u32,
    pub start_time: f64,
    pub duration: f64,
    pub center_frequency: f64,
}

impl Transmission {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }

    pub fn message_key(&self) -> MessageKey {
        MessageKey {
            device_id: self.device_id,
            message_id: self.message_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageKey {
    pub device_id: u32,
    pub message_id: u32,
}

/// Per-device random stream: the run seed selects the key, the device id the
/// stream, so a device's schedule does not depend on how many others exist.
pub fn device_rng(seed: u64, device_id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(device_id));
    rng
}

/// Generates one device's transmissions over the horizon.
///
/// Each cycle carries one message whose first replica starts uniformly in
/// `[0, cycle - message_span]`; replicas follow back to back, separated by
/// the configured gap, on pairwise distinct channels.
pub fn schedule_device<R: Rng>(config: &SimConfig, device_id: u32, rng: &mut R) -> Vec<Transmission> {
    let cycle = config.cycle_period_s();
    let duration = config.replica_duration_s();
    let slack = (cycle - config.message_span_s()).max(0.0);
    let replicas = config.replicas_per_message as usize;
    let mut out = Vec::with_capacity(config.cycles() as usize * replicas);
    for message_id in 0..config.cycles() {
        let start = f64::from(message_id) * cycle + rng.random::<f64>() * slack;
        let freqs = replica_frequencies(config, replicas, rng);
        for (k, f) in freqs.into_iter().enumerate() {
            out.push(Transmission {
                device_id,
                message_id,
                replica_index: k as u32,
                start_time: start + k as f64 * (duration + config.inter_replica_gap_s),
                duration,
                center_frequency: f,
            });
        }
    }
    out
}

fn replica_frequencies<R: Rng>(config: &SimConfig, replicas: usize, rng: &mut R) -> Vec<f64> {
    let width = config.channel_width_hz;
    match config.frequency_mode {
        FrequencyMode::Grid => sample(rng, config.channel_count() as usize, replicas)
            .into_iter()
            .map(|k| (k as f64 + 0.5) * width)
            .collect(),
        FrequencyMode::Continuous => {
            let lo = width / 2.0;
            let hi = config.band_width_hz - width / 2.0;
            let mut freqs: Vec<f64> = Vec::with_capacity(replicas);
            while freqs.len() < replicas {
                let f = lo + rng.random::<f64>() * (hi - lo);
                if freqs.iter().all(|g| (f - g).abs() >= width) {
                    freqs.push(f);
                }
            }
            freqs
        }
    }
}

/// Schedules every device of the deployment, device by device.
pub fn schedule_network(config: &SimConfig) -> Vec<Transmission> {
    (0..config.num_devices)
        .flat_map(|d| schedule_device(config, d, &mut device_rng(config.rng_seed, d)))
        .collect()
}
