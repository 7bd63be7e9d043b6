use serde::{Deserialize, Serialize};

use super::SimError;

/// Regulatory uplink limits.
pub const MAX_MESSAGES_PER_HOUR: u32 = 6;
pub const MAX_MESSAGES_PER_DAY: u32 = 140;
pub const MAX_DUTY_CYCLE: f64 = 0.01;

pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// How replica carrier frequencies are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyMode {
    /// Uniform over the continuous band; two carriers interfere when closer
    /// than one channel width.
    Continuous,
    /// Uniform over `band_width / channel_width` discrete channels.
    Grid,
}

/// Description of one simulated deployment.
///
/// Loaded from TOML with every key optional:
///
/// ```toml
/// num_devices = 200
/// horizon_s = 604800.0
/// messages_per_hour = 1
/// replicas_per_message = 3
/// band_width_hz = 192000.0
/// channel_width_hz = 100.0
/// uplink_bitrate_bps = 100.0
/// frame_bits = 232
/// inter_replica_gap_s = 0.0
/// frequency_mode = "continuous"   # or "grid"
/// timeline_interval_s = 3600.0
/// rng_seed = 1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub num_devices: u32,
    pub horizon_s: f64,
    pub messages_per_hour: u32,
    pub replicas_per_message: u32,
    pub band_width_hz: f64,
    pub channel_width_hz: f64,
    pub uplink_bitrate_bps: f64,
    pub frame_bits: u32,
    pub inter_replica_gap_s: f64,
    pub frequency_mode: FrequencyMode,
    pub timeline_interval_s: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_devices: 14,
            horizon_s: 7.0 * SECONDS_PER_DAY,
            messages_per_hour: 1,
            replicas_per_message: 3,
            band_width_hz: 192_000.0,
            channel_width_hz: 100.0,
            uplink_bitrate_bps: 100.0,
            frame_bits: 232,
            inter_replica_gap_s: 0.0,
            frequency_mode: FrequencyMode::Continuous,
            timeline_interval_s: SECONDS_PER_HOUR,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::ConfigParse(e.to_string()))
    }

    /// Airtime of one replica.
    pub fn replica_duration_s(&self) -> f64 {
        f64::from(self.frame_bits) / self.uplink_bitrate_bps
    }

    /// Time from the first replica's start to the last replica's end.
    pub fn message_span_s(&self) -> f64 {
        let n = f64::from(self.replicas_per_message);
        n * self.replica_duration_s() + (n - 1.0) * self.inter_replica_gap_s
    }

    pub fn cycle_period_s(&self) -> f64 {
        SECONDS_PER_HOUR / f64::from(self.messages_per_hour)
    }

    pub fn cycles(&self) -> u32 {
        (self.horizon_s / self.cycle_period_s() + 1e-9).floor() as u32
    }

    pub fn channel_count(&self) -> u32 {
        (self.band_width_hz / self.channel_width_hz + 1e-9).floor() as u32
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::ConfigInvalid(msg));
        if self.num_devices == 0 {
            return fail("num_devices must be at least 1".into());
        }
        if !(self.horizon_s > 0.0 && self.horizon_s.is_finite()) {
            return fail(format!("horizon_s must be positive, got {}", self.horizon_s));
        }
        if self.replicas_per_message == 0 {
            return fail("replicas_per_message must be at least 1".into());
        }
        if !(self.channel_width_hz > 0.0 && self.band_width_hz >= self.channel_width_hz) {
            return fail("band must hold at least one channel".into());
        }
        if self.channel_count() < self.replicas_per_message {
            return fail(format!(
                "{} channels cannot host {} distinct replicas",
                self.channel_count(),
                self.replicas_per_message
            ));
        }
        if self.messages_per_hour == 0 || self.messages_per_hour > MAX_MESSAGES_PER_HOUR {
            return fail(format!(
                "messages_per_hour must be in 1..={MAX_MESSAGES_PER_HOUR}, got {}",
                self.messages_per_hour
            ));
        }
        if self.messages_per_hour * 24 > MAX_MESSAGES_PER_DAY {
            return fail(format!(
                "{} messages/hour exceeds {MAX_MESSAGES_PER_DAY} messages/day",
                self.messages_per_hour
            ));
        }
        if !(self.uplink_bitrate_bps > 0.0) || self.frame_bits == 0 {
            return fail("bitrate and frame_bits must be positive".into());
        }
        if !(self.inter_replica_gap_s >= 0.0) {
            return fail("inter_replica_gap_s must be non-negative".into());
        }
        if self.message_span_s() > self.cycle_period_s() {
            return fail("one message does not fit in its cycle".into());
        }
        if !(self.timeline_interval_s > 0.0) {
            return fail("timeline_interval_s must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert!((c.replica_duration_s() - 2.32).abs() < 1e-12);
        assert!((c.message_span_s() - 6.96).abs() < 1e-12);
        assert_eq!(c.channel_count(), 1920);
        assert_eq!(c.cycles(), 168);
    }

    #[test]
    fn duty_guard() {
        let mut c = SimConfig { messages_per_hour: 5, ..Default::default() };
        c.validate().unwrap();
        c.messages_per_hour = 6;
        assert!(matches!(c.validate(), Err(SimError::ConfigInvalid(_))));
        c.messages_per_hour = 7;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_zero_devices_and_replicas() {
        assert!(SimConfig { num_devices: 0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { replicas_per_message: 0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { band_width_hz: 200.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn toml_partial() {
        let c = SimConfig::from_toml_str("num_devices = 56\nfrequency_mode = \"grid\"\n").unwrap();
        assert_eq!(c.num_devices, 56);
        assert_eq!(c.frequency_mode, FrequencyMode::Grid);
        assert_eq!(c.replicas_per_message, 3);
        assert!(SimConfig::from_toml_str("bogus = 1").is_err());
    }
}
