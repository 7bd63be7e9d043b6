use serde::{Deserialize, Serialize};

use super::SimError;

/// Two-state (awake / asleep) current model of an end device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyProfile {
    /// mA drawn while awake (sensing and transmitting).
    pub wake_current_ma: f64,
    /// mA drawn while asleep.
    pub sleep_current_ma: f64,
    pub battery_capacity_mah: f64,
    pub wake_seconds_per_cycle: f64,
    pub cycle_period_s: f64,
}

impl Default for EnergyProfile {
    fn default() -> Self {
        Self {
            wake_current_ma: 125.5,
            sleep_current_ma: 0.98,
            battery_capacity_mah: 720.0,
            wake_seconds_per_cycle: 0.0,
            cycle_period_s: 3600.0,
        }
    }
}

impl EnergyProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("wake_current_ma", self.wake_current_ma),
            ("sleep_current_ma", self.sleep_current_ma),
            ("battery_capacity_mah", self.battery_capacity_mah),
            ("cycle_period_s", self.cycle_period_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidProfile(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=self.cycle_period_s).contains(&self.wake_seconds_per_cycle) {
            return Err(SimError::InvalidProfile(format!(
                "wake_seconds_per_cycle {} outside [0, {}]",
                self.wake_seconds_per_cycle, self.cycle_period_s
            )));
        }
        Ok(())
    }

    pub fn wake_fraction(&self) -> f64 {
        self.wake_seconds_per_cycle / self.cycle_period_s
    }

    pub fn average_current_ma(&self) -> f64 {
        let f = self.wake_fraction();
        self.wake_current_ma * f + self.sleep_current_ma * (1.0 - f)
    }
}

/// Battery autonomy in hours without harvesting.
pub fn estimate_autonomy(profile: &EnergyProfile) -> f64 {
    profile.battery_capacity_mah / profile.average_current_ma()
}

/// Wake fraction at which the battery lasts exactly `hours`, or `None` when
/// the target is outside what the two currents can reach.
pub fn wake_fraction_for_autonomy(profile: &EnergyProfile, hours: f64) -> Option<f64> {
    let current = profile.battery_capacity_mah / hours;
    let f = (current - profile.sleep_current_ma) / (profile.wake_current_ma - profile.sleep_current_ma);
    (0.0..=1.0).contains(&f).then_some(f)
}
