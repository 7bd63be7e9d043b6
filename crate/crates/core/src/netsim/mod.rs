//! Discrete-event simulator of a Sigfox star network.
//!
//! Devices access the channel with unslotted random frequency and time
//! division (RFTDMA): every message is sent as back-to-back replicas on
//! random, pairwise distinct carriers. A single receiver hears everything;
//! loss is driven purely by time-frequency collisions, without capture,
//! path loss or downlink traffic.

mod collision;
mod config;
mod duty;
mod energy;
mod schedule;
mod sim;

use thiserror::Error;

pub use collision::{detect_collisions, interferes, CollisionOutcome};
pub use config::{
    FrequencyMode, SimConfig, MAX_DUTY_CYCLE, MAX_MESSAGES_PER_DAY, MAX_MESSAGES_PER_HOUR, SECONDS_PER_DAY,
    SECONDS_PER_HOUR,
};
pub use duty::{check_duty_cycle, message_count, DeviceDuty, DutyCycleReport, Violation, ViolationKind};
pub use energy::{estimate_autonomy, wake_fraction_for_autonomy, EnergyProfile};
pub use schedule::{device_rng, schedule_device, schedule_network, MessageKey, Transmission};
pub use sim::{mean_per, per_cdf, run_seeds, run_simulation, CdfPoint, SimResult, TimelineBucket};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("ConfigParse: {0}")]
    ConfigParse(String),
    #[error("EmptyInput: no values")]
    EmptyInput,
    #[error("OutOfRange: {0}")]
    OutOfRange(String),
    #[error("InvalidProfile: {0}")]
    InvalidProfile(String),
}

impl SimError {
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::ConfigInvalid(_) => "ConfigInvalid",
            SimError::ConfigParse(_) => "ConfigParse",
            SimError::EmptyInput => "EmptyInput",
            SimError::OutOfRange(_) => "OutOfRange",
            SimError::InvalidProfile(_) => "InvalidProfile",
        }
    }
}
