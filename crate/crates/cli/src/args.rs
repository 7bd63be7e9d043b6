use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "waters", version, about = "Sigfox codec, network simulator and LSTM forecaster for water-quality telemetry")]
pub struct Cli {
    /// Seed for every stochastic step; overrides seeds in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with optional [simulation], [energy] and [training] tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the main result here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Report failures as one JSON object on standard error.
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PayloadKind {
    Sensor,
    Gps,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode an uplink (or downlink) frame.
    Encode(EncodeArgs),
    /// Decode and verify a hex frame.
    Decode(DecodeArgs),
    /// Run the RFTDMA network simulation.
    Simulate(SimulateArgs),
    /// Check a generated schedule against the uplink limits.
    DutyCheck(DutyArgs),
    /// Battery autonomy of the two-state energy model.
    Autonomy(AutonomyArgs),
    /// Write synthetic surveys as CSV.
    GenerateData(GenerateArgs),
    /// Pearson correlation matrix of a survey file.
    Pearson(PearsonArgs),
    /// Train the stacked LSTM forecaster.
    Train(TrainArgs),
    /// Forecast with a saved model.
    Predict(PredictArgs),
    /// Compare backpropagated gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct KeyArg {
    /// 128-bit MAC key as 32 hex digits.
    #[arg(long, env = "WATERS_KEY", hide_env_values = true)]
    pub key: String,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub key: KeyArg,
    #[arg(long)]
    pub device_id: u32,
    #[arg(long = "seq", default_value_t = 0, value_parser = clap::value_parser!(u16).range(0..=4095))]
    pub sequence_number: u16,
    #[arg(long = "type", value_enum, default_value_t = PayloadKind::Sensor)]
    pub frame_type: PayloadKind,
    /// Raw payload as hex; overrides the measurement flags.
    #[arg(long)]
    pub payload_hex: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub temperature: Option<f32>,
    #[arg(long)]
    pub ph: Option<f64>,
    #[arg(long)]
    pub turbidity: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lat: Option<f32>,
    #[arg(long, allow_negative_numbers = true)]
    pub lon: Option<f32>,
    /// MAC width in bits: 16, 24, 32 or 40.
    #[arg(long, default_value_t = 16, value_parser = parse_mac_len)]
    pub mac_len: usize,
    /// Build a downlink frame instead.
    #[arg(long)]
    pub downlink: bool,
}

fn parse_mac_len(text: &str) -> Result<usize, String> {
    match text.parse::<usize>() {
        Ok(n) if waters_core::codec::MAC_LENGTHS.contains(&n) => Ok(n),
        _ => Err("expected one of 16, 24, 32, 40".into()),
    }
}

fn parse_positive(text: &str) -> Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err("expected a positive number".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Widths(pub Vec<usize>);

fn parse_widths(text: &str) -> Result<Widths, String> {
    let widths: Result<Vec<usize>, _> = text.split(',').map(|w| w.trim().parse::<usize>()).collect();
    match widths {
        Ok(w) if !w.is_empty() && !w.contains(&0) => Ok(Widths(w)),
        _ => Err("expected comma-separated positive widths, e.g. 3,2".into()),
    }
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub key: KeyArg,
    #[arg(long)]
    pub hex: String,
    /// Decode a downlink frame addressed to --device-id.
    #[arg(long, requires = "device_id")]
    pub downlink: bool,
    #[arg(long)]
    pub device_id: Option<u32>,
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Number of end devices.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub devices: Option<u32>,
    /// Simulated horizon in days.
    #[arg(long, value_parser = parse_positive)]
    pub days: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub messages_per_hour: Option<u32>,
    /// Snap replicas to a 100 Hz channel grid instead of continuous frequencies.
    #[arg(long)]
    pub grid: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Number of runs, seeded --seed, --seed + 1, ...
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=1000))]
    pub runs: u32,
    /// CSV of lost packets per interval (first run).
    #[arg(long)]
    pub timeline: Option<PathBuf>,
    /// CSV of the per-device PER distribution (all runs pooled).
    #[arg(long)]
    pub cdf: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DutyArgs {
    #[command(flatten)]
    pub network: NetworkArgs,
}

#[derive(Debug, Args)]
pub struct AutonomyArgs {
    #[arg(long, value_parser = parse_positive)]
    pub wake_current_ma: Option<f64>,
    #[arg(long, value_parser = parse_positive)]
    pub sleep_current_ma: Option<f64>,
    #[arg(long, value_parser = parse_positive)]
    pub capacity_mah: Option<f64>,
    /// Seconds awake per cycle.
    #[arg(long)]
    pub wake_seconds: Option<f64>,
    #[arg(long, value_parser = parse_positive)]
    pub cycle_seconds: Option<f64>,
    /// Device never sleeps.
    #[arg(long, conflicts_with = "wake_seconds")]
    pub always_awake: bool,
    /// Also report the wake fraction that lasts exactly this many hours.
    #[arg(long, value_parser = parse_positive)]
    pub target_hours: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 3280, value_parser = clap::value_parser!(u64).range(5..=10_000_000))]
    pub samples: u64,
    /// One record per hour instead of the 09/12/18 survey slots.
    #[arg(long)]
    pub hourly: bool,
}

#[derive(Debug, Args)]
pub struct SurveyInput {
    /// Survey CSV: timestamp,station,temperature,conductivity,oxygen,ph.
    #[arg(long)]
    pub input: PathBuf,
    /// Field delimiter of the input file.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Keep every record instead of the default place/hour/year filter.
    #[arg(long)]
    pub no_filter: bool,
}

#[derive(Debug, Args)]
pub struct PearsonArgs {
    #[command(flatten)]
    pub input: SurveyInput,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: SurveyInput,
    /// Where to save the trained model (JSON container).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_parser = parse_positive)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Train in single precision.
    #[arg(long)]
    pub f32: bool,
    /// Feed the features straight into the first LSTM layer.
    #[arg(long)]
    pub no_input_dense: bool,
    /// CSV of per-epoch losses.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// CSV of observed and predicted test values.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model saved by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Survey CSV; every run of three consecutive rows yields a forecast.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// LSTM layer widths.
    #[arg(long, default_value = "2", value_parser = parse_widths)]
    pub hidden: Widths,
    /// Width of a ReLU input projection.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub input_dense: Option<u64>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub instances: u32,
    #[arg(long, default_value_t = 1e-5, value_parser = parse_positive)]
    pub epsilon: f64,
    /// Exit with status 1 when the worst relative error reaches this value.
    #[arg(long, default_value_t = 1e-5, value_parser = parse_positive)]
    pub tolerance: f64,
}
