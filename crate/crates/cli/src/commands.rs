use std::collections::BTreeSet;
use std::path::Path;

use chrono::Timelike;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use waters_core::codec::{
    decode_downlink_hex, decode_uplink_hex, encode_downlink_frame, encode_uplink_frame, from_hex, pack_gps_payload,
    pack_sensor_payload, ph_to_raw, to_bit_str, to_hex, turbidity_to_raw, unpack_gps_payload, unpack_sensor_payload,
    Bits, FrameType, MacKey, UplinkRequest, PAYLOAD_BITS,
};
use waters_core::data::{
    contiguous_runs, filter_surveys, format_timestamp, generate_synthetic, load_surveys, make_windows_in_runs,
    next_slot, split_dataset, write_surveys, FilterCriteria, SurveyRecord, SyntheticOptions, TextFormat, Window,
    FEATURES, FEATURE_NAMES, REFERENCE_CORRELATION, TIMESTEPS,
};
use waters_core::forecast::{
    evaluate, gradient_check, load_model, pearson_matrix, predict_many, random_network, random_window, save_model,
    train, EpochRecord, GradCheckReport, Precision, TrainConfig,
};
use waters_core::netsim::{
    check_duty_cycle, estimate_autonomy, mean_per, per_cdf, run_seeds, schedule_network,
    wake_fraction_for_autonomy, EnergyProfile, FrequencyMode, SimConfig, SimResult,
};

use crate::args::*;
use crate::error::CliError;
use crate::report::{csv, emit, json, num};

/// Optional tables of the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub simulation: Option<SimConfig>,
    pub energy: Option<EnergyProfile>,
    pub training: Option<TrainConfig>,
}

pub struct Globals {
    pub seed: Option<u64>,
    pub config: ConfigFile,
    pub output: Option<std::path::PathBuf>,
    pub format: Option<Format>,
}

impl Globals {
    fn output(&self) -> Option<&Path> {
        self.output.as_deref()
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }
}

pub fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::domain("ConfigParse", format!("{}: {}", path.display(), e.message())))
}

fn mac_key(arg: &KeyArg) -> Result<MacKey, CliError> {
    Ok(MacKey::from_hex(arg.key.trim())?)
}

pub fn run(command: Command, g: &Globals) -> Result<(), CliError> {
    match command {
        Command::Encode(a) => encode(a, g),
        Command::Decode(a) => decode(a, g),
        Command::Simulate(a) => simulate(a, g),
        Command::DutyCheck(a) => duty_check(a, g),
        Command::Autonomy(a) => autonomy(a, g),
        Command::GenerateData(a) => generate(a, g),
        Command::Pearson(a) => pearson(a, g),
        Command::Train(a) => train_cmd(a, g),
        Command::Predict(a) => predict_cmd(a, g),
        Command::Gradcheck(a) => gradcheck(a, g),
    }
}

#[derive(Serialize)]
struct Encoded {
    direction: &'static str,
    bits: usize,
    hex: String,
    bit_string: String,
}

fn encode(a: EncodeArgs, g: &Globals) -> Result<(), CliError> {
    let key = mac_key(&a.key)?;
    let payload: Bits = if let Some(hex) = &a.payload_hex {
        from_hex(hex)?
    } else {
        match a.frame_type {
            PayloadKind::Sensor => match (a.temperature, a.ph, a.turbidity) {
                (Some(t), Some(ph), Some(turb)) => pack_sensor_payload(t, ph_to_raw(ph), turbidity_to_raw(turb)),
                _ => return Err(CliError::usage("sensor frames need --temperature, --ph and --turbidity")),
            },
            PayloadKind::Gps => match (a.lat, a.lon) {
                (Some(lat), Some(lon)) => pack_gps_payload(lat, lon)?,
                _ => return Err(CliError::usage("gps frames need --lat and --lon")),
            },
        }
    };
    let (direction, bits) = if a.downlink {
        ("downlink", encode_downlink_frame(a.device_id, &payload, &key)?)
    } else {
        let request = UplinkRequest {
            device_id: a.device_id,
            sequence_number: a.sequence_number,
            frame_type: match a.frame_type {
                PayloadKind::Sensor => FrameType::Sensor,
                PayloadKind::Gps => FrameType::Gps,
            },
            payload,
            mac_len: a.mac_len,
        };
        ("uplink", encode_uplink_frame(&request, &key)?)
    };
    let out = Encoded {
        direction,
        bits: bits.len(),
        hex: to_hex(&bits),
        bit_string: to_bit_str(&bits),
    };
    let bytes = match g.format() {
        Format::Json => json(&out),
        Format::Csv => csv(
            &["direction", "bits", "hex"],
            [vec![out.direction.to_string(), out.bits.to_string(), out.hex.clone()]],
        ),
    };
    emit(g.output(), &bytes)
}

#[derive(Serialize)]
struct SensorView {
    temperature: f32,
    ph: f64,
    turbidity_ntu: i16,
}

#[derive(Serialize)]
struct GpsView {
    latitude: f32,
    longitude: f32,
}

#[derive(Serialize)]
struct Decoded {
    direction: &'static str,
    device_id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    sequence_number: Option<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_type: Option<FrameType>,
    payload_bits: usize,
    payload_hex: String,
    mac_hex: String,
    fcs: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    corrected_bits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sensor: Option<SensorView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gps: Option<GpsView>,
}

fn decode(a: DecodeArgs, g: &Globals) -> Result<(), CliError> {
    let key = mac_key(&a.key)?;
    let out = if a.downlink {
        let device_id = a.device_id.expect("clap requires --device-id");
        let f = decode_downlink_hex(a.hex.trim(), &key, device_id)?;
        Decoded {
            direction: "downlink",
            device_id,
            sequence_number: None,
            frame_type: None,
            payload_bits: f.payload.len(),
            payload_hex: to_hex(&f.payload),
            mac_hex: to_hex(&f.mac),
            fcs: format!("{:#06x}", f.fcs),
            corrected_bits: Some(f.corrected_bits),
            sensor: None,
            gps: None,
        }
    } else {
        let f = decode_uplink_hex(a.hex.trim(), &key)?;
        let full = f.payload.len() == PAYLOAD_BITS;
        let sensor = (full && f.frame_type == FrameType::Sensor)
            .then(|| unpack_sensor_payload(&f.payload))
            .transpose()?
            .map(|s| SensorView {
                temperature: s.temperature,
                ph: s.ph(),
                turbidity_ntu: s.turbidity_raw,
            });
        let gps = (full && f.frame_type == FrameType::Gps)
            .then(|| unpack_gps_payload(&f.payload))
            .transpose()?
            .map(|p| GpsView {
                latitude: p.latitude,
                longitude: p.longitude,
            });
        Decoded {
            direction: "uplink",
            device_id: f.device_id,
            sequence_number: Some(f.sequence_number),
            frame_type: Some(f.frame_type),
            payload_bits: f.payload.len(),
            payload_hex: to_hex(&f.payload),
            mac_hex: to_hex(&f.mac),
            fcs: format!("{:#06x}", f.fcs),
            corrected_bits: None,
            sensor,
            gps,
        }
    };
    let bytes = match g.format() {
        Format::Json => json(&out),
        Format::Csv => csv(
            &["direction", "device_id", "sequence_number", "payload_bits", "payload_hex", "mac_hex", "fcs"],
            [vec![
                out.direction.to_string(),
                out.device_id.to_string(),
                out.sequence_number.map(|s| s.to_string()).unwrap_or_default(),
                out.payload_bits.to_string(),
                out.payload_hex.clone(),
                out.mac_hex.clone(),
                out.fcs.clone(),
            ]],
        ),
    };
    emit(g.output(), &bytes)
}

fn network_config(n: &NetworkArgs, g: &Globals) -> SimConfig {
    let mut cfg = g.config.simulation.clone().unwrap_or_default();
    if let Some(d) = n.devices {
        cfg.num_devices = d;
    }
    if let Some(days) = n.days {
        cfg.horizon_s = days * waters_core::netsim::SECONDS_PER_DAY;
    }
    if let Some(m) = n.messages_per_hour {
        cfg.messages_per_hour = m;
    }
    if n.grid {
        cfg.frequency_mode = FrequencyMode::Grid;
    }
    if let Some(s) = g.seed {
        cfg.rng_seed = s;
    }
    cfg
}

fn timeline_csv(r: &SimResult) -> Vec<u8> {
    csv(
        &["interval_start_s", "lost_count", "cumulative_per"],
        r.lost_packet_timeline
            .iter()
            .map(|b| vec![num(b.interval_start_s), b.lost_count.to_string(), num(b.cumulative_per)]),
    )
}

#[derive(Serialize)]
struct MultiRun<'a> {
    seeds: Vec<u64>,
    mean_per: f64,
    results: &'a [SimResult],
}

fn simulate(a: SimulateArgs, g: &Globals) -> Result<(), CliError> {
    let cfg = network_config(&a.network, g);
    cfg.validate()?;
    let seeds: Vec<u64> = (0..u64::from(a.runs)).map(|k| cfg.rng_seed.wrapping_add(k)).collect();
    let results = run_seeds(&cfg, &seeds)?;
    let first = &results[0];
    if let Some(path) = &a.timeline {
        emit(Some(path), &timeline_csv(first))?;
    }
    if let Some(path) = &a.cdf {
        let pooled: Vec<f64> = results.iter().flat_map(|r| r.per_device_per.iter().copied()).collect();
        let cdf = per_cdf(&pooled)?;
        emit(
            Some(path),
            &csv(
                &["per", "cumulative_fraction"],
                cdf.iter().map(|p| vec![num(p.per), num(p.cumulative_fraction)]),
            ),
        )?;
    }
    let bytes = match (g.format(), results.len()) {
        (Format::Csv, _) => timeline_csv(first),
        (Format::Json, 1) => json(first),
        (Format::Json, _) => json(&MultiRun {
            seeds,
            mean_per: mean_per(&results),
            results: &results,
        }),
    };
    emit(g.output(), &bytes)
}

fn duty_check(a: DutyArgs, g: &Globals) -> Result<(), CliError> {
    let cfg = network_config(&a.network, g);
    // The rate limits are what is being checked, so only the remaining
    // fields have to be valid.
    SimConfig {
        messages_per_hour: 1,
        ..cfg.clone()
    }
    .validate()?;
    if cfg.cycle_period_s() < cfg.message_span_s() {
        return Err(CliError::domain(
            "ConfigInvalid",
            format!("{} messages per hour do not fit their own airtime", cfg.messages_per_hour),
        ));
    }
    let report = check_duty_cycle(&schedule_network(&cfg), &cfg);
    let bytes = match g.format() {
        Format::Json => json(&report),
        Format::Csv => {
            let bad: BTreeSet<u32> = report.violations.iter().map(|v| v.device_id).collect();
            csv(
                &["device_id", "max_messages_per_hour", "max_messages_per_day", "airtime_fraction", "compliant"],
                report.devices.iter().map(|d| {
                    vec![
                        d.device_id.to_string(),
                        d.max_messages_per_hour.to_string(),
                        d.max_messages_per_day.to_string(),
                        num(d.airtime_fraction),
                        (!bad.contains(&d.device_id)).to_string(),
                    ]
                }),
            )
        }
    };
    emit(g.output(), &bytes)
}

#[derive(Serialize)]
struct AutonomyReport {
    profile: EnergyProfile,
    wake_fraction: f64,
    average_current_ma: f64,
    autonomy_hours: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_hours: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wake_fraction_for_target: Option<f64>,
}

fn autonomy(a: AutonomyArgs, g: &Globals) -> Result<(), CliError> {
    let mut p = g.config.energy.clone().unwrap_or_default();
    if let Some(v) = a.wake_current_ma {
        p.wake_current_ma = v;
    }
    if let Some(v) = a.sleep_current_ma {
        p.sleep_current_ma = v;
    }
    if let Some(v) = a.capacity_mah {
        p.battery_capacity_mah = v;
    }
    if let Some(v) = a.cycle_seconds {
        p.cycle_period_s = v;
    }
    if let Some(v) = a.wake_seconds {
        p.wake_seconds_per_cycle = v;
    }
    if a.always_awake {
        p.wake_seconds_per_cycle = p.cycle_period_s;
    }
    p.validate()?;
    let target = match a.target_hours {
        Some(h) => Some(wake_fraction_for_autonomy(&p, h).ok_or_else(|| {
            CliError::domain("OutOfRange", format!("no wake fraction gives {h} h with this profile"))
        })?),
        None => None,
    };
    let out = AutonomyReport {
        wake_fraction: p.wake_fraction(),
        average_current_ma: p.average_current_ma(),
        autonomy_hours: estimate_autonomy(&p),
        target_hours: a.target_hours,
        wake_fraction_for_target: target,
        profile: p,
    };
    let bytes = match g.format() {
        Format::Json => json(&out),
        Format::Csv => csv(
            &["wake_fraction", "average_current_ma", "autonomy_hours", "target_hours", "wake_fraction_for_target"],
            [vec![
                num(out.wake_fraction),
                num(out.average_current_ma),
                num(out.autonomy_hours),
                out.target_hours.map(num).unwrap_or_default(),
                out.wake_fraction_for_target.map(num).unwrap_or_default(),
            ]],
        ),
    };
    emit(g.output(), &bytes)
}

fn generate(a: GenerateArgs, g: &Globals) -> Result<(), CliError> {
    let options = SyntheticOptions {
        slot_hours: if a.hourly { None } else { SyntheticOptions::default().slot_hours },
        ..SyntheticOptions::default()
    };
    let records = generate_synthetic(a.samples as usize, &REFERENCE_CORRELATION, g.seed.unwrap_or(0), &options)?;
    let bytes = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = Vec::new();
            write_surveys(&mut out, &records)?;
            out
        }
        Format::Json => json(&records),
    };
    emit(g.output(), &bytes)
}

fn delimiter(c: char) -> Result<u8, CliError> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| CliError::usage("--delimiter must be a single ASCII character"))
}

/// Loads a survey file and applies the default filter unless disabled.
/// Returns the records and the survey slots that define consecutiveness.
fn surveys(input: &SurveyInput) -> Result<(Vec<SurveyRecord>, BTreeSet<u32>), CliError> {
    let loaded = load_surveys(&input.input, TextFormat { delimiter: delimiter(input.delimiter)? })?;
    if input.no_filter {
        let slots = observed_hours(&loaded.records);
        Ok((loaded.records, slots))
    } else {
        let criteria = FilterCriteria::default();
        Ok((filter_surveys(&loaded.records, &criteria), criteria.hours_of_day))
    }
}

fn observed_hours(records: &[SurveyRecord]) -> BTreeSet<u32> {
    records.iter().map(|r| r.timestamp.hour()).collect()
}

#[derive(Serialize)]
struct PearsonReport {
    samples: usize,
    features: [&'static str; FEATURES],
    matrix: [[f64; FEATURES]; FEATURES],
}

fn pearson(a: PearsonArgs, g: &Globals) -> Result<(), CliError> {
    let (records, _) = surveys(&a.input)?;
    let rows: Vec<[f64; FEATURES]> = records.iter().map(SurveyRecord::features).collect();
    let out = PearsonReport {
        samples: rows.len(),
        features: FEATURE_NAMES,
        matrix: pearson_matrix(&rows)?,
    };
    let bytes = match g.format() {
        Format::Json => json(&out),
        Format::Csv => {
            let mut header = vec!["feature"];
            header.extend(FEATURE_NAMES);
            csv(
                &header,
                FEATURE_NAMES.iter().zip(out.matrix).map(|(name, row)| {
                    std::iter::once(name.to_string()).chain(row.iter().map(|&v| num(v))).collect()
                }),
            )
        }
    };
    emit(g.output(), &bytes)
}

fn history_csv(history: &[EpochRecord]) -> Vec<u8> {
    csv(
        &["epoch", "train_loss", "val_loss"],
        history
            .iter()
            .map(|h| vec![h.epoch.to_string(), num(h.train_loss), num(h.val_loss)]),
    )
}

fn prediction_header() -> Vec<String> {
    let mut h = vec!["index".to_string()];
    for name in FEATURE_NAMES {
        h.push(format!("observed_{name}"));
        h.push(format!("predicted_{name}"));
    }
    h
}

#[derive(Serialize)]
struct SplitSizes {
    train: usize,
    validation: usize,
    test: usize,
}

#[derive(Serialize)]
struct TestMetrics {
    mse: f64,
    mae: f64,
    cosine_proximity: f64,
    baseline_mse: f64,
}

#[derive(Serialize)]
struct TrainReport {
    records: usize,
    windows: usize,
    splits: SplitSizes,
    config: TrainConfig,
    epochs: usize,
    final_train_loss: f64,
    final_val_loss: f64,
    test: TestMetrics,
    model: String,
}

fn train_cmd(a: TrainArgs, g: &Globals) -> Result<(), CliError> {
    let mut cfg = g.config.training.clone().unwrap_or_default();
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.hidden {
        cfg.hidden_units = v;
    }
    if let Some(v) = a.layers {
        cfg.layers = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if a.f32 {
        cfg.precision = Precision::F32;
    }
    if a.no_input_dense {
        cfg.input_dense = false;
    }
    if let Some(s) = g.seed {
        cfg.rng_seed = s;
    }
    cfg.validate()?;

    let (records, slots) = surveys(&a.input)?;
    let runs = contiguous_runs(&records, Some(&slots));
    let dataset = make_windows_in_runs(&records, &runs)?;
    let splits = split_dataset(&dataset);
    let model = train(&dataset, &splits, &cfg)?;
    save_model(&model, &a.model)?;
    let eval = evaluate(&model, &dataset, &splits, splits.test.clone())?;

    if let Some(path) = &a.history {
        emit(Some(path), &history_csv(&model.history))?;
    }
    if let Some(path) = &a.predictions {
        let header = prediction_header();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = eval.observed.iter().zip(&eval.predicted).enumerate().map(|(i, (o, p))| {
            let mut row = vec![i.to_string()];
            for k in 0..FEATURES {
                row.push(num(o[k]));
                row.push(num(p[k]));
            }
            row
        });
        emit(Some(path), &csv(&header, rows))?;
    }
    let last = model.history.last().copied().expect("at least one epoch");
    let out = TrainReport {
        records: records.len(),
        windows: dataset.len(),
        splits: SplitSizes {
            train: splits.train.len(),
            validation: splits.validation.len(),
            test: splits.test.len(),
        },
        config: cfg,
        epochs: model.history.len(),
        final_train_loss: last.train_loss,
        final_val_loss: last.val_loss,
        test: TestMetrics {
            mse: eval.mse,
            mae: eval.mae,
            cosine_proximity: eval.cosine_proximity,
            baseline_mse: eval.baseline_mse,
        },
        model: a.model.display().to_string(),
    };
    let bytes = match g.format() {
        Format::Json => json(&out),
        Format::Csv => history_csv(&model.history),
    };
    emit(g.output(), &bytes)
}

#[derive(Serialize)]
struct Forecast {
    index: usize,
    timestamp: String,
    predicted: [f64; FEATURES],
}

fn predict_cmd(a: PredictArgs, g: &Globals) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let loaded = load_surveys(&a.input, TextFormat { delimiter: delimiter(a.delimiter)? })?;
    let records = loaded.records;
    let slots = observed_hours(&records);
    let mut windows: Vec<Window> = Vec::new();
    let mut stamps = Vec::new();
    for run in contiguous_runs(&records, Some(&slots)) {
        if run.len() < TIMESTEPS {
            continue;
        }
        for start in run.start..=run.end - TIMESTEPS {
            windows.push(std::array::from_fn(|t| records[start + t].features()));
            let last = records[start + TIMESTEPS - 1].timestamp;
            stamps.push(format_timestamp(&next_slot(last, Some(&slots))));
        }
    }
    if windows.is_empty() {
        return Err(CliError::domain(
            "BadWindow",
            format!("no run of {TIMESTEPS} consecutive surveys in {}", a.input.display()),
        ));
    }
    let preds = predict_many(&model, &windows)?;
    let forecasts: Vec<Forecast> = preds
        .into_iter()
        .zip(stamps)
        .enumerate()
        .map(|(index, (predicted, timestamp))| Forecast {
            index,
            timestamp,
            predicted,
        })
        .collect();
    let bytes = match g.format() {
        Format::Json => json(&forecasts),
        Format::Csv => {
            let mut header = vec!["index".to_string(), "timestamp".to_string()];
            header.extend(FEATURE_NAMES.iter().map(|n| format!("predicted_{n}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv(
                &header,
                forecasts.iter().map(|f| {
                    let mut row = vec![f.index.to_string(), f.timestamp.clone()];
                    row.extend(f.predicted.iter().map(|&v| num(v)));
                    row
                }),
            )
        }
    };
    emit(g.output(), &bytes)
}

#[derive(Serialize)]
struct GradcheckSummary {
    instances: usize,
    hidden: Vec<usize>,
    input_dense: Option<u64>,
    epsilon: f64,
    max_relative_error: f64,
    reports: Vec<GradCheckReport>,
}

fn gradcheck(a: GradcheckArgs, g: &Globals) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed.unwrap_or(0));
    let dense = a.input_dense.map(|d| d as usize);
    let mut reports = Vec::with_capacity(a.instances as usize);
    for _ in 0..a.instances {
        let net = random_network(dense, &a.hidden.0, &mut rng)?;
        let (window, target) = random_window(&mut rng);
        reports.push(gradient_check(&net, &window, &target, a.epsilon));
    }
    let worst = reports.iter().fold(0.0f64, |m, r| m.max(r.max_relative_error));
    let out = GradcheckSummary {
        instances: reports.len(),
        hidden: a.hidden.0.clone(),
        input_dense: a.input_dense,
        epsilon: a.epsilon,
        max_relative_error: worst,
        reports,
    };
    let bytes = match g.format() {
        Format::Json => json(&out),
        Format::Csv => csv(
            &["instance", "parameters", "max_relative_error", "worst_parameter", "analytic", "numeric"],
            out.reports.iter().enumerate().map(|(i, r)| {
                vec![
                    i.to_string(),
                    r.parameters.to_string(),
                    num(r.max_relative_error),
                    r.worst_parameter.to_string(),
                    num(r.analytic),
                    num(r.numeric),
                ]
            }),
        ),
    };
    emit(g.output(), &bytes)?;
    if worst >= a.tolerance {
        return Err(CliError::domain(
            "GradientMismatch",
            format!("max relative error {worst:e} is not below {:e}", a.tolerance),
        ));
    }
    Ok(())
}
