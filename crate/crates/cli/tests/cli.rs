use std::path::Path;
use std::process::{Command, Output};

const KEY: &str = "000102030405060708090a0b0c0d0e0f";

fn waters(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waters"))
        .args(args)
        .current_dir(dir)
        .env_remove("WATERS_KEY")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn encode_sensor(dir: &Path) -> String {
    let o = waters(
        &["encode", "--key", KEY, "--device-id", "42", "--seq", "9", "--temperature", "18.5", "--ph", "7.25", "--turbidity", "3"],
        dir,
    );
    json(&o)["hex"].as_str().unwrap().to_string()
}

#[test]
fn encode_then_decode() {
    let dir = tempfile::tempdir().unwrap();
    let hex = encode_sensor(dir.path());
    let v = json(&waters(&["decode", "--key", KEY, "--hex", &hex], dir.path()));
    assert_eq!(v["device_id"], 42);
    assert_eq!(v["sequence_number"], 9);
    assert_eq!(v["frame_type"], "sensor");
    assert_eq!(v["sensor"]["temperature"], 18.5);
    assert_eq!(v["sensor"]["ph"], 7.25);
}

#[test]
fn key_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let hex = encode_sensor(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_waters"))
        .args(["decode", "--hex", &hex])
        .env("WATERS_KEY", KEY)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn corrupted_frame_names_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut hex = encode_sensor(dir.path());
    let last = hex.pop().unwrap();
    hex.push(if last == '0' { '1' } else { '0' });
    let o = waters(&["decode", "--key", KEY, "--hex", &hex], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BadFcs"), "{}", stderr(&o));
}

#[test]
fn wrong_key_is_a_mac_failure() {
    let dir = tempfile::tempdir().unwrap();
    let hex = encode_sensor(dir.path());
    let o = waters(&["decode", "--key", "ffffffffffffffffffffffffffffffff", "--hex", &hex], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BadMac"), "{}", stderr(&o));
}

#[test]
fn downlink_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let o = waters(
        &["encode", "--key", KEY, "--device-id", "7", "--downlink", "--payload-hex", "0123456789abcdef"],
        dir.path(),
    );
    let v = json(&o);
    assert_eq!(v["bits"], 232);
    let hex = v["hex"].as_str().unwrap();
    let d = json(&waters(&["decode", "--key", KEY, "--downlink", "--device-id", "7", "--hex", hex], dir.path()));
    assert_eq!(d["payload_hex"], "0123456789abcdef");
    assert_eq!(d["corrected_bits"], 0);
}

#[test]
fn missing_measurements_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = waters(&["encode", "--key", KEY, "--device-id", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&waters(&["simulate", "--devices", "20", "--days", "1"], dir.path()));
    assert_eq!(v["num_devices"], 20);
    assert_eq!(v["total_messages"], 20 * 24);
    let per = v["overall_per"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&per));
}

#[test]
fn zero_devices_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = waters(&["simulate", "--devices", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_errors_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = waters(&["--json-errors", "simulate", "--devices", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["error"], "UsageError");
    assert_eq!(v["exit_code"], 2);

    let o = waters(&["--json-errors", "decode", "--key", KEY, "--hex", "zz"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_ne!(v["error"], "UsageError");
}

#[test]
fn unknown_format_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = waters(&["simulate", "--format", "xml", "-o", "out.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out.json").exists());
}

#[test]
fn bad_config_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[simulation]\nnum_devise = 3\n").unwrap();
    let o = waters(&["--config", "c.toml", "simulate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ConfigParse"));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[simulation]\nnum_devices = 4\nhorizon_s = 86400\n").unwrap();
    let v = json(&waters(&["--config", "c.toml", "simulate"], dir.path()));
    assert_eq!(v["num_devices"], 4);
    let v = json(&waters(&["--config", "c.toml", "simulate", "--devices", "6"], dir.path()));
    assert_eq!(v["num_devices"], 6);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--seed", "11", "simulate", "--devices", "200", "--days", "1", "--runs", "2", "--timeline", "t.csv", "--cdf",
        "c.csv",
    ];
    let a = waters(&args, dir.path());
    let ta = std::fs::read(dir.path().join("t.csv")).unwrap();
    let ca = std::fs::read(dir.path().join("c.csv")).unwrap();
    let b = waters(&args, dir.path());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(ta, std::fs::read(dir.path().join("t.csv")).unwrap());
    assert_eq!(ca, std::fs::read(dir.path().join("c.csv")).unwrap());

    let g1 = waters(&["--seed", "3", "generate-data", "--samples", "50"], dir.path());
    let g2 = waters(&["--seed", "3", "generate-data", "--samples", "50"], dir.path());
    assert_eq!(g1.stdout, g2.stdout);
    let g3 = waters(&["--seed", "4", "generate-data", "--samples", "50"], dir.path());
    assert_ne!(g1.stdout, g3.stdout);
}

#[test]
fn csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = waters(
        &["simulate", "--devices", "5", "--days", "1", "--timeline", "t.csv", "--cdf", "c.csv"],
        dir.path(),
    );
    assert!(o.status.success());
    let first = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first("t.csv"), "interval_start_s,lost_count,cumulative_per");
    assert_eq!(first("c.csv"), "per,cumulative_fraction");

    let o = waters(&["generate-data", "--samples", "20"], dir.path());
    assert!(stdout(&o).starts_with("timestamp,station,temperature,conductivity,oxygen,ph\n"));

    let o = waters(&["duty-check", "--devices", "2", "--days", "1", "--format", "csv"], dir.path());
    assert!(stdout(&o).starts_with("device_id,max_messages_per_hour,max_messages_per_day,airtime_fraction,compliant\n"));
}

#[test]
fn duty_check_flags_excess_rate() {
    let dir = tempfile::tempdir().unwrap();
    let ok = json(&waters(&["duty-check", "--devices", "3", "--days", "1"], dir.path()));
    assert_eq!(ok["compliant"], true);
    let bad = waters(&["duty-check", "--devices", "3", "--days", "1", "--messages-per-hour", "7"], dir.path());
    let bad = json(&bad);
    assert_eq!(bad["compliant"], false);
    assert!(!bad["violations"].as_array().unwrap().is_empty());
}

#[test]
fn autonomy_reports() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&waters(&["autonomy", "--always-awake"], dir.path()));
    assert!((v["autonomy_hours"].as_f64().unwrap() - 720.0 / 125.5).abs() < 1e-9);
    let v = json(&waters(&["autonomy", "--target-hours", "100"], dir.path()));
    let f = v["wake_fraction_for_target"].as_f64().unwrap();
    assert!(f > 0.0 && f < 1.0);
}

#[test]
fn pearson_on_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    assert!(waters(&["generate-data", "--samples", "500", "-o", "s.csv"], dir.path()).status.success());
    let v = json(&waters(&["pearson", "--input", "s.csv"], dir.path()));
    assert_eq!(v["samples"], 500);
    for k in 0..4 {
        assert_eq!(v["matrix"][k][k], 1.0);
    }
    let o = waters(&["pearson", "--input", "s.csv", "--format", "csv"], dir.path());
    assert!(stdout(&o).starts_with("feature,temperature,conductivity,oxygen,ph\n"));
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    assert!(waters(&["generate-data", "--samples", "120", "-o", "s.csv"], dir.path()).status.success());
    let v = json(&waters(
        &[
            "train", "--input", "s.csv", "--model", "m.json", "--epochs", "2", "--hidden", "6", "--history", "h.csv",
            "--predictions", "p.csv",
        ],
        dir.path(),
    ));
    assert_eq!(v["epochs"], 2);
    assert_eq!(v["windows"], 117);
    let history = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    assert!(history.starts_with("epoch,train_loss,val_loss\n"));
    let preds = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(preds.starts_with("index,observed_temperature,predicted_temperature,"));
    assert_eq!(preds.lines().count(), 1 + v["splits"]["test"].as_u64().unwrap() as usize);

    let o = waters(&["predict", "--model", "m.json", "--input", "s.csv", "--format", "csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("index,timestamp,predicted_temperature,predicted_conductivity,predicted_oxygen,predicted_ph\n"));
    // Every run of three consecutive surveys, including the final one.
    assert_eq!(out.lines().count(), 1 + 118);

    let again = waters(&["predict", "--model", "m.json", "--input", "s.csv", "--format", "csv"], dir.path());
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn predict_rejects_garbage_model() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), "{\"magic\":\"nope\"}").unwrap();
    std::fs::write(dir.path().join("s.csv"), "timestamp,station,temperature,conductivity,oxygen,ph\n").unwrap();
    let o = waters(&["predict", "--model", "m.json", "--input", "s.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BadModelFile"), "{}", stderr(&o));
}

#[test]
fn gradcheck_passes_and_can_fail() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&waters(&["gradcheck", "--instances", "2", "--hidden", "3,2", "--input-dense", "3"], dir.path()));
    assert!(v["max_relative_error"].as_f64().unwrap() < 1e-5);
    let o = waters(&["gradcheck", "--instances", "1", "--tolerance", "1e-300"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("GradientMismatch"));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(waters(&["--help"], dir.path()).status.success());
    assert!(waters(&["--version"], dir.path()).status.success());
}
