use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::DataError;

/// Number of water-quality features per survey.
pub const FEATURES: usize = 4;
/// Feature names in column order.
pub const FEATURE_NAMES: [&str; FEATURES] = ["temperature", "conductivity", "oxygen", "ph"];

/// Column header of the survey text format.
pub const SURVEY_HEADER: [&str; 6] = ["timestamp", "station", "temperature", "conductivity", "oxygen", "ph"];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// One timestamped observation: temperature in degrees Celsius, conductivity
/// in uS/cm, dissolved oxygen in mg/L and pH.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub timestamp: NaiveDateTime,
    pub station_id: String,
    pub temperature: f64,
    pub conductivity: f64,
    pub oxygen: f64,
    pub ph: f64,
}

impl SurveyRecord {
    pub fn features(&self) -> [f64; FEATURES] {
        [self.temperature, self.conductivity, self.oxygen, self.ph]
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(name) = FEATURE_NAMES
            .iter()
            .zip(self.features())
            .find_map(|(n, v)| (!v.is_finite()).then_some(n))
        {
            return Err(format!("{name} is not finite"));
        }
        if !(0.0..=14.0).contains(&self.ph) {
            return Err(format!("ph {} outside [0, 14]", self.ph));
        }
        Ok(())
    }
}

/// Delimited-text options.
#[derive(Debug, Clone, Copy)]
pub struct TextFormat {
    pub delimiter: u8,
}

impl Default for TextFormat {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

/// Records read from a file plus the rows skipped for missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSurveys {
    pub records: Vec<SurveyRecord>,
    /// 1-based line numbers of rows dropped because a feature was empty.
    pub skipped_lines: Vec<u64>,
}

pub fn parse_timestamp(text: &str) -> Result<NaiveDateTime, String> {
    let text = text.trim().trim_end_matches('Z');
    NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M"))
        .map_err(|e| format!("bad timestamp {text:?}: {e}"))
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Reads surveys from delimited text with the [`SURVEY_HEADER`] columns (in
/// any order). Rows with an empty feature are skipped; every other defect is
/// an error naming its line. Output is sorted by timestamp, stable.
pub fn load_surveys(path: &Path, format: TextFormat) -> Result<LoadedSurveys, DataError> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DataError::FileNotFound(path.display().to_string()),
        _ => DataError::Io(e.to_string()),
    })?;
    read_surveys(file, format)
}

pub fn read_surveys<R: std::io::Read>(reader: R, format: TextFormat) -> Result<LoadedSurveys, DataError> {
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers().map_err(|e| DataError::Parse { line: 1, message: e.to_string() })?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(DataError::EmptyFile);
    }
    let mut columns = [0usize; 6];
    for (slot, name) in columns.iter_mut().zip(SURVEY_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| DataError::Parse {
                line: 1,
                message: format!("missing column {name:?}"),
            })?;
    }

    let mut records = Vec::new();
    let mut skipped_lines = Vec::new();
    for row in csv.records() {
        let row = row.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |k: usize| row.get(columns[k]).unwrap_or("");
        if (2..6).any(|k| field(k).is_empty()) {
            skipped_lines.push(line);
            continue;
        }
        let number = |k: usize| {
            field(k).parse::<f64>().map_err(|_| DataError::Parse {
                line,
                message: format!("{}: not a number: {:?}", SURVEY_HEADER[k], field(k)),
            })
        };
        let record = SurveyRecord {
            timestamp: parse_timestamp(field(0)).map_err(|message| DataError::Parse { line, message })?,
            station_id: field(1).to_string(),
            temperature: number(2)?,
            conductivity: number(3)?,
            oxygen: number(4)?,
            ph: number(5)?,
        };
        record.validate().map_err(|reason| DataError::Invalid { line, reason })?;
        records.push(record);
    }
    if records.is_empty() && skipped_lines.is_empty() {
        return Err(DataError::EmptyFile);
    }
    records.sort_by_key(|r| r.timestamp);
    Ok(LoadedSurveys { records, skipped_lines })
}

/// Writes surveys in the format [`read_surveys`] accepts.
pub fn write_surveys<W: std::io::Write>(writer: W, records: &[SurveyRecord]) -> Result<(), DataError> {
    let mut csv = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| DataError::Io(e.to_string());
    csv.write_record(SURVEY_HEADER).map_err(io)?;
    for r in records {
        csv.write_record([
            format_timestamp(&r.timestamp),
            r.station_id.clone(),
            r.temperature.to_string(),
            r.conductivity.to_string(),
            r.oxygen.to_string(),
            r.ph.to_string(),
        ])
        .map_err(io)?;
    }
    csv.flush().map_err(|e| DataError::Io(e.to_string()))
}
