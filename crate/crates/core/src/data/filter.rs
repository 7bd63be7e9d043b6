use std::collections::BTreeSet;
use std::ops::Range;

use chrono::{Datelike, Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::record::SurveyRecord;
use super::DataError;

/// Which surveys enter the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCriteria {
    /// Matched exactly against the record's station id.
    pub place: String,
    pub hours_of_day: BTreeSet<u32>,
    /// Inclusive.
    pub year_range: (i32, i32),
}

impl Default for FilterCriteria {
    fn default() -> Self {
        Self {
            place: "Bari".into(),
            hours_of_day: [9, 12, 18].into_iter().collect(),
            year_range: (2009, 2011),
        }
    }
}

impl FilterCriteria {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.hours_of_day.is_empty() || self.hours_of_day.iter().any(|h| *h > 23) {
            return Err(DataError::BadCriteria("hours_of_day must be a non-empty subset of 0..=23".into()));
        }
        if self.year_range.0 > self.year_range.1 {
            return Err(DataError::BadCriteria(format!(
                "year range {}..={} is reversed",
                self.year_range.0, self.year_range.1
            )));
        }
        Ok(())
    }

    pub fn accepts(&self, record: &SurveyRecord) -> bool {
        let year = record.timestamp.year();
        record.station_id == self.place
            && self.hours_of_day.contains(&record.timestamp.hour())
            && (self.year_range.0..=self.year_range.1).contains(&year)
    }
}

/// Keeps the records that match every criterion, in their original order.
pub fn filter_surveys(records: &[SurveyRecord], criteria: &FilterCriteria) -> Vec<SurveyRecord> {
    records.iter().filter(|r| criteria.accepts(r)).cloned().collect()
}

/// The survey slot expected right after `ts`: the next listed hour of the same
/// day, else the first listed hour of the next day. Without a slot list the
/// series is hourly.
pub fn next_slot(ts: NaiveDateTime, slots: Option<&BTreeSet<u32>>) -> NaiveDateTime {
    let hour_start = ts.date().and_hms_opt(ts.hour(), 0, 0).expect("valid hour");
    match slots {
        None => hour_start + Duration::hours(1),
        Some(slots) => match slots.range(ts.hour() + 1..).next() {
            Some(&h) => ts.date().and_hms_opt(h, 0, 0).expect("valid hour"),
            None => {
                let first = *slots.iter().next().expect("non-empty slots");
                (ts.date() + Duration::days(1)).and_hms_opt(first, 0, 0).expect("valid hour")
            }
        },
    }
}

/// Splits a chronologically ordered series into runs of consecutive survey
/// slots. A missing slot ends one run and starts the next.
pub fn contiguous_runs(records: &[SurveyRecord], slots: Option<&BTreeSet<u32>>) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..records.len() {
        let expected = next_slot(records[i - 1].timestamp, slots);
        let actual = records[i].timestamp;
        let actual_hour = actual.date().and_hms_opt(actual.hour(), 0, 0).expect("valid hour");
        if actual_hour != expected {
            runs.push(start..i);
            start = i;
        }
    }
    if !records.is_empty() {
        runs.push(start..records.len());
    }
    runs
}
