use std::ops::Range;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::record::{SurveyRecord, FEATURES};
use super::standardize::StandardizationParams;
use super::DataError;

/// Surveys per input window.
pub const TIMESTEPS: usize = 3;

/// Three consecutive surveys, oldest first.
pub type Window = [[f64; FEATURES]; TIMESTEPS];

/// Supervised pairs built over a row table: window `k` uses rows
/// `starts[k] .. starts[k] + 3` as input and row `starts[k] + 3` as target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub timestamps: Vec<NaiveDateTime>,
    pub rows: Vec<[f64; FEATURES]>,
    pub starts: Vec<usize>,
}

/// Chronological, contiguous ranges of window indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

/// Sliding windows (stride 1) over a series assumed gap-free.
pub fn make_windows(records: &[SurveyRecord]) -> Result<WindowedDataset, DataError> {
    make_windows_in_runs(records, std::slice::from_ref(&(0..records.len())))
}

/// Sliding windows that never cross the boundary between two runs.
pub fn make_windows_in_runs(records: &[SurveyRecord], runs: &[Range<usize>]) -> Result<WindowedDataset, DataError> {
    let starts: Vec<usize> = runs
        .iter()
        .filter(|r| r.len() > TIMESTEPS)
        .flat_map(|r| r.start..r.end - TIMESTEPS)
        .collect();
    if starts.is_empty() {
        return Err(DataError::TooFewRecords {
            needed: TIMESTEPS + 1,
            actual: runs.iter().map(|r| r.len()).max().unwrap_or(0),
        });
    }
    Ok(WindowedDataset {
        timestamps: records.iter().map(|r| r.timestamp).collect(),
        rows: records.iter().map(SurveyRecord::features).collect(),
        starts,
    })
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn window(&self, k: usize) -> Window {
        let s = self.starts[k];
        std::array::from_fn(|t| self.rows[s + t])
    }

    pub fn target(&self, k: usize) -> [f64; FEATURES] {
        self.rows[self.starts[k] + TIMESTEPS]
    }

    pub fn target_timestamp(&self, k: usize) -> NaiveDateTime {
        self.timestamps[self.starts[k] + TIMESTEPS]
    }

    /// Inputs and targets for a range of windows.
    pub fn pairs(&self, range: Range<usize>) -> (Vec<Window>, Vec<[f64; FEATURES]>) {
        range.map(|k| (self.window(k), self.target(k))).unzip()
    }

    /// Distinct rows touched by a range of windows, in order.
    pub fn rows_for(&self, range: Range<usize>) -> Vec<[f64; FEATURES]> {
        let idx: std::collections::BTreeSet<usize> = range
            .flat_map(|k| self.starts[k]..=self.starts[k] + TIMESTEPS)
            .collect();
        idx.into_iter().map(|i| self.rows[i]).collect()
    }

    pub fn standardized(&self, params: &StandardizationParams) -> WindowedDataset {
        WindowedDataset {
            timestamps: self.timestamps.clone(),
            rows: self.rows.iter().map(|r| params.apply(r)).collect(),
            starts: self.starts.clone(),
        }
    }
}

/// 50 / 25 / 25 chronological split; sizes round down and the remainder
/// goes to the test split.
pub fn split_dataset(windows: &WindowedDataset) -> DatasetSplits {
    split_counts(windows.len())
}

pub fn split_counts(n: usize) -> DatasetSplits {
    let train = n / 2;
    let validation = n / 4;
    DatasetSplits {
        train: 0..train,
        validation: train..train + validation,
        test: train + validation..n,
    }
}
