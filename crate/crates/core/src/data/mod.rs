//! Survey ingestion, filtering, z-score standardization, supervised windows,
//! chronological splits and a synthetic survey generator.

mod filter;
mod record;
mod standardize;
mod synthetic;
mod window;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{contiguous_runs, filter_surveys, next_slot, FilterCriteria};
pub use record::{
    format_timestamp, load_surveys, parse_timestamp, read_surveys, write_surveys, LoadedSurveys, SurveyRecord,
    TextFormat, FEATURES, FEATURE_NAMES, SURVEY_HEADER,
};
pub use standardize::{apply_standardizer, column_moments, fit_standardizer, invert_standardizer, StandardizationParams};
pub use synthetic::{generate_synthetic, validate_correlation, SyntheticOptions, REFERENCE_CORRELATION};
pub use window::{
    make_windows, make_windows_in_runs, split_counts, split_dataset, DatasetSplits, Window, WindowedDataset, TIMESTEPS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("FileNotFound: {0}")]
    FileNotFound(String),
    #[error("Io: {0}")]
    Io(String),
    #[error("ParseError: line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("Invalid: line {line}: {reason}")]
    Invalid { line: u64, reason: String },
    #[error("EmptyFile: no survey rows")]
    EmptyFile,
    #[error("BadCriteria: {0}")]
    BadCriteria(String),
    #[error("ConstantFeature: {0} has zero variance")]
    ConstantFeature(&'static str),
    #[error("EmptySplit: {0} split is empty")]
    EmptySplit(&'static str),
    #[error("TooFewRecords: need at least {needed}, got {actual}")]
    TooFewRecords { needed: usize, actual: usize },
    #[error("BadCorrelationMatrix: {0}")]
    BadCorrelationMatrix(String),
}

impl DataError {
    pub fn kind(&self) -> &'static str {
        match self {
            DataError::FileNotFound(_) => "FileNotFound",
            DataError::Io(_) => "Io",
            DataError::Parse { .. } => "ParseError",
            DataError::Invalid { .. } => "Invalid",
            DataError::EmptyFile => "EmptyFile",
            DataError::BadCriteria(_) => "BadCriteria",
            DataError::ConstantFeature(_) => "ConstantFeature",
            DataError::EmptySplit(_) => "EmptySplit",
            DataError::TooFewRecords { .. } => "TooFewRecords",
            DataError::BadCorrelationMatrix(_) => "BadCorrelationMatrix",
        }
    }
}

/// A windowed dataset with its split, the unit written by reproducibility
/// snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSnapshot {
    pub format: String,
    pub version: u32,
    pub dataset: WindowedDataset,
    pub splits: DatasetSplits,
}

impl DatasetSnapshot {
    pub const FORMAT: &'static str = "waters-windows";

    pub fn new(dataset: WindowedDataset, splits: DatasetSplits) -> Self {
        Self {
            format: Self::FORMAT.into(),
            version: 1,
            dataset,
            splits,
        }
    }
}
