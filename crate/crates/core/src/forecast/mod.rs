//! Stacked LSTM forecaster trained with backpropagation through time and
//! Adam, plus error metrics and Pearson correlation analysis.

mod adam;
mod cell;
mod dd;
mod gradcheck;
mod metrics;
mod model;
mod network;
mod scalar;
mod train;

use thiserror::Error;

use crate::data::DataError;

pub use adam::{adam_step, AdamConfig, AdamMoments};
pub use cell::{lstm_cell_forward, CellState, GateRecord, LstmCellParams};
pub use gradcheck::{gradient_check, random_network, random_window, GradCheckReport};
pub use metrics::{cosine_proximity_loss, loss_mse, metric_cosine_proximity, metric_mae, pearson_matrix};
pub use model::{
    evaluate, load_model, model_from_json, model_to_json, predict, predict_many, save_model, supervised_set, train,
    Evaluation, TrainedModel, MODEL_MAGIC, MODEL_VERSION,
};
pub use network::{network_forward, Dense, LstmNetwork};
pub use scalar::Scalar;
pub use train::{evaluate_loss, train_network, EpochRecord, Precision, SupervisedSet, TrainConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("BadShape: {0}")]
    BadShape(String),
    #[error("LengthMismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("ZeroVector: cosine proximity of an all-zero vector")]
    ZeroVector,
    #[error("ShapeMismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("EmptySplit: {0} split is empty")]
    EmptySplit(&'static str),
    #[error("NonFiniteLoss: loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("NonFiniteParameter: a weight or bias is not finite")]
    NonFiniteParameter,
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("ConstantFeature: {0} has zero variance")]
    ConstantFeature(&'static str),
    #[error("TooFewSamples: need at least {needed}, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },
    #[error("ModelNotTrained: model has no training history")]
    ModelNotTrained,
    #[error("BadWindow: {0}")]
    BadWindow(String),
    #[error("BadModelFile: {0}")]
    BadModelFile(String),
    #[error("Io: {0}")]
    Io(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl ForecastError {
    pub fn kind(&self) -> &'static str {
        match self {
            ForecastError::DimensionMismatch(_) => "DimensionMismatch",
            ForecastError::BadShape(_) => "BadShape",
            ForecastError::LengthMismatch { .. } => "LengthMismatch",
            ForecastError::ZeroVector => "ZeroVector",
            ForecastError::ShapeMismatch { .. } => "ShapeMismatch",
            ForecastError::EmptySplit(_) => "EmptySplit",
            ForecastError::NonFiniteLoss { .. } => "NonFiniteLoss",
            ForecastError::NonFiniteParameter => "NonFiniteParameter",
            ForecastError::ConfigInvalid(_) => "ConfigInvalid",
            ForecastError::ConstantFeature(_) => "ConstantFeature",
            ForecastError::TooFewSamples { .. } => "TooFewSamples",
            ForecastError::ModelNotTrained => "ModelNotTrained",
            ForecastError::BadWindow(_) => "BadWindow",
            ForecastError::BadModelFile(_) => "BadModelFile",
            ForecastError::Io(_) => "Io",
            ForecastError::Data(e) => e.kind(),
        }
    }
}
