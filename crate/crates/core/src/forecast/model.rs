//! Fitted models: standardization, training, raw-scale prediction,
//! held-out evaluation and a JSON container for persistence.
//!
//! The container is a JSON object with `magic = "WATERS-LSTM"`, a `version`
//! number, the layer shapes, every matrix flattened row-major (LSTM gate
//! blocks stacked in the order f, i, c, o, columns `[h_{t-1}, x_t]`), the
//! standardization parameters, the training history and the configuration.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::cell::LstmCellParams;
use super::metrics::{loss_mse, metric_cosine_proximity, metric_mae};
use super::network::{Dense, LstmNetwork};
use super::train::{train_network, EpochRecord, Precision, SupervisedSet, TrainConfig};
use super::ForecastError;
use crate::data::{fit_standardizer, DatasetSplits, StandardizationParams, Window, WindowedDataset, FEATURES};

/// Network weights (held in double precision), the standardization fitted on
/// the training split and the per-epoch history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: LstmNetwork<f64>,
    pub standardization: StandardizationParams,
    pub history: Vec<EpochRecord>,
    pub config: TrainConfig,
}

/// Standardized supervised pairs for a range of windows.
pub fn supervised_set(standardized: &WindowedDataset, range: std::ops::Range<usize>) -> SupervisedSet {
    let (inputs, targets) = standardized.pairs(range);
    SupervisedSet { inputs, targets }
}

/// Fits the standardizer on the training rows, then trains on the
/// standardized training split while tracking the validation split.
pub fn train(dataset: &WindowedDataset, splits: &DatasetSplits, config: &TrainConfig) -> Result<TrainedModel, ForecastError> {
    config.validate()?;
    if splits.train.is_empty() {
        return Err(ForecastError::EmptySplit("training"));
    }
    if splits.validation.is_empty() {
        return Err(ForecastError::EmptySplit("validation"));
    }
    let standardization = fit_standardizer(&dataset.rows_for(splits.train.clone()))?;
    let z = dataset.standardized(&standardization);
    let train_set = supervised_set(&z, splits.train.clone());
    let val_set = supervised_set(&z, splits.validation.clone());
    let (network, history) = match config.precision {
        Precision::F64 => train_network::<f64>(&train_set, &val_set, config)?,
        Precision::F32 => {
            let (net, h) = train_network::<f32>(&train_set, &val_set, config)?;
            (net.cast(), h)
        }
    };
    Ok(TrainedModel {
        network,
        standardization,
        history,
        config: config.clone(),
    })
}

impl TrainedModel {
    pub fn is_trained(&self) -> bool {
        !self.history.is_empty()
    }

    fn check_trained(&self) -> Result<(), ForecastError> {
        if self.is_trained() {
            Ok(())
        } else {
            Err(ForecastError::ModelNotTrained)
        }
    }
}

/// Raw-scale prediction of the survey following a raw-scale window.
pub fn predict(model: &TrainedModel, window: &Window) -> Result<[f64; FEATURES], ForecastError> {
    predict_many(model, std::slice::from_ref(window)).map(|v| v[0])
}

pub fn predict_many(model: &TrainedModel, windows: &[Window]) -> Result<Vec<[f64; FEATURES]>, ForecastError> {
    model.check_trained()?;
    let params = &model.standardization;
    let mut z = Vec::with_capacity(windows.len());
    for (k, w) in windows.iter().enumerate() {
        if w.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ForecastError::BadWindow(format!("window {k} has a non-finite value")));
        }
        z.push(std::array::from_fn(|t| params.apply(&w[t])));
    }
    Ok(model
        .network
        .predict_windows(&z)
        .iter()
        .map(|p| params.invert(p))
        .collect())
}

/// Held-out evaluation. Error metrics are computed on standardized values
/// so that the train-mean predictor scores about 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub samples: usize,
    pub mse: f64,
    pub mae: f64,
    /// Mean over samples of the cosine similarity between observed and
    /// predicted feature vectors.
    pub cosine_proximity: f64,
    /// MSE of always predicting the mean standardized training target.
    pub baseline_mse: f64,
    pub observed: Vec<[f64; FEATURES]>,
    pub predicted: Vec<[f64; FEATURES]>,
}

pub fn evaluate(
    model: &TrainedModel,
    dataset: &WindowedDataset,
    splits: &DatasetSplits,
    range: std::ops::Range<usize>,
) -> Result<Evaluation, ForecastError> {
    model.check_trained()?;
    if range.is_empty() {
        return Err(ForecastError::EmptySplit("test"));
    }
    let params = &model.standardization;
    let z = dataset.standardized(params);
    let set = supervised_set(&z, range);
    let pred_z = model.network.predict_windows(&set.inputs);

    let train_targets = supervised_set(&z, splits.train.clone()).targets;
    let n_train = train_targets.len().max(1) as f64;
    let mean: [f64; FEATURES] = std::array::from_fn(|k| train_targets.iter().map(|t| t[k]).sum::<f64>() / n_train);

    let flat_y: Vec<f64> = set.targets.iter().flatten().copied().collect();
    let flat_p: Vec<f64> = pred_z.iter().flatten().copied().collect();
    let flat_b: Vec<f64> = set.targets.iter().flat_map(|_| mean).collect();
    let mut cp = 0.0;
    for (y, p) in set.targets.iter().zip(&pred_z) {
        cp += metric_cosine_proximity(y, p)?;
    }
    Ok(Evaluation {
        samples: set.len(),
        mse: loss_mse(&flat_y, &flat_p)?,
        mae: metric_mae(&flat_y, &flat_p)?,
        cosine_proximity: cp / set.len() as f64,
        baseline_mse: loss_mse(&flat_y, &flat_b)?,
        observed: set.targets.iter().map(|t| params.invert(t)).collect(),
        predicted: pred_z.iter().map(|p| params.invert(p)).collect(),
    })
}

pub const MODEL_MAGIC: &str = "WATERS-LSTM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseFile {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellFile {
    input_size: usize,
    hidden_size: usize,
    gate_order: String,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    magic: String,
    version: u32,
    features: usize,
    timesteps: usize,
    input_dense: Option<DenseFile>,
    layers: Vec<CellFile>,
    output_dense: DenseFile,
    standardization: StandardizationParams,
    history: Vec<EpochRecord>,
    config: TrainConfig,
}

const GATE_ORDER: &str = "f,i,c,o";

fn dense_file(d: &Dense<f64>) -> DenseFile {
    DenseFile {
        inputs: d.inputs(),
        outputs: d.outputs(),
        weights: d.weights.iter().copied().collect(),
        bias: d.bias.to_vec(),
    }
}

fn bad(msg: impl Into<String>) -> ForecastError {
    ForecastError::BadModelFile(msg.into())
}

fn dense_from(f: DenseFile) -> Result<Dense<f64>, ForecastError> {
    let w = Array2::from_shape_vec((f.outputs, f.inputs), f.weights).map_err(|e| bad(format!("dense weights: {e}")))?;
    Dense::new(w, Array1::from(f.bias))
}

pub fn model_to_json(model: &TrainedModel) -> String {
    let net = &model.network;
    let file = ModelFile {
        magic: MODEL_MAGIC.into(),
        version: MODEL_VERSION,
        features: FEATURES,
        timesteps: crate::data::TIMESTEPS,
        input_dense: net.input_dense.as_ref().map(dense_file),
        layers: net
            .layers
            .iter()
            .map(|l| CellFile {
                input_size: l.input_size(),
                hidden_size: l.hidden_size(),
                gate_order: GATE_ORDER.into(),
                weights: l.weights.iter().copied().collect(),
                bias: l.bias.to_vec(),
            })
            .collect(),
        output_dense: dense_file(&net.output_dense),
        standardization: model.standardization.clone(),
        history: model.history.clone(),
        config: model.config.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str) -> Result<TrainedModel, ForecastError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if value.get("magic").and_then(|m| m.as_str()) != Some(MODEL_MAGIC) {
        return Err(bad("missing WATERS-LSTM magic"));
    }
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(MODEL_VERSION) => {}
        other => return Err(bad(format!("unsupported version {other:?}"))),
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
    if file.features != FEATURES || file.timesteps != crate::data::TIMESTEPS {
        return Err(bad("feature or timestep count differs"));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for c in file.layers {
        if c.gate_order != GATE_ORDER {
            return Err(bad(format!("gate order {}", c.gate_order)));
        }
        let w = Array2::from_shape_vec((4 * c.hidden_size, c.hidden_size + c.input_size), c.weights)
            .map_err(|e| bad(format!("cell weights: {e}")))?;
        if c.bias.len() != 4 * c.hidden_size {
            return Err(bad("cell bias length"));
        }
        let cell = LstmCellParams {
            input_size: c.input_size,
            hidden_size: c.hidden_size,
            weights: w,
            bias: Array1::from(c.bias),
        };
        layers.push(cell);
    }
    let input_dense = file.input_dense.map(dense_from).transpose()?;
    let network = LstmNetwork::from_parts(input_dense, layers, dense_from(file.output_dense)?)?;
    if file.standardization.std.iter().any(|s| !(*s > 0.0)) {
        return Err(bad("standardization std must be positive"));
    }
    Ok(TrainedModel {
        network,
        standardization: file.standardization,
        history: file.history,
        config: file.config,
    })
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ForecastError> {
    std::fs::write(path, model_to_json(model)).map_err(|e| ForecastError::Io(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ForecastError> {
    let text = std::fs::read_to_string(path).map_err(|e| ForecastError::Io(format!("{}: {e}", path.display())))?;
    model_from_json(&text)
}
