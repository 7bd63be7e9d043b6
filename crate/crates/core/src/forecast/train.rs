use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamMoments};
use super::cell::Backprop;
use super::network::{batch_inputs, batch_targets, mse_with_grad, LstmNetwork};
use super::scalar::Scalar;
use super::ForecastError;
use crate::data::{Window, FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_units: usize,
    pub layers: usize,
    pub epochs: usize,
    pub max_hidden: usize,
    pub max_epochs: usize,
    /// ReLU projection of the input features to `hidden_units` before the
    /// first LSTM layer.
    pub input_dense: bool,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub rng_seed: u64,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            hidden_units: 70,
            layers: 2,
            epochs: 40,
            max_hidden: 100,
            max_epochs: 1000,
            input_dense: true,
            batch_size: 32,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            rng_seed: 0,
            precision: Precision::F64,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        let bad = |m: String| Err(ForecastError::ConfigInvalid(m));
        if self.hidden_units == 0 || self.hidden_units > self.max_hidden {
            return bad(format!("hidden_units {} outside 1..={}", self.hidden_units, self.max_hidden));
        }
        if self.epochs == 0 || self.epochs > self.max_epochs {
            return bad(format!("epochs {} outside 1..={}", self.epochs, self.max_epochs));
        }
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        self.adam().validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ForecastError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ForecastError::ConfigInvalid(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_units; self.layers]
    }

    pub(crate) fn dense_width(&self) -> Option<usize> {
        self.input_dense.then_some(self.hidden_units)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Standardized input windows with their targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SupervisedSet {
    pub inputs: Vec<Window>,
    pub targets: Vec<[f64; FEATURES]>,
}

impl SupervisedSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Mean squared error of a network over a set.
pub fn evaluate_loss<F: Scalar>(net: &LstmNetwork<F>, set: &SupervisedSet) -> f64 {
    let preds = net.predict_windows(&set.inputs);
    let sum: f64 = preds
        .iter()
        .zip(&set.targets)
        .flat_map(|(p, y)| p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)))
        .sum();
    sum / (set.len() * FEATURES) as f64
}

/// Initialises a network from the seed and fits it with mini-batch Adam,
/// reshuffling the training set every epoch.
pub fn train_network<F: Scalar>(
    train: &SupervisedSet,
    validation: &SupervisedSet,
    config: &TrainConfig,
) -> Result<(LstmNetwork<F>, Vec<EpochRecord>), ForecastError> {
    config.validate()?;
    if train.is_empty() {
        return Err(ForecastError::EmptySplit("training"));
    }
    if validation.is_empty() {
        return Err(ForecastError::EmptySplit("validation"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut net = LstmNetwork::<F>::glorot(config.dense_width(), &config.hidden(), &mut rng)?;
    let adam = config.adam();
    let mut moments = AdamMoments::zeros(net.parameter_count());
    let mut params = net.flat_parameters();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut step = 0u64;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let xs: Vec<&Window> = chunk.iter().map(|&i| &train.inputs[i]).collect();
            let ys: Vec<&[f64; FEATURES]> = chunk.iter().map(|&i| &train.targets[i]).collect();
            let cache = net.forward_batch(batch_inputs(&xs));
            let (loss, d_out) = mse_with_grad(&cache.output, &batch_targets::<F>(&ys));
            let loss = loss.to_f64_lossy();
            if !loss.is_finite() {
                return Err(ForecastError::NonFiniteLoss {
                    epoch,
                    batch: batch_no + 1,
                    loss,
                });
            }
            weighted += loss * chunk.len() as f64;
            let grads = net.backward(&cache, &d_out, Backprop::Exact).flat_parameters();
            step += 1;
            adam_step(&mut params, &grads, &mut moments, step, &adam)?;
            net.set_flat_parameters(&params)?;
        }
        let val_loss = evaluate_loss(&net, validation);
        if !val_loss.is_finite() {
            return Err(ForecastError::NonFiniteLoss {
                epoch,
                batch: 0,
                loss: val_loss,
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss: weighted / train.len() as f64,
            val_loss,
        });
    }
    Ok((net, history))
}
