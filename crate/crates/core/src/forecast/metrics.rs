use super::ForecastError;
use crate::data::{FEATURES, FEATURE_NAMES};

fn check_lengths(y: &[f64], y_hat: &[f64]) -> Result<(), ForecastError> {
    if y.len() != y_hat.len() || y.is_empty() {
        return Err(ForecastError::LengthMismatch {
            expected: y.len(),
            actual: y_hat.len(),
        });
    }
    Ok(())
}

/// Mean squared error.
pub fn loss_mse(y: &[f64], y_hat: &[f64]) -> Result<f64, ForecastError> {
    check_lengths(y, y_hat)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Mean absolute error.
pub fn metric_mae(y: &[f64], y_hat: &[f64]) -> Result<f64, ForecastError> {
    check_lengths(y, y_hat)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (b - a).abs()).sum::<f64>() / y.len() as f64)
}

/// Cosine similarity of observed and predicted vectors, in [-1, 1].
pub fn metric_cosine_proximity(y: &[f64], y_hat: &[f64]) -> Result<f64, ForecastError> {
    check_lengths(y, y_hat)?;
    let dot: f64 = y.iter().zip(y_hat).map(|(a, b)| a * b).sum();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    let np = y_hat.iter().map(|a| a * a).sum::<f64>().sqrt();
    if ny == 0.0 || np == 0.0 {
        return Err(ForecastError::ZeroVector);
    }
    if y == y_hat {
        return Ok(1.0);
    }
    Ok((dot / (ny * np)).clamp(-1.0, 1.0))
}

/// Negated cosine similarity, the form minimised when cosine proximity is
/// used as a loss.
pub fn cosine_proximity_loss(y: &[f64], y_hat: &[f64]) -> Result<f64, ForecastError> {
    metric_cosine_proximity(y, y_hat).map(|c| -c)
}

/// Sample Pearson correlation between every pair of features. The diagonal
/// is exactly one and the matrix exactly symmetric.
pub fn pearson_matrix(samples: &[[f64; FEATURES]]) -> Result<[[f64; FEATURES]; FEATURES], ForecastError> {
    if samples.len() < 2 {
        return Err(ForecastError::TooFewSamples {
            needed: 2,
            actual: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean: [f64; FEATURES] = std::array::from_fn(|k| samples.iter().map(|s| s[k]).sum::<f64>() / n);
    let mut cov = [[0.0; FEATURES]; FEATURES];
    for s in samples {
        for i in 0..FEATURES {
            for j in i..FEATURES {
                cov[i][j] += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        if !(cov[k][k] > 0.0) {
            return Err(ForecastError::ConstantFeature(name));
        }
    }
    let mut r = [[0.0; FEATURES]; FEATURES];
    for i in 0..FEATURES {
        r[i][i] = 1.0;
        for j in i + 1..FEATURES {
            let v = (cov[i][j] / (cov[i][i].sqrt() * cov[j][j].sqrt())).clamp(-1.0, 1.0);
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok(r)
}
