//! Correlation-calibrated synthetic surveys.
//!
//! Each feature starts as an independent latent series: a unit-variance
//! AR(1) process blended with daily and seasonal sinusoids. The latent sample
//! is then whitened (its own sample covariance is mapped to the identity) and
//! coloured with the Cholesky factor of the target correlation, so the sample
//! Pearson matrix of the output equals the target up to round-off. Finally
//! each feature is mapped affinely onto a realistic physical range.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::filter::next_slot;
use super::record::{SurveyRecord, FEATURES};
use super::DataError;

/// Sample Pearson matrix of the reference dataset; feature order is
/// temperature, conductivity, oxygen, pH.
pub const REFERENCE_CORRELATION: [[f64; FEATURES]; FEATURES] = [
    [1.00000, -0.20676, -0.18213, -0.17926],
    [-0.20676, 1.00000, -0.17549, 0.24709],
    [-0.18213, -0.17549, 1.00000, -0.33209],
    [-0.17926, 0.24709, -0.33209, 1.00000],
];

/// Knobs of the generator besides size, target and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    pub start: NaiveDateTime,
    pub station_id: String,
    /// Survey hours of each day; `None` produces an hourly series.
    pub slot_hours: Option<BTreeSet<u32>>,
    /// Lag-one autocorrelation of the latent core.
    pub persistence: f64,
    /// Share of latent variance carried by the sinusoidal trends.
    pub trend_share: f64,
    /// Physical mean and standard deviation per feature.
    pub location: [f64; FEATURES],
    pub scale: [f64; FEATURES],
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2009, 1, 1)
                .and_then(|d| d.and_hms_opt(9, 0, 0))
                .expect("valid date"),
            station_id: "Bari".into(),
            slot_hours: Some([9, 12, 18].into_iter().collect()),
            persistence: 0.8,
            trend_share: 0.15,
            // temperature within ~17.75..17.9 C, pH within ~7.0..7.4.
            location: [17.825, 650.0, 7.5, 7.2],
            scale: [0.025, 40.0, 0.6, 0.06],
        }
    }
}

/// Checks a target correlation matrix and projects it onto the positive
/// semi-definite cone when needed (eigenvalue clipping, then rescaling to a
/// unit diagonal).
pub fn validate_correlation(target: &[[f64; FEATURES]; FEATURES]) -> Result<Matrix4<f64>, DataError> {
    let m = Matrix4::from_fn(|i, j| target[i][j]);
    for i in 0..FEATURES {
        if (m[(i, i)] - 1.0).abs() > 1e-9 {
            return Err(DataError::BadCorrelationMatrix(format!("diagonal entry {i} is {}", m[(i, i)])));
        }
        for j in 0..FEATURES {
            if !m[(i, j)].is_finite() || m[(i, j)].abs() > 1.0 {
                return Err(DataError::BadCorrelationMatrix(format!("entry ({i},{j}) = {}", m[(i, j)])));
            }
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 {
                return Err(DataError::BadCorrelationMatrix(format!("not symmetric at ({i},{j})")));
            }
        }
    }
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.min() > 1e-10 {
        return Ok(m);
    }
    let clipped = eig.eigenvalues.map(|v| v.max(1e-6));
    let mut p = eig.eigenvectors * Matrix4::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d = p.diagonal().map(f64::sqrt);
    for i in 0..FEATURES {
        for j in 0..FEATURES {
            p[(i, j)] /= d[i] * d[j];
        }
    }
    Ok(p)
}

/// Generates `n` surveys whose sample Pearson matrix matches `target`.
pub fn generate_synthetic(
    n: usize,
    target: &[[f64; FEATURES]; FEATURES],
    seed: u64,
    options: &SyntheticOptions,
) -> Result<Vec<SurveyRecord>, DataError> {
    let target = validate_correlation(target)?;
    if n < FEATURES + 1 {
        return Err(DataError::TooFewRecords { needed: FEATURES + 1, actual: n });
    }
    let colour = target
        .cholesky()
        .ok_or_else(|| DataError::BadCorrelationMatrix("not positive definite".into()))?
        .l();

    let mut timestamps = Vec::with_capacity(n);
    let mut ts = options.start;
    for _ in 0..n {
        timestamps.push(ts);
        ts = next_slot(ts, options.slot_hours.as_ref());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = options.persistence;
    let innovation = (1.0 - phi * phi).sqrt();
    let mut core = [0.0f64; FEATURES];
    for c in core.iter_mut() {
        *c = StandardNormal.sample(&mut rng);
    }
    let trend_w = options.trend_share.sqrt();
    let core_w = (1.0 - options.trend_share).sqrt();
    let mut latent = DMatrix::<f64>::zeros(n, FEATURES);
    for (row, ts) in timestamps.iter().enumerate() {
        let day = std::f64::consts::TAU * f64::from(ts.hour()) / 24.0;
        let season = std::f64::consts::TAU * f64::from(ts.ordinal0()) / 365.25;
        let trends = [day.sin(), season.cos(), season.sin(), day.cos()];
        for k in 0..FEATURES {
            let e: f64 = StandardNormal.sample(&mut rng);
            core[k] = phi * core[k] + innovation * e;
            latent[(row, k)] = core_w * core[k] + trend_w * std::f64::consts::SQRT_2 * trends[k];
        }
    }

    // Whiten the sample, then colour it with the target.
    let mean = latent.row_mean();
    for mut r in latent.row_iter_mut() {
        r -= &mean;
    }
    let cov = latent.transpose() * &latent / n as f64;
    let whiten = cov
        .cholesky()
        .ok_or_else(|| DataError::BadCorrelationMatrix("degenerate latent sample".into()))?
        .l()
        .try_inverse()
        .expect("triangular factor of a positive definite matrix is invertible");
    let mixing = DMatrix::from_fn(FEATURES, FEATURES, |i, j| colour[(i, j)]) * whiten;
    let z = &latent * mixing.transpose();

    Ok(timestamps
        .into_iter()
        .enumerate()
        .map(|(row, timestamp)| {
            let v: [f64; FEATURES] = std::array::from_fn(|k| options.location[k] + options.scale[k] * z[(row, k)]);
            SurveyRecord {
                timestamp,
                station_id: options.station_id.clone(),
                temperature: v[0],
                conductivity: v[1],
                oxygen: v[2],
                ph: v[3].clamp(0.0, 14.0),
            }
        })
        .collect())
}
