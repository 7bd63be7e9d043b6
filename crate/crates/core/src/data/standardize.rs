use serde::{Deserialize, Serialize};

use super::record::{FEATURES, FEATURE_NAMES};
use super::DataError;

/// Per-feature z-score parameters, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: [f64; FEATURES],
    /// Population standard deviation; always positive.
    pub std: [f64; FEATURES],
}

/// Fits mean and population standard deviation per feature.
pub fn fit_standardizer(rows: &[[f64; FEATURES]]) -> Result<StandardizationParams, DataError> {
    if rows.is_empty() {
        return Err(DataError::EmptySplit("training"));
    }
    let n = rows.len() as f64;
    let mut mean = [0.0; FEATURES];
    let mut std = [0.0; FEATURES];
    for k in 0..FEATURES {
        mean[k] = rows.iter().map(|r| r[k]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
        std[k] = var.sqrt();
        if !(std[k] > 0.0) || std[k] <= mean[k].abs() * 1e-15 {
            return Err(DataError::ConstantFeature(FEATURE_NAMES[k]));
        }
    }
    Ok(StandardizationParams { mean, std })
}

impl StandardizationParams {
    pub fn apply(&self, row: &[f64; FEATURES]) -> [f64; FEATURES] {
        std::array::from_fn(|k| (row[k] - self.mean[k]) / self.std[k])
    }

    pub fn invert(&self, z: &[f64; FEATURES]) -> [f64; FEATURES] {
        std::array::from_fn(|k| z[k] * self.std[k] + self.mean[k])
    }
}

pub fn apply_standardizer(params: &StandardizationParams, rows: &[[f64; FEATURES]]) -> Vec<[f64; FEATURES]> {
    rows.iter().map(|r| params.apply(r)).collect()
}

pub fn invert_standardizer(params: &StandardizationParams, rows: &[[f64; FEATURES]]) -> Vec<[f64; FEATURES]> {
    rows.iter().map(|r| params.invert(r)).collect()
}

/// Per-feature mean and population std of a set of rows.
pub fn column_moments(rows: &[[f64; FEATURES]]) -> ([f64; FEATURES], [f64; FEATURES]) {
    let n = rows.len() as f64;
    let mean: [f64; FEATURES] = std::array::from_fn(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n);
    let std = std::array::from_fn(|k| (rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n).sqrt());
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows() -> Vec<[f64; 4]> {
        vec![
            [17.80, 640.0, 7.4, 7.10],
            [17.82, 655.0, 7.9, 7.22],
            [17.85, 610.0, 6.8, 7.31],
            [17.77, 702.0, 8.1, 7.05],
        ]
    }

    #[test]
    fn mean_maps_to_zero_and_sigma_to_one() {
        let p = fit_standardizer(&rows()).unwrap();
        assert_eq!(p.apply(&p.mean), [0.0; 4]);
        let shifted: [f64; 4] = std::array::from_fn(|k| p.mean[k] + p.std[k]);
        for z in p.apply(&shifted) {
            assert!((z - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transformed_moments() {
        let r = rows();
        let p = fit_standardizer(&r).unwrap();
        let (m, s) = column_moments(&apply_standardizer(&p, &r));
        for k in 0..4 {
            assert!(m[k].abs() < 1e-9);
            assert!((s[k] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_feature() {
        let r = vec![[1.0, 2.0, 3.0, 7.0], [2.0, 3.0, 4.0, 7.0]];
        assert_eq!(fit_standardizer(&r), Err(DataError::ConstantFeature("ph")));
        assert!(fit_standardizer(&[]).is_err());
    }

    proptest! {
        #[test]
        fn invert_apply_roundtrip(v in proptest::array::uniform4(-1e3f64..1e3)) {
            let p = fit_standardizer(&rows()).unwrap();
            let back = p.invert(&p.apply(&v));
            for k in 0..4 {
                prop_assert!((back[k] - v[k]).abs() < 1e-9);
            }
        }
    }
}
