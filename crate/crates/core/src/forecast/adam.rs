use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ForecastError::ConfigInvalid(format!("bad Adam hyperparameters {self:?}")))
        }
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments<F> {
    pub m: Vec<F>,
    pub v: Vec<F>,
}

impl<F: Scalar> AdamMoments<F> {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
        }
    }
}

/// One bias-corrected Adam update; `t` counts steps from 1.
pub fn adam_step<F: Scalar>(
    params: &mut [F],
    grads: &[F],
    moments: &mut AdamMoments<F>,
    t: u64,
    config: &AdamConfig,
) -> Result<(), ForecastError> {
    for len in [grads.len(), moments.m.len(), moments.v.len()] {
        if len != params.len() {
            return Err(ForecastError::ShapeMismatch {
                expected: params.len(),
                actual: len,
            });
        }
    }
    if t == 0 {
        return Err(ForecastError::ConfigInvalid("Adam step index starts at 1".into()));
    }
    let exp = i32::try_from(t).unwrap_or(i32::MAX);
    let b1 = F::of(config.beta1);
    let b2 = F::of(config.beta2);
    let one = F::one();
    let c1 = F::of(1.0 - config.beta1.powi(exp));
    let c2 = F::of(1.0 - config.beta2.powi(exp));
    let lr = F::of(config.learning_rate);
    let eps = F::of(config.epsilon);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut moments.m).zip(&mut moments.v) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
