use rand::Rng;
use serde::Serialize;

use super::cell::Backprop;
use super::dd::Dd;
use super::network::{batch_inputs, batch_targets, mse_with_grad, LstmNetwork};
use super::ForecastError;
use crate::data::{Window, FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub parameters: usize,
    pub max_relative_error: f64,
    /// Index into the flattened parameter vector of the worst entry.
    pub worst_parameter: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Reads consecutive entries of the flattened parameter vector.
struct Cursor<'a> {
    values: &'a [Dd],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> &'a [Dd] {
        let out = &self.values[self.at..self.at + n];
        self.at += n;
        out
    }
}

fn affine(w: &[Dd], b: &[Dd], x: &[Dd]) -> Vec<Dd> {
    let cols = x.len();
    (0..b.len())
        .map(|r| (0..cols).fold(b[r], |acc, c| acc + w[r * cols + c] * x[c]))
        .collect()
}

/// One-sample MSE evaluated in double-double arithmetic with plain loops,
/// reading parameters in the order of `LstmNetwork::flat_parameters`.
fn dd_loss(net: &LstmNetwork<f64>, params: &[Dd], window: &Window, target: &[f64; FEATURES]) -> Dd {
    let mut cur = Cursor { values: params, at: 0 };
    let mut seq: Vec<Vec<Dd>> = window.iter().map(|x| x.iter().map(|&v| Dd::new(v)).collect()).collect();
    if let Some(d) = &net.input_dense {
        let w = cur.take(d.inputs() * d.outputs());
        let b = cur.take(d.outputs());
        seq = seq.iter().map(|x| affine(w, b, x).into_iter().map(Dd::relu).collect()).collect();
    }
    for layer in &net.layers {
        let h_len = layer.hidden_size();
        let w = cur.take(4 * h_len * (h_len + layer.input_size()));
        let b = cur.take(4 * h_len);
        let mut h = vec![Dd::ZERO; h_len];
        let mut c = vec![Dd::ZERO; h_len];
        let mut out = Vec::with_capacity(seq.len());
        for x in &seq {
            let concat: Vec<Dd> = h.iter().chain(x.iter()).copied().collect();
            let z = affine(w, b, &concat);
            for j in 0..h_len {
                let f = z[j].sigmoid();
                let i = z[h_len + j].sigmoid();
                let g = z[2 * h_len + j].tanh();
                let o = z[3 * h_len + j].sigmoid();
                c[j] = f * c[j] + i * g;
                h[j] = o * c[j].tanh();
            }
            out.push(h.clone());
        }
        seq = out;
    }
    let d = &net.output_dense;
    let w = cur.take(d.inputs() * d.outputs());
    let b = cur.take(d.outputs());
    let pred = affine(w, b, seq.last().expect("non-empty window"));
    let sum = pred.iter().zip(target).fold(Dd::ZERO, |acc, (&p, &y)| {
        let e = p - Dd::new(y);
        acc + e * e
    });
    sum / Dd::new(FEATURES as f64)
}

/// Compares the backpropagated gradient of the one-sample MSE with central
/// finite differences for every parameter. The perturbed losses are
/// evaluated in double-double arithmetic so that the finite differences
/// stay accurate for gradients far below one.
pub fn gradient_check(
    net: &LstmNetwork<f64>,
    window: &Window,
    target: &[f64; FEATURES],
    epsilon: f64,
) -> GradCheckReport {
    check_with(net, window, target, epsilon, Backprop::Exact)
}

pub(crate) fn check_with(
    net: &LstmNetwork<f64>,
    window: &Window,
    target: &[f64; FEATURES],
    epsilon: f64,
    mode: Backprop,
) -> GradCheckReport {
    let cache = net.forward_batch(batch_inputs(&[window]));
    let (_, d_out) = mse_with_grad(&cache.output, &batch_targets(&[target]));
    let analytic = net.backward(&cache, &d_out, mode).flat_parameters();

    let mut values: Vec<Dd> = net.flat_parameters().into_iter().map(Dd::new).collect();
    let mut report = GradCheckReport {
        parameters: values.len(),
        max_relative_error: 0.0,
        worst_parameter: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let step = Dd::new(epsilon);
    for k in 0..values.len() {
        let base = values[k];
        values[k] = base + step;
        let up = dd_loss(net, &values, window, target);
        values[k] = base - step;
        let down = dd_loss(net, &values, window, target);
        values[k] = base;

        let numeric = ((up - down) / (step + step)).hi;
        let a = analytic[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
        if rel > report.max_relative_error || k == 0 {
            report.max_relative_error = rel;
            report.worst_parameter = k;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report
}

/// A small random network for gradient checking: Glorot weights with
/// biases drawn uniformly from [-0.5, 0.5].
pub fn random_network<R: Rng>(
    input_dense: Option<usize>,
    hidden: &[usize],
    rng: &mut R,
) -> Result<LstmNetwork<f64>, ForecastError> {
    let mut net = LstmNetwork::<f64>::glorot(input_dense, hidden, rng)?;
    if let Some(d) = &mut net.input_dense {
        d.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    for l in &mut net.layers {
        l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    net.output_dense.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    Ok(net)
}

pub fn random_window<R: Rng>(rng: &mut R) -> (Window, [f64; FEATURES]) {
    let w = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)));
    let y = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    (w, y)
}
