//! Stacked LSTM: optional ReLU input projection, LSTM layers unrolled over
//! the window with zero initial state, and a linear output layer.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::cell::{step_backward, step_forward, Backprop, LstmCellParams, StepCache};
use super::scalar::{relu, Scalar};
use super::ForecastError;
use crate::data::{Window, FEATURES, TIMESTEPS};

/// Affine map `y = W x + b` with `W` of shape outputs x inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    pub(crate) weights: Array2<F>,
    pub(crate) bias: Array1<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn new(weights: Array2<F>, bias: Array1<F>) -> Result<Self, ForecastError> {
        if weights.nrows() != bias.len() || weights.ncols() == 0 || bias.is_empty() {
            return Err(ForecastError::DimensionMismatch(format!(
                "dense weights {:?} with bias {}",
                weights.dim(),
                bias.len()
            )));
        }
        if !weights.iter().chain(bias.iter()).all(|v| v.is_finite()) {
            return Err(ForecastError::NonFiniteParameter);
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let mut d = Self::zeros(inputs, outputs);
        d.weights.mapv_inplace(|_| F::of(dist.sample(rng)));
        d
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> ArrayView2<'_, F> {
        self.weights.view()
    }

    pub fn bias(&self) -> &Array1<F> {
        &self.bias
    }

    fn apply(&self, x: &Array2<F>) -> Array2<F> {
        self.weights.dot(x) + &self.bias.view().insert_axis(Axis(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmNetwork<F> {
    pub(crate) input_dense: Option<Dense<F>>,
    pub(crate) layers: Vec<LstmCellParams<F>>,
    pub(crate) output_dense: Dense<F>,
}

/// Everything the backward pass needs from one batched forward pass.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache<F> {
    inputs: Vec<Array2<F>>,
    dense_pre: Vec<Array2<F>>,
    steps: Vec<Vec<StepCache<F>>>,
    pub output: Array2<F>,
}

impl<F: Scalar> LstmNetwork<F> {
    pub fn from_parts(
        input_dense: Option<Dense<F>>,
        layers: Vec<LstmCellParams<F>>,
        output_dense: Dense<F>,
    ) -> Result<Self, ForecastError> {
        if layers.is_empty() {
            return Err(ForecastError::DimensionMismatch("network needs at least one layer".into()));
        }
        let mut width = FEATURES;
        if let Some(d) = &input_dense {
            if d.inputs() != FEATURES {
                return Err(ForecastError::DimensionMismatch(format!(
                    "input layer takes {} features, expected {FEATURES}",
                    d.inputs()
                )));
            }
            width = d.outputs();
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.input_size() != width {
                return Err(ForecastError::DimensionMismatch(format!(
                    "layer {k} takes width {}, previous width is {width}",
                    layer.input_size()
                )));
            }
            layer.check_finite()?;
            width = layer.hidden_size();
        }
        if output_dense.inputs() != width || output_dense.outputs() != FEATURES {
            return Err(ForecastError::DimensionMismatch(format!(
                "output layer is {}x{}, expected {FEATURES}x{width}",
                output_dense.outputs(),
                output_dense.inputs()
            )));
        }
        Ok(Self {
            input_dense,
            layers,
            output_dense,
        })
    }

    /// All-zero network with the given projection width and layer widths.
    pub fn zeros(input_dense: Option<usize>, hidden: &[usize]) -> Result<Self, ForecastError> {
        let mut width = FEATURES;
        let dense = input_dense.map(|w| {
            let d = Dense::zeros(FEATURES, w);
            width = w;
            d
        });
        let mut layers = Vec::with_capacity(hidden.len());
        for &h in hidden {
            layers.push(LstmCellParams::zeros(width, h));
            width = h;
        }
        check_widths(input_dense, hidden)?;
        Self::from_parts(dense, layers, Dense::zeros(width, FEATURES))
    }

    /// Glorot-initialised network; draws are taken in parameter order.
    pub fn glorot<R: Rng>(input_dense: Option<usize>, hidden: &[usize], rng: &mut R) -> Result<Self, ForecastError> {
        check_widths(input_dense, hidden)?;
        let mut width = FEATURES;
        let dense = input_dense.map(|w| {
            let d = Dense::glorot(FEATURES, w, rng);
            width = w;
            d
        });
        let mut layers = Vec::with_capacity(hidden.len());
        for &h in hidden {
            layers.push(LstmCellParams::glorot(width, h, rng));
            width = h;
        }
        let out = Dense::glorot(width, FEATURES, rng);
        Self::from_parts(dense, layers, out)
    }

    pub fn layers(&self) -> &[LstmCellParams<F>] {
        &self.layers
    }

    pub fn input_dense(&self) -> Option<&Dense<F>> {
        self.input_dense.as_ref()
    }

    pub fn output_dense(&self) -> &Dense<F> {
        &self.output_dense
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.hidden_size()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().map(|t| t.len()).sum()
    }

    fn tensors(&self) -> impl Iterator<Item = ndarray::ArrayViewD<'_, F>> {
        let dense = self
            .input_dense
            .iter()
            .flat_map(|d| [d.weights.view().into_dyn(), d.bias.view().into_dyn()]);
        let cells = self
            .layers
            .iter()
            .flat_map(|l| [l.weights.view().into_dyn(), l.bias.view().into_dyn()]);
        dense.chain(cells).chain([
            self.output_dense.weights.view().into_dyn(),
            self.output_dense.bias.view().into_dyn(),
        ])
    }

    /// Parameters flattened in a fixed order: input layer, LSTM layers,
    /// output layer; each matrix row-major followed by its bias.
    pub fn flat_parameters(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for t in self.tensors() {
            out.extend(t.iter().copied());
        }
        out
    }

    pub fn set_flat_parameters(&mut self, values: &[F]) -> Result<(), ForecastError> {
        if values.len() != self.parameter_count() {
            return Err(ForecastError::ShapeMismatch {
                expected: self.parameter_count(),
                actual: values.len(),
            });
        }
        let mut it = values.iter().copied();
        let mut fill = |a: &mut dyn Iterator<Item = &mut F>| a.for_each(|v| *v = it.next().expect("length checked"));
        if let Some(d) = &mut self.input_dense {
            fill(&mut d.weights.iter_mut());
            fill(&mut d.bias.iter_mut());
        }
        for l in &mut self.layers {
            fill(&mut l.weights.iter_mut());
            fill(&mut l.bias.iter_mut());
        }
        fill(&mut self.output_dense.weights.iter_mut());
        fill(&mut self.output_dense.bias.iter_mut());
        Ok(())
    }

    /// Same architecture with every parameter set to zero.
    pub(crate) fn zeroed(&self) -> Self {
        let mut z = self.clone();
        let n = z.parameter_count();
        z.set_flat_parameters(&vec![F::zero(); n]).expect("same shape");
        z
    }

    pub fn cast<G: Scalar>(&self) -> LstmNetwork<G> {
        let c2 = |a: &Array2<F>| a.mapv(|v| G::of(v.to_f64_lossy()));
        let c1 = |a: &Array1<F>| a.mapv(|v| G::of(v.to_f64_lossy()));
        LstmNetwork {
            input_dense: self.input_dense.as_ref().map(|d| Dense {
                weights: c2(&d.weights),
                bias: c1(&d.bias),
            }),
            layers: self
                .layers
                .iter()
                .map(|l| LstmCellParams {
                    input_size: l.input_size,
                    hidden_size: l.hidden_size,
                    weights: c2(&l.weights),
                    bias: c1(&l.bias),
                })
                .collect(),
            output_dense: Dense {
                weights: c2(&self.output_dense.weights),
                bias: c1(&self.output_dense.bias),
            },
        }
    }

    /// Forward pass over a batch; `inputs[t]` holds timestep `t` as a
    /// features x batch matrix.
    pub(crate) fn forward_batch(&self, inputs: Vec<Array2<F>>) -> ForwardCache<F> {
        let batch = inputs[0].ncols();
        let mut dense_pre = Vec::new();
        let mut seq: Vec<Array2<F>> = match &self.input_dense {
            Some(d) => inputs
                .iter()
                .map(|x| {
                    let pre = d.apply(x);
                    let act = pre.mapv(relu);
                    dense_pre.push(pre);
                    act
                })
                .collect(),
            None => inputs.clone(),
        };
        let mut steps = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut h = Array2::zeros((layer.hidden_size(), batch));
            let mut c = Array2::zeros((layer.hidden_size(), batch));
            let mut caches = Vec::with_capacity(seq.len());
            for x in &seq {
                let cache = step_forward(layer, x.view(), h.view(), c.view());
                h = cache.h.clone();
                c = cache.c.clone();
                caches.push(cache);
            }
            seq = caches.iter().map(|k| k.h.clone()).collect();
            steps.push(caches);
        }
        let last = seq.last().expect("non-empty window");
        let output = self.output_dense.apply(last);
        ForwardCache {
            inputs,
            dense_pre,
            steps,
            output,
        }
    }

    /// Gradients of a loss with respect to every parameter, given the loss
    /// gradient `d_output` (features x batch) of the forward pass in `cache`.
    pub(crate) fn backward(&self, cache: &ForwardCache<F>, d_output: &Array2<F>, mode: Backprop) -> Self {
        let mut grads = self.zeroed();
        let top = cache.steps.last().expect("at least one layer");
        let h_last = &top.last().expect("non-empty window").h;
        grads.output_dense.weights = d_output.dot(&h_last.t());
        grads.output_dense.bias = d_output.sum_axis(Axis(1));

        let steps = cache.inputs.len();
        let batch = d_output.ncols();
        let mut d_seq: Vec<Array2<F>> = (0..steps)
            .map(|_| Array2::zeros((self.layers.last().expect("layer").hidden_size(), batch)))
            .collect();
        d_seq[steps - 1] = self.output_dense.weights.t().dot(d_output);

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let hsz = layer.hidden_size();
            let mut dh_next = Array2::<F>::zeros((hsz, batch));
            let mut dc_next = Array2::<F>::zeros((hsz, batch));
            let mut d_below = vec![Array2::<F>::zeros((0, 0)); steps];
            for t in (0..steps).rev() {
                let dh = &d_seq[t] + &dh_next;
                let (dh_prev, dc_prev, dx) =
                    step_backward(layer, &cache.steps[l][t], &dh, &dc_next, &mut grads.layers[l], mode);
                dh_next = dh_prev;
                dc_next = dc_prev;
                d_below[t] = dx;
            }
            d_seq = d_below;
        }

        if let Some(g) = &mut grads.input_dense {
            for t in 0..steps {
                let mut du = d_seq[t].clone();
                Zip::from(&mut du)
                    .and(&cache.dense_pre[t])
                    .for_each(|du, &pre| {
                        if pre <= F::zero() {
                            *du = F::zero();
                        }
                    });
                g.weights = &g.weights + &du.dot(&cache.inputs[t].t());
                g.bias = &g.bias + &du.sum_axis(Axis(1));
            }
        }
        grads
    }

    /// Predictions for many standardized windows, evaluated in chunks.
    pub fn predict_windows(&self, windows: &[Window]) -> Vec<[f64; FEATURES]> {
        let mut out = Vec::with_capacity(windows.len());
        for chunk in windows.chunks(256) {
            let refs: Vec<&Window> = chunk.iter().collect();
            let cache = self.forward_batch(batch_inputs(&refs));
            for b in 0..chunk.len() {
                out.push(std::array::from_fn(|k| cache.output[(k, b)].to_f64_lossy()));
            }
        }
        out
    }
}

fn check_widths(input_dense: Option<usize>, hidden: &[usize]) -> Result<(), ForecastError> {
    if hidden.is_empty() || hidden.contains(&0) || input_dense == Some(0) {
        return Err(ForecastError::DimensionMismatch(format!(
            "layer widths must be positive, got input {input_dense:?} hidden {hidden:?}"
        )));
    }
    Ok(())
}

/// Stacks windows into per-timestep features x batch matrices.
pub(crate) fn batch_inputs<F: Scalar>(windows: &[&Window]) -> Vec<Array2<F>> {
    (0..TIMESTEPS)
        .map(|t| Array2::from_shape_fn((FEATURES, windows.len()), |(f, b)| F::of(windows[b][t][f])))
        .collect()
}

pub(crate) fn batch_targets<F: Scalar>(targets: &[&[f64; FEATURES]]) -> Array2<F> {
    Array2::from_shape_fn((FEATURES, targets.len()), |(f, b)| F::of(targets[b][f]))
}

/// Mean squared error over every entry and its gradient.
pub(crate) fn mse_with_grad<F: Scalar>(pred: &Array2<F>, target: &Array2<F>) -> (F, Array2<F>) {
    let n = F::of(pred.len() as f64);
    let diff = pred - target;
    let loss = diff.iter().fold(F::zero(), |acc, &d| acc + d * d) / n;
    let grad = diff * (F::of(2.0) / n);
    (loss, grad)
}

/// Runs one standardized window (timesteps x features) through the network.
pub fn network_forward<F: Scalar>(net: &LstmNetwork<F>, window: ArrayView2<F>) -> Result<Array1<F>, ForecastError> {
    if window.dim() != (TIMESTEPS, FEATURES) {
        return Err(ForecastError::BadShape(format!(
            "window must be {TIMESTEPS}x{FEATURES}, got {}x{}",
            window.nrows(),
            window.ncols()
        )));
    }
    let inputs = (0..TIMESTEPS)
        .map(|t| window.row(t).to_owned().insert_axis(Axis(1)))
        .collect();
    Ok(net.forward_batch(inputs).output.column(0).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_predicts_zero() {
        let net = LstmNetwork::<f64>::zeros(Some(5), &[3, 2]).unwrap();
        let w = Array2::from_shape_fn((3, 4), |(t, f)| (t * 4 + f) as f64 * 0.1);
        let y = network_forward(&net, w.view()).unwrap();
        assert_eq!(y.len(), 4);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_bias_passes_through_zero_network() {
        let mut net = LstmNetwork::<f64>::zeros(None, &[2]).unwrap();
        net.output_dense.bias = array![1.0, -2.0, 0.5, 3.0];
        let y = network_forward(&net, Array2::zeros((3, 4)).view()).unwrap();
        assert_eq!(y, array![1.0, -2.0, 0.5, 3.0]);
    }

    #[test]
    fn bad_window_shape() {
        let net = LstmNetwork::<f64>::zeros(None, &[2]).unwrap();
        let err = network_forward(&net, Array2::zeros((4, 3)).view()).unwrap_err();
        assert!(matches!(err, ForecastError::BadShape(_)));
    }

    #[test]
    fn layer_widths_are_checked() {
        assert!(LstmNetwork::<f64>::zeros(None, &[]).is_err());
        assert!(LstmNetwork::<f64>::zeros(Some(0), &[3]).is_err());
        let err = LstmNetwork::from_parts(
            None,
            vec![LstmCellParams::<f64>::zeros(4, 3), LstmCellParams::zeros(2, 2)],
            Dense::zeros(2, 4),
        )
        .unwrap_err();
        assert!(matches!(err, ForecastError::DimensionMismatch(_)));
    }

    #[test]
    fn flat_parameter_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = LstmNetwork::<f64>::glorot(Some(3), &[2, 2], &mut rng).unwrap();
        let flat = net.flat_parameters();
        assert_eq!(flat.len(), net.parameter_count());
        assert_eq!(flat.len(), (3 * 4 + 3) + (8 * 5 + 8) + (8 * 4 + 8) + (4 * 2 + 4));
        let mut other = net.zeroed();
        other.set_flat_parameters(&flat).unwrap();
        assert_eq!(other, net);
        assert!(other.set_flat_parameters(&flat[1..]).is_err());
    }

    #[test]
    fn batch_matches_single_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = LstmNetwork::<f64>::glorot(Some(6), &[5, 4], &mut rng).unwrap();
        let windows: Vec<Window> = (0..7)
            .map(|_| std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))))
            .collect();
        let batch = net.predict_windows(&windows);
        for (w, p) in windows.iter().zip(&batch) {
            let a = Array2::from_shape_fn((3, 4), |(t, f)| w[t][f]);
            let single = network_forward(&net, a.view()).unwrap();
            for k in 0..4 {
                assert!((single[k] - p[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cast_keeps_predictions_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = LstmNetwork::<f64>::glorot(None, &[3], &mut rng).unwrap();
        let single: LstmNetwork<f32> = net.cast();
        let w: Window = [[0.1, -0.2, 0.3, 0.4], [0.5, 0.6, -0.7, 0.8], [0.9, 1.0, 1.1, -1.2]];
        let a = net.predict_windows(&[w])[0];
        let b = single.predict_windows(&[w])[0];
        for k in 0..4 {
            assert!((a[k] - b[k]).abs() < 1e-5);
        }
    }
}
