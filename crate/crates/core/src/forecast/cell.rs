//! One LSTM cell:
//!
//! ```text
//! f_t = sigmoid(W_f [h_{t-1}, x_t] + b_f)
//! i_t = sigmoid(W_i [h_{t-1}, x_t] + b_i)
//! g_t = tanh(W_c [h_{t-1}, x_t] + b_c)        candidate state
//! C_t = f_t * C_{t-1} + i_t * g_t
//! o_t = sigmoid(W_o [h_{t-1}, x_t] + b_o)
//! h_t = o_t * tanh(C_t)
//! ```
//!
//! The four gate matrices are stored stacked in one `4H x (H + I)` array in
//! the order f, i, c, o; the columns multiply `[h_{t-1}, x_t]`.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::scalar::{sigmoid, Scalar};
use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Gate {
    Forget = 0,
    Input = 1,
    Candidate = 2,
    Output = 3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams<F> {
    pub(crate) input_size: usize,
    pub(crate) hidden_size: usize,
    pub(crate) weights: Array2<F>,
    pub(crate) bias: Array1<F>,
}

/// Hidden state `h_t` and memory cell `C_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState<F> {
    pub h: Array1<F>,
    pub c: Array1<F>,
}

impl<F: Scalar> CellState<F> {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Array1::zeros(hidden),
            c: Array1::zeros(hidden),
        }
    }
}

/// Gate activations of one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRecord<F> {
    pub forget: Array1<F>,
    pub input: Array1<F>,
    pub candidate: Array1<F>,
    pub output: Array1<F>,
}

impl<F: Scalar> LstmCellParams<F> {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_size,
            hidden_size,
            weights: Array2::zeros((4 * hidden_size, hidden_size + input_size)),
            bias: Array1::zeros(4 * hidden_size),
        }
    }

    /// Glorot-uniform gate matrices, zero biases except a forget-gate bias
    /// of one.
    pub fn glorot<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        let limit = (6.0 / (2 * hidden_size + input_size) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        p.weights.mapv_inplace(|_| F::of(dist.sample(rng)));
        p.bias.slice_mut(s![0..hidden_size]).fill(F::one());
        p
    }

    /// Builds a cell from its four gate matrices and bias vectors, given in
    /// the order forget, input, candidate, output.
    pub fn from_gates(weights: [Array2<F>; 4], biases: [Array1<F>; 4]) -> Result<Self, ForecastError> {
        let (hidden, width) = weights[0].dim();
        if hidden == 0 || width <= hidden {
            return Err(ForecastError::DimensionMismatch(format!(
                "gate matrix {hidden}x{width} must be H x (H + I) with I >= 1"
            )));
        }
        if weights.iter().any(|w| w.dim() != (hidden, width)) || biases.iter().any(|b| b.len() != hidden) {
            return Err(ForecastError::DimensionMismatch("gate shapes differ".into()));
        }
        let views: Vec<ArrayView2<F>> = weights.iter().map(|w| w.view()).collect();
        let bviews: Vec<ArrayView1<F>> = biases.iter().map(|b| b.view()).collect();
        let p = Self {
            input_size: width - hidden,
            hidden_size: hidden,
            weights: concatenate(Axis(0), &views).expect("same widths"),
            bias: concatenate(Axis(0), &bviews).expect("1-d"),
        };
        p.check_finite()?;
        Ok(p)
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub(crate) fn gate_weights(&self, gate: Gate) -> ArrayView2<'_, F> {
        let h = self.hidden_size;
        let g = gate as usize;
        self.weights.slice(s![g * h..(g + 1) * h, ..])
    }

    pub(crate) fn gate_bias(&self, gate: Gate) -> ArrayView1<'_, F> {
        let h = self.hidden_size;
        let g = gate as usize;
        self.bias.slice(s![g * h..(g + 1) * h])
    }

    pub fn w_f(&self) -> ArrayView2<'_, F> {
        self.gate_weights(Gate::Forget)
    }
    pub fn w_i(&self) -> ArrayView2<'_, F> {
        self.gate_weights(Gate::Input)
    }
    pub fn w_c(&self) -> ArrayView2<'_, F> {
        self.gate_weights(Gate::Candidate)
    }
    pub fn w_o(&self) -> ArrayView2<'_, F> {
        self.gate_weights(Gate::Output)
    }
    pub fn b_f(&self) -> ArrayView1<'_, F> {
        self.gate_bias(Gate::Forget)
    }
    pub fn b_i(&self) -> ArrayView1<'_, F> {
        self.gate_bias(Gate::Input)
    }
    pub fn b_c(&self) -> ArrayView1<'_, F> {
        self.gate_bias(Gate::Candidate)
    }
    pub fn b_o(&self) -> ArrayView1<'_, F> {
        self.gate_bias(Gate::Output)
    }


    pub(crate) fn check_finite(&self) -> Result<(), ForecastError> {
        if self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(ForecastError::NonFiniteParameter)
        }
    }
}

/// Intermediates of one batched step; columns are batch entries.
#[derive(Debug, Clone)]
pub(crate) struct StepCache<F> {
    /// `[h_{t-1}; x_t]`.
    pub concat: Array2<F>,
    /// Activated gates stacked f, i, g, o.
    pub gates: Array2<F>,
    pub c_prev: Array2<F>,
    pub tanh_c: Array2<F>,
    pub c: Array2<F>,
    pub h: Array2<F>,
}

/// Selects the backward pass; the broken variant exists only so tests can
/// confirm the gradient check notices a wrong derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Backprop {
    Exact,
    #[allow(dead_code)]
    DropForgetCarry,
}

pub(crate) fn step_forward<F: Scalar>(
    p: &LstmCellParams<F>,
    x: ArrayView2<F>,
    h_prev: ArrayView2<F>,
    c_prev: ArrayView2<F>,
) -> StepCache<F> {
    let h = p.hidden_size;
    let concat = concatenate(Axis(0), &[h_prev, x]).expect("matching batch width");
    let mut gates = p.weights.dot(&concat) + &p.bias.view().insert_axis(Axis(1));
    gates.slice_mut(s![0..2 * h, ..]).mapv_inplace(sigmoid);
    gates.slice_mut(s![2 * h..3 * h, ..]).mapv_inplace(F::tanh);
    gates.slice_mut(s![3 * h..4 * h, ..]).mapv_inplace(sigmoid);

    let f = gates.slice(s![0..h, ..]);
    let i = gates.slice(s![h..2 * h, ..]);
    let g = gates.slice(s![2 * h..3 * h, ..]);
    let o = gates.slice(s![3 * h..4 * h, ..]);
    let c = &f * &c_prev + &i * &g;
    let tanh_c = c.mapv(F::tanh);
    let h_new = &o * &tanh_c;
    StepCache {
        concat,
        c_prev: c_prev.to_owned(),
        gates,
        tanh_c,
        c,
        h: h_new,
    }
}

/// Backpropagates one step. `dh` and `dc` are the loss gradients with
/// respect to this step's `h_t` and `C_t`; gradients of the parameters are
/// accumulated into `grads`. Returns `(dh_prev, dc_prev, dx)`.
pub(crate) fn step_backward<F: Scalar>(
    p: &LstmCellParams<F>,
    cache: &StepCache<F>,
    dh: &Array2<F>,
    dc_in: &Array2<F>,
    grads: &mut LstmCellParams<F>,
    mode: Backprop,
) -> (Array2<F>, Array2<F>, Array2<F>) {
    let h = p.hidden_size;
    let one = F::one();
    let f = cache.gates.slice(s![0..h, ..]);
    let i = cache.gates.slice(s![h..2 * h, ..]);
    let g = cache.gates.slice(s![2 * h..3 * h, ..]);
    let o = cache.gates.slice(s![3 * h..4 * h, ..]);

    // dC_t = dC from t+1 plus the path through h_t = o * tanh(C_t).
    let mut dc = dc_in.clone();
    Zip::from(&mut dc)
        .and(dh)
        .and(&o)
        .and(&cache.tanh_c)
        .for_each(|dc, &dh, &o, &tc| *dc = *dc + dh * o * (one - tc * tc));

    let mut dz = Array2::<F>::zeros(cache.gates.raw_dim());
    Zip::from(dz.slice_mut(s![0..h, ..]))
        .and(&dc)
        .and(&cache.c_prev)
        .and(&f)
        .for_each(|d, &dc, &cp, &f| *d = dc * cp * f * (one - f));
    Zip::from(dz.slice_mut(s![h..2 * h, ..]))
        .and(&dc)
        .and(&g)
        .and(&i)
        .for_each(|d, &dc, &g, &i| *d = dc * g * i * (one - i));
    Zip::from(dz.slice_mut(s![2 * h..3 * h, ..]))
        .and(&dc)
        .and(&i)
        .and(&g)
        .for_each(|d, &dc, &i, &g| *d = dc * i * (one - g * g));
    Zip::from(dz.slice_mut(s![3 * h..4 * h, ..]))
        .and(dh)
        .and(&cache.tanh_c)
        .and(&o)
        .for_each(|d, &dh, &tc, &o| *d = dh * tc * o * (one - o));

    grads.weights = &grads.weights + &dz.dot(&cache.concat.t());
    grads.bias = &grads.bias + &dz.sum_axis(Axis(1));

    let dconcat = p.weights.t().dot(&dz);
    let dh_prev = dconcat.slice(s![0..h, ..]).to_owned();
    let dx = dconcat.slice(s![h.., ..]).to_owned();
    let dc_prev = match mode {
        Backprop::Exact => &dc * &f,
        Backprop::DropForgetCarry => dc,
    };
    (dh_prev, dc_prev, dx)
}

/// Single-sample forward step.
pub fn lstm_cell_forward<F: Scalar>(
    params: &LstmCellParams<F>,
    x_t: ArrayView1<F>,
    prev: &CellState<F>,
) -> Result<(CellState<F>, GateRecord<F>), ForecastError> {
    let h = params.hidden_size;
    if x_t.len() != params.input_size || prev.h.len() != h || prev.c.len() != h {
        return Err(ForecastError::DimensionMismatch(format!(
            "cell expects input {} and state {h}, got input {} and state {}/{}",
            params.input_size,
            x_t.len(),
            prev.h.len(),
            prev.c.len()
        )));
    }
    let cache = step_forward(
        params,
        x_t.insert_axis(Axis(1)),
        prev.h.view().insert_axis(Axis(1)),
        prev.c.view().insert_axis(Axis(1)),
    );
    let column = |a: ArrayView2<F>| a.column(0).to_owned();
    Ok((
        CellState {
            h: column(cache.h.view()),
            c: column(cache.c.view()),
        },
        GateRecord {
            forget: column(cache.gates.slice(s![0..h, ..])),
            input: column(cache.gates.slice(s![h..2 * h, ..])),
            candidate: column(cache.gates.slice(s![2 * h..3 * h, ..])),
            output: column(cache.gates.slice(s![3 * h..4 * h, ..])),
        },
    ))
}
