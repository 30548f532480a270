//! Single-timestep recurrent cells: a peephole LSTM and a relu vanilla
//! RNN baseline, each with a hand-derived backward pass.
//!
//! The LSTM gates are
//!
//! ```text
//! i_t = sigmoid(W_xi x_t + W_hi h_{t-1} + w_ci . c_{t-1} + b_i)
//! f_t = sigmoid(W_xf x_t + W_hf h_{t-1} + w_cf . c_{t-1} + b_f)
//! c_t = f_t . c_{t-1} + i_t . tanh(W_xc x_t + W_hc h_{t-1} + b_c)
//! o_t = sigmoid(W_xo x_t + W_ho h_{t-1} + w_co . c_{t-1} + b_o)
//! h_t = o_t . tanh(c_t)
//! ```
//!
//! where `.` is elementwise multiplication and the peepholes w_ci, w_cf,
//! w_co are diagonal (vectors). Note the output gate reads c_{t-1}, not
//! c_t; the backward pass accounts for that, routing the w_co term into
//! the gradient of the previous cell state.
//!
//! The relu cell is `h_t = relu(W_in x_t + W_rec h_{t-1} + b)` with
//! subgradient 0 at exactly 0.

use crate::error::{Error, Result};
use crate::tensor::{relu, sigmoid, tanh, Matrix, Vector};

/// Hidden/memory pair carried between timesteps.
///
/// For relu cells `c` is kept as an all-zero vector so the state shape
/// is uniform across cell kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vector,
    pub c: Vector,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState {
            h: Vector::zeros(hidden_dim),
            c: Vector::zeros(hidden_dim),
        }
    }
}

/// Gradient of a loss with respect to an [`LstmState`].
#[derive(Clone, Debug)]
pub struct StateGrad {
    pub dh: Vector,
    pub dc: Vector,
}

impl StateGrad {
    pub fn zeros(hidden_dim: usize) -> Self {
        StateGrad {
            dh: Vector::zeros(hidden_dim),
            dc: Vector::zeros(hidden_dim),
        }
    }
}

/// Peephole LSTM layer parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayerParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    // input gate
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub w_ci: Vector,
    pub b_i: Vector,
    // forget gate
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub w_cf: Vector,
    pub b_f: Vector,
    // cell candidate
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub b_c: Vector,
    // output gate
    pub w_xo: Matrix,
    pub w_ho: Matrix,
    pub w_co: Vector,
    pub b_o: Vector,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let xm = || Matrix::zeros(hidden_dim, input_dim);
        let hm = || Matrix::zeros(hidden_dim, hidden_dim);
        let v = || Vector::zeros(hidden_dim);
        LstmLayerParams {
            input_dim,
            hidden_dim,
            w_xi: xm(),
            w_hi: hm(),
            w_ci: v(),
            b_i: v(),
            w_xf: xm(),
            w_hf: hm(),
            w_cf: v(),
            b_f: v(),
            w_xc: xm(),
            w_hc: hm(),
            b_c: v(),
            w_xo: xm(),
            w_ho: hm(),
            w_co: v(),
            b_o: v(),
        }
    }

    fn check_step_inputs(&self, x: &Vector, prev: &LstmState) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "lstm_step: input len {} != input_dim {}",
                x.len(),
                self.input_dim
            )));
        }
        if prev.h.len() != self.hidden_dim || prev.c.len() != self.hidden_dim {
            return Err(Error::Shape(format!(
                "lstm_step: state dims ({}, {}) != hidden_dim {}",
                prev.h.len(),
                prev.c.len(),
                self.hidden_dim
            )));
        }
        Ok(())
    }
}

/// Values captured by the forward pass and consumed by the backward pass.
#[derive(Clone, Debug)]
pub struct LstmStepCache {
    pub x: Vector,
    pub h_prev: Vector,
    pub c_prev: Vector,
    pub gate_i: Vector,
    pub gate_f: Vector,
    pub gate_g: Vector,
    pub gate_o: Vector,
    pub c: Vector,
    pub tanh_c: Vector,
    pub h: Vector,
}

/// One LSTM timestep.
pub fn lstm_step(
    p: &LstmLayerParams,
    x: &Vector,
    prev: &LstmState,
) -> Result<(LstmState, LstmStepCache)> {
    p.check_step_inputs(x, prev)?;
    let mut a_i = p.w_xi.mul_vec(x);
    a_i.add_assign(&p.w_hi.mul_vec(&prev.h));
    a_i.add_assign(&p.w_ci.hadamard(&prev.c));
    a_i.add_assign(&p.b_i);
    let gate_i = sigmoid(&a_i);

    let mut a_f = p.w_xf.mul_vec(x);
    a_f.add_assign(&p.w_hf.mul_vec(&prev.h));
    a_f.add_assign(&p.w_cf.hadamard(&prev.c));
    a_f.add_assign(&p.b_f);
    let gate_f = sigmoid(&a_f);

    let mut a_g = p.w_xc.mul_vec(x);
    a_g.add_assign(&p.w_hc.mul_vec(&prev.h));
    a_g.add_assign(&p.b_c);
    let gate_g = tanh(&a_g);

    let c = gate_f.hadamard(&prev.c).add(&gate_i.hadamard(&gate_g));

    let mut a_o = p.w_xo.mul_vec(x);
    a_o.add_assign(&p.w_ho.mul_vec(&prev.h));
    a_o.add_assign(&p.w_co.hadamard(&prev.c));
    a_o.add_assign(&p.b_o);
    let gate_o = sigmoid(&a_o);

    let tanh_c = tanh(&c);
    let h = gate_o.hadamard(&tanh_c);

    let next = LstmState { h: h.clone(), c: c.clone() };
    let cache = LstmStepCache {
        x: x.clone(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        c,
        tanh_c,
        h,
    };
    Ok((next, cache))
}

/// Backward pass of [`lstm_step`].
///
/// `grad` holds dL/dh_t and dL/dc_t as received from later timesteps and
/// consumers. Returns (parameter gradients, dL/dx_t, dL/d(prev state)).
/// Accumulation of parameter gradients across timesteps is the caller's
/// responsibility.
pub fn lstm_step_backward(
    p: &LstmLayerParams,
    cache: &LstmStepCache,
    grad: &StateGrad,
) -> Result<(LstmLayerParams, Vector, StateGrad)> {
    let mut g = LstmLayerParams::zeros(p.input_dim, p.hidden_dim);
    let (dx, prev) = lstm_step_backward_into(p, cache, grad, &mut g)?;
    Ok((g, dx, prev))
}

/// [`lstm_step_backward`] accumulating parameter gradients into `g`
/// instead of allocating them; the BPTT drivers use this form.
pub fn lstm_step_backward_into(
    p: &LstmLayerParams,
    cache: &LstmStepCache,
    grad: &StateGrad,
    g: &mut LstmLayerParams,
) -> Result<(Vector, StateGrad)> {
    if grad.dh.len() != p.hidden_dim || grad.dc.len() != p.hidden_dim {
        return Err(Error::Shape(format!(
            "lstm_step_backward: grad dims ({}, {}) != hidden_dim {}",
            grad.dh.len(),
            grad.dc.len(),
            p.hidden_dim
        )));
    }

    // h = o . tanh(c)
    let d_o = grad.dh.hadamard(&cache.tanh_c);
    let da_o = d_o.hadamard(&cache.gate_o.map(|v| v * (1.0 - v)));
    let mut dc = grad.dc.clone();
    dc.add_assign(&grad.dh.hadamard(&cache.gate_o).hadamard(&cache.tanh_c.map(|t| 1.0 - t * t)));

    // c = f . c_prev + i . g
    let d_f = dc.hadamard(&cache.c_prev);
    let da_f = d_f.hadamard(&cache.gate_f.map(|v| v * (1.0 - v)));
    let d_i = dc.hadamard(&cache.gate_g);
    let da_i = d_i.hadamard(&cache.gate_i.map(|v| v * (1.0 - v)));
    let d_g = dc.hadamard(&cache.gate_i);
    let da_g = d_g.hadamard(&cache.gate_g.map(|t| 1.0 - t * t));

    g.w_xi.add_outer(&da_i, &cache.x);
    g.w_hi.add_outer(&da_i, &cache.h_prev);
    g.w_ci.add_assign(&da_i.hadamard(&cache.c_prev));
    g.b_i.add_assign(&da_i);

    g.w_xf.add_outer(&da_f, &cache.x);
    g.w_hf.add_outer(&da_f, &cache.h_prev);
    g.w_cf.add_assign(&da_f.hadamard(&cache.c_prev));
    g.b_f.add_assign(&da_f);

    g.w_xc.add_outer(&da_g, &cache.x);
    g.w_hc.add_outer(&da_g, &cache.h_prev);
    g.b_c.add_assign(&da_g);

    g.w_xo.add_outer(&da_o, &cache.x);
    g.w_ho.add_outer(&da_o, &cache.h_prev);
    g.w_co.add_assign(&da_o.hadamard(&cache.c_prev));
    g.b_o.add_assign(&da_o);

    let mut dx = p.w_xi.tr_mul_vec(&da_i);
    dx.add_assign(&p.w_xf.tr_mul_vec(&da_f));
    dx.add_assign(&p.w_xc.tr_mul_vec(&da_g));
    dx.add_assign(&p.w_xo.tr_mul_vec(&da_o));

    let mut dh_prev = p.w_hi.tr_mul_vec(&da_i);
    dh_prev.add_assign(&p.w_hf.tr_mul_vec(&da_f));
    dh_prev.add_assign(&p.w_hc.tr_mul_vec(&da_g));
    dh_prev.add_assign(&p.w_ho.tr_mul_vec(&da_o));

    // All four gates read c_prev: forget path plus the three peepholes.
    let mut dc_prev = dc.hadamard(&cache.gate_f);
    dc_prev.add_assign(&da_i.hadamard(&p.w_ci));
    dc_prev.add_assign(&da_f.hadamard(&p.w_cf));
    dc_prev.add_assign(&da_o.hadamard(&p.w_co));

    Ok((dx, StateGrad { dh: dh_prev, dc: dc_prev }))
}

/// relu vanilla-RNN layer parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnReluLayerParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_in: Matrix,
    pub w_rec: Matrix,
    pub b: Vector,
}

impl RnnReluLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        RnnReluLayerParams {
            input_dim,
            hidden_dim,
            w_in: Matrix::zeros(hidden_dim, input_dim),
            w_rec: Matrix::zeros(hidden_dim, hidden_dim),
            b: Vector::zeros(hidden_dim),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RnnStepCache {
    pub x: Vector,
    pub h_prev: Vector,
    pub h: Vector,
}

/// One relu RNN timestep: `h_t = relu(W_in x + W_rec h_prev + b)`.
pub fn rnn_relu_step(
    p: &RnnReluLayerParams,
    x: &Vector,
    h_prev: &Vector,
) -> Result<(Vector, RnnStepCache)> {
    if x.len() != p.input_dim {
        return Err(Error::Shape(format!(
            "rnn_relu_step: input len {} != input_dim {}",
            x.len(),
            p.input_dim
        )));
    }
    if h_prev.len() != p.hidden_dim {
        return Err(Error::Shape(format!(
            "rnn_relu_step: state len {} != hidden_dim {}",
            h_prev.len(),
            p.hidden_dim
        )));
    }
    let mut a = p.w_in.mul_vec(x);
    a.add_assign(&p.w_rec.mul_vec(h_prev));
    a.add_assign(&p.b);
    let h = relu(&a);
    let cache = RnnStepCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        h: h.clone(),
    };
    Ok((h, cache))
}

/// Backward pass of [`rnn_relu_step`]. relu subgradient is 0 at exactly 0.
pub fn rnn_relu_step_backward(
    p: &RnnReluLayerParams,
    cache: &RnnStepCache,
    dh: &Vector,
) -> Result<(RnnReluLayerParams, Vector, Vector)> {
    let mut g = RnnReluLayerParams::zeros(p.input_dim, p.hidden_dim);
    let (dx, dh_prev) = rnn_relu_step_backward_into(p, cache, dh, &mut g)?;
    Ok((g, dx, dh_prev))
}

/// [`rnn_relu_step_backward`] accumulating into `g`.
pub fn rnn_relu_step_backward_into(
    p: &RnnReluLayerParams,
    cache: &RnnStepCache,
    dh: &Vector,
    g: &mut RnnReluLayerParams,
) -> Result<(Vector, Vector)> {
    if dh.len() != p.hidden_dim {
        return Err(Error::Shape(format!(
            "rnn_relu_step_backward: grad len {} != hidden_dim {}",
            dh.len(),
            p.hidden_dim
        )));
    }
    // h > 0 exactly when the pre-activation was > 0.
    let da = Vector::from_vec(
        dh.as_slice()
            .iter()
            .zip(cache.h.as_slice())
            .map(|(&d, &h)| if h > 0.0 { d } else { 0.0 })
            .collect(),
    );
    g.w_in.add_outer(&da, &cache.x);
    g.w_rec.add_outer(&da, &cache.h_prev);
    g.b.add_assign(&da);
    let dx = p.w_in.tr_mul_vec(&da);
    let dh_prev = p.w_rec.tr_mul_vec(&da);
    Ok((dx, dh_prev))
}

/// A recurrent layer of either kind, so encoder/decoder stacks can be
/// built from LSTM cells or from the relu baseline uniformly.
#[derive(Clone, Debug, PartialEq)]
pub enum CellParams {
    Lstm(LstmLayerParams),
    RnnRelu(RnnReluLayerParams),
}

#[derive(Clone, Debug)]
pub enum StepCache {
    Lstm(LstmStepCache),
    RnnRelu(RnnStepCache),
}

impl StepCache {
    /// Hidden output h_t of this step.
    pub fn h(&self) -> &Vector {
        match self {
            StepCache::Lstm(c) => &c.h,
            StepCache::RnnRelu(c) => &c.h,
        }
    }
}

impl CellParams {
    pub fn input_dim(&self) -> usize {
        match self {
            CellParams::Lstm(p) => p.input_dim,
            CellParams::RnnRelu(p) => p.input_dim,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        match self {
            CellParams::Lstm(p) => p.hidden_dim,
            CellParams::RnnRelu(p) => p.hidden_dim,
        }
    }

    /// Whether the cell carries a memory state c (LSTM) or only h.
    pub fn has_memory(&self) -> bool {
        matches!(self, CellParams::Lstm(_))
    }

    pub fn zeros_like(&self) -> CellParams {
        match self {
            CellParams::Lstm(p) => {
                CellParams::Lstm(LstmLayerParams::zeros(p.input_dim, p.hidden_dim))
            }
            CellParams::RnnRelu(p) => {
                CellParams::RnnRelu(RnnReluLayerParams::zeros(p.input_dim, p.hidden_dim))
            }
        }
    }

    pub fn step(&self, x: &Vector, prev: &LstmState) -> Result<(LstmState, StepCache)> {
        match self {
            CellParams::Lstm(p) => {
                let (next, cache) = lstm_step(p, x, prev)?;
                Ok((next, StepCache::Lstm(cache)))
            }
            CellParams::RnnRelu(p) => {
                let (h, cache) = rnn_relu_step(p, x, &prev.h)?;
                let next = LstmState {
                    h,
                    c: Vector::zeros(p.hidden_dim),
                };
                Ok((next, StepCache::RnnRelu(cache)))
            }
        }
    }

    pub fn step_backward(
        &self,
        cache: &StepCache,
        grad: &StateGrad,
    ) -> Result<(CellParams, Vector, StateGrad)> {
        let mut g = self.zeros_like();
        let (dx, prev) = self.step_backward_into(cache, grad, &mut g)?;
        Ok((g, dx, prev))
    }

    /// Backward pass accumulating parameter gradients into `g`.
    pub fn step_backward_into(
        &self,
        cache: &StepCache,
        grad: &StateGrad,
        g: &mut CellParams,
    ) -> Result<(Vector, StateGrad)> {
        match (self, cache, g) {
            (CellParams::Lstm(p), StepCache::Lstm(c), CellParams::Lstm(acc)) => {
                lstm_step_backward_into(p, c, grad, acc)
            }
            (CellParams::RnnRelu(p), StepCache::RnnRelu(c), CellParams::RnnRelu(acc)) => {
                let (dx, dh_prev) = rnn_relu_step_backward_into(p, c, &grad.dh, acc)?;
                Ok((
                    dx,
                    StateGrad {
                        dh: dh_prev,
                        dc: Vector::zeros(p.hidden_dim),
                    },
                ))
            }
            _ => Err(Error::Shape("step cache does not match cell kind".into())),
        }
    }
}

/// One timestep through a stack of layers; layer n consumes layer n-1's
/// hidden output at the same timestep.
pub fn stack_step(
    cells: &[CellParams],
    x: &Vector,
    prev: &[LstmState],
) -> Result<(Vec<LstmState>, Vec<StepCache>)> {
    if cells.len() != prev.len() {
        return Err(Error::Shape(format!(
            "stack_step: {} layers, {} states",
            cells.len(),
            prev.len()
        )));
    }
    let mut states = Vec::with_capacity(cells.len());
    let mut caches = Vec::with_capacity(cells.len());
    let mut input = x.clone();
    for (cell, p) in cells.iter().zip(prev) {
        let (next, cache) = cell.step(&input, p)?;
        input = next.h.clone();
        states.push(next);
        caches.push(cache);
    }
    Ok((states, caches))
}

/// Backward through one timestep of a stack.
///
/// `incoming` carries dL/d(state at this timestep) as accumulated from
/// the following timestep; `top_dh` is an extra dL/dh for the topmost
/// layer (e.g. from an output layer). Returns per-layer parameter
/// gradients, dL/dx for the stack input, and the state gradients to pass
/// to the previous timestep.
pub fn stack_step_backward(
    cells: &[CellParams],
    caches: &[StepCache],
    incoming: &[StateGrad],
    top_dh: Option<&Vector>,
) -> Result<(Vec<CellParams>, Vector, Vec<StateGrad>)> {
    let mut grads: Vec<CellParams> = cells.iter().map(|c| c.zeros_like()).collect();
    let (dx, prevs) = stack_step_backward_into(cells, caches, incoming, top_dh, &mut grads)?;
    Ok((grads, dx, prevs))
}

/// [`stack_step_backward`] accumulating per-layer parameter gradients
/// into `accum`.
pub fn stack_step_backward_into(
    cells: &[CellParams],
    caches: &[StepCache],
    incoming: &[StateGrad],
    top_dh: Option<&Vector>,
    accum: &mut [CellParams],
) -> Result<(Vector, Vec<StateGrad>)> {
    let layers = cells.len();
    if caches.len() != layers || incoming.len() != layers || accum.len() != layers {
        return Err(Error::Shape("stack_step_backward: layer count mismatch".into()));
    }
    let mut prev_grads: Vec<Option<StateGrad>> = vec![None; layers];
    let mut from_above: Option<Vector> = None;
    for n in (0..layers).rev() {
        let mut dh = incoming[n].dh.clone();
        if n == layers - 1 {
            if let Some(extra) = top_dh {
                dh.add_assign(extra);
            }
        }
        if let Some(dx) = &from_above {
            dh.add_assign(dx);
        }
        let grad = StateGrad { dh, dc: incoming[n].dc.clone() };
        let (dx, prev) = cells[n].step_backward_into(&caches[n], &grad, &mut accum[n])?;
        prev_grads[n] = Some(prev);
        from_above = Some(dx);
    }
    let prevs = prev_grads.into_iter().map(|g| g.unwrap()).collect();
    Ok((from_above.unwrap(), prevs))
}
