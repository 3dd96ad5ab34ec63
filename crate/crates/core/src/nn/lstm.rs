//! Single-cell LSTM Q-network with a linear output head.
//!
//! Per step, with `z = [x; h_{t-1}]`:
//!
//! ```text
//! i = σ(W_i z + b_i)   f = σ(W_f z + b_f)   o = σ(W_o z + b_o)   g = tanh(W_g z + b_g)
//! c_t = f ⊙ c_{t-1} + i ⊙ g        h_t = o ⊙ tanh(c_t)        q_t = W_out h_t + b_out
//! ```

use rand::Rng;

use super::params::{ParamBlock, Params};
use crate::error::{Error, Result};

const GATES: [&str; 4] = ["i", "f", "o", "g"];
pub(crate) const FORGET: usize = 1;
pub(crate) const CANDIDATE: usize = 3;
pub(crate) const HEAD_W: usize = 8;
pub(crate) const HEAD_B: usize = 9;

/// Hidden and cell state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    z: Vec<f64>,
    gates: [Vec<f64>; 4],
    c_prev: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Unrolled forward pass: Q-values after every step plus what the backward
/// pass needs.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<StepCache>,
    pub outputs: Vec<Vec<f64>>,
    pub final_state: LstmState,
}

impl LstmTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Q-values at the last step.
    pub fn last_output(&self) -> &[f64] {
        self.outputs.last().expect("trace is never empty")
    }

    /// Hidden vectors `h_1 … h_T`.
    pub fn hidden_trajectory(&self) -> impl Iterator<Item = &[f64]> {
        self.steps.iter().map(|s| s.h.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    n_in: usize,
    hidden: usize,
    n_out: usize,
    params: Params,
}

/// Dot product with four independent accumulators so the sum pipelines.
#[inline(always)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Lstm {
    pub fn zeros(n_in: usize, hidden: usize, n_out: usize) -> Self {
        let mut blocks = Vec::with_capacity(10);
        for gate in GATES {
            blocks.push(ParamBlock::zeros(format!("lstm.w_{gate}"), hidden, n_in + hidden));
            blocks.push(ParamBlock::zeros(format!("lstm.b_{gate}"), hidden, 1));
        }
        blocks.push(ParamBlock::zeros("head.w", n_out, hidden));
        blocks.push(ParamBlock::zeros("head.b", n_out, 1));
        Self { n_in, hidden, n_out, params: Params::new(blocks) }
    }

    /// Glorot-uniform weights, zero biases except the forget gate (bias 1).
    pub fn new<R: Rng + ?Sized>(n_in: usize, hidden: usize, n_out: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(n_in, hidden, n_out);
        let gate_limit = (6.0 / (n_in + 2 * hidden) as f64).sqrt();
        for k in 0..4 {
            net.params.blocks[2 * k].fill_uniform(gate_limit, rng);
        }
        net.params.blocks[2 * FORGET + 1].data.iter_mut().for_each(|b| *b = 1.0);
        net.params.blocks[HEAD_W].fill_uniform((6.0 / (hidden + n_out) as f64).sqrt(), rng);
        net
    }

    /// Q-network shape: `n` one-hot inputs, 32 hidden units, `n` outputs.
    pub fn q_network<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::new(n, 32, n, rng)
    }

    pub fn from_params(n_in: usize, hidden: usize, n_out: usize, params: Params) -> Result<Self> {
        let shape = Self::zeros(n_in, hidden, n_out);
        if !shape.params.same_shape(&params) {
            return Err(Error::Contract("parameter blocks do not match LSTM dimensions".into()));
        }
        Ok(Self { params, ..shape })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    /// Whether parameter block `index` belongs to the output head.
    pub fn is_head_block(index: usize) -> bool {
        index >= HEAD_W
    }

    fn head(&self, h: &[f64]) -> Vec<f64> {
        let w = &self.params.blocks[HEAD_W];
        let b = &self.params.blocks[HEAD_B];
        (0..self.n_out)
            .map(|r| b.data[r] + dot(w.row(r), h))
            .collect()
    }

    fn cell(&self, x: &[f64], state: &LstmState) -> StepCache {
        let mut z = Vec::with_capacity(self.n_in + self.hidden);
        z.extend_from_slice(x);
        z.extend_from_slice(&state.h);
        let gates: [Vec<f64>; 4] = std::array::from_fn(|k| {
            let w = &self.params.blocks[2 * k];
            let b = &self.params.blocks[2 * k + 1];
            (0..self.hidden)
                .map(|r| {
                    let row = w.row(r);
                    let mut acc = b.data[r];
                    for (&wi, &zi) in row[..self.n_in].iter().zip(x) {
                        if zi != 0.0 {
                            acc += wi * zi;
                        }
                    }
                    acc += dot(&row[self.n_in..], &state.h);
                    if k == CANDIDATE {
                        acc.tanh()
                    } else {
                        sigmoid(acc)
                    }
                })
                .collect()
        });
        let c: Vec<f64> = (0..self.hidden)
            .map(|j| gates[FORGET][j] * state.c[j] + gates[0][j] * gates[CANDIDATE][j])
            .collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h = (0..self.hidden).map(|j| gates[2][j] * tanh_c[j]).collect();
        StepCache { z, gates, c_prev: state.c.clone(), c, tanh_c, h }
    }

    /// One step from `state`; returns the Q-values and the next state.
    pub fn step(&self, x: &[f64], state: &LstmState) -> Result<(Vec<f64>, LstmState)> {
        let trace = self.forward_sequence(&[x.to_vec()], state)?;
        Ok((trace.outputs[0].clone(), trace.final_state))
    }

    pub fn forward_sequence(&self, inputs: &[Vec<f64>], init: &LstmState) -> Result<LstmTrace> {
        if inputs.is_empty() {
            return Err(Error::Contract("input sequence is empty".into()));
        }
        if init.h.len() != self.hidden || init.c.len() != self.hidden {
            return Err(Error::Contract("initial state has the wrong width".into()));
        }
        let mut state = init.clone();
        let mut steps = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in inputs {
            if x.len() != self.n_in {
                return Err(Error::Contract(format!(
                    "input has length {}, network expects {}",
                    x.len(),
                    self.n_in
                )));
            }
            let cache = self.cell(x, &state);
            outputs.push(self.head(&cache.h));
            state = LstmState { h: cache.h.clone(), c: cache.c.clone() };
            steps.push(cache);
        }
        Ok(LstmTrace { steps, outputs, final_state: state })
    }

    /// Backpropagation through the unrolled trace. `d_outputs[t]` is
    /// `∂L/∂q_t`; gradients are accumulated into `grads`.
    pub fn backward_sequence(
        &self,
        trace: &LstmTrace,
        d_outputs: &[Vec<f64>],
        grads: &mut Params,
    ) -> Result<()> {
        if d_outputs.len() != trace.len() || !grads.same_shape(&self.params) {
            return Err(Error::Contract("gradient shapes do not match the trace".into()));
        }
        let hd = self.hidden;
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hd]);
        for (cache, dq) in trace.steps.iter().zip(d_outputs).rev() {
            if dq.len() != self.n_out {
                return Err(Error::Contract("output gradient has the wrong width".into()));
            }
            let mut dh = dh_next.clone();
            {
                let w = &self.params.blocks[HEAD_W];
                for (r, &d) in dq.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grads.blocks[HEAD_B].data[r] += d;
                    let gw = &mut grads.blocks[HEAD_W];
                    for j in 0..hd {
                        gw.data[r * hd + j] += d * cache.h[j];
                        dh[j] += d * w.at(r, j);
                    }
                }
            }
            let [i, f, o, g] = &cache.gates;
            for j in 0..hd {
                let dc = dh[j] * o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]) + dc_next[j];
                da[0][j] = dc * g[j] * i[j] * (1.0 - i[j]);
                da[1][j] = dc * cache.c_prev[j] * f[j] * (1.0 - f[j]);
                da[2][j] = dh[j] * cache.tanh_c[j] * o[j] * (1.0 - o[j]);
                da[3][j] = dc * i[j] * (1.0 - g[j] * g[j]);
                dc_next[j] = dc * f[j];
            }
            dh_next.iter_mut().for_each(|x| *x = 0.0);
            for (k, dak) in da.iter().enumerate() {
                let w = &self.params.blocks[2 * k];
                let cols = w.cols;
                for (r, &d) in dak.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grads.blocks[2 * k + 1].data[r] += d;
                    let gw = &mut grads.blocks[2 * k].data[r * cols..(r + 1) * cols];
                    for (gv, &zv) in gw.iter_mut().zip(&cache.z) {
                        *gv += d * zv;
                    }
                    for (dhn, &wv) in dh_next.iter_mut().zip(&w.row(r)[self.n_in..]) {
                        *dhn += d * wv;
                    }
                }
            }
        }
        Ok(())
    }
}
