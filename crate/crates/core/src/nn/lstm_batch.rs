//! Fast forward and backward passes over a batch of equal-length one-hot
//! sequences, all starting from the zero state.
//!
//! The gate weights are repacked once per call: recurrent weights as an
//! `H × 4H` matrix indexed by hidden unit, and input weights with the bias
//! folded in as an `n_in × 4H` matrix (an input is a single channel index).
//! Every inner loop is then a long contiguous multiply-add. The arithmetic
//! matches [`Lstm::forward_sequence`] up to summation order.

use super::lstm::{dot, sigmoid, Lstm, HEAD_B, HEAD_W};
use super::params::Params;
use crate::error::{Error, Result};

/// Result of [`Lstm::forward_onehot_batch`].
#[derive(Debug, Clone)]
pub struct BatchTrace {
    sequences: Vec<Vec<usize>>,
    len: usize,
    /// Per sequence, `len` blocks of activated gates `[i; f; o; g]`.
    gates: Vec<Vec<f64>>,
    /// Per sequence, `len` blocks of cell state, its tanh and hidden state.
    c: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    /// `outputs[t][b]` is the Q-vector of sequence `b` after step `t`.
    pub outputs: Vec<Vec<Vec<f64>>>,
}

impl BatchTrace {
    pub fn batch(&self) -> usize {
        self.sequences.len()
    }

    pub fn steps(&self) -> usize {
        self.len
    }
}

#[inline(always)]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

struct Packed {
    /// `wt[j·4H + k·H + r]` = recurrent weight of gate `k`, unit `r`, input `h_j`.
    wt: Vec<f64>,
    /// `wx[x·4H + k·H + r]` = input weight for channel `x` plus bias.
    wx: Vec<f64>,
}

impl Lstm {
    fn packed(&self) -> Packed {
        let (n_in, hd) = (self.n_in(), self.hidden());
        let p = &self.params().blocks;
        let cols = n_in + hd;
        let g4 = 4 * hd;
        let mut wt = vec![0.0; hd * g4];
        let mut wx = vec![0.0; n_in * g4];
        for k in 0..4 {
            let w = &p[2 * k].data;
            let b = &p[2 * k + 1].data;
            for r in 0..hd {
                for x in 0..n_in {
                    wx[x * g4 + k * hd + r] = w[r * cols + x] + b[r];
                }
                for j in 0..hd {
                    wt[j * g4 + k * hd + r] = w[r * cols + n_in + j];
                }
            }
        }
        Packed { wt, wx }
    }

    #[inline(always)]
    fn head_into(&self, h: &[f64], q: &mut [f64]) {
        let hd = self.hidden();
        let wo = &self.params().blocks[HEAD_W].data;
        let bo = &self.params().blocks[HEAD_B].data;
        for (o, qo) in q.iter_mut().enumerate() {
            *qo = bo[o] + dot(&wo[o * hd..(o + 1) * hd], h);
        }
    }

    /// Unrolls each of `sequences` (channel indices, all the same length)
    /// from the zero state.
    pub fn forward_onehot_batch(&self, sequences: &[Vec<usize>]) -> Result<BatchTrace> {
        let nb = sequences.len();
        let len = sequences.first().map_or(0, Vec::len);
        if nb == 0 || len == 0 || sequences.iter().any(|s| s.len() != len) {
            return Err(Error::Contract("batch needs equal-length, non-empty sequences".into()));
        }
        let (n_in, hd, n_out) = (self.n_in(), self.hidden(), self.n_out());
        if sequences.iter().flatten().any(|&x| x >= n_in) {
            return Err(Error::Contract("input index outside the one-hot width".into()));
        }
        let g4 = 4 * hd;
        let pk = self.packed();
        let mut trace = BatchTrace {
            sequences: sequences.to_vec(),
            len,
            gates: vec![vec![0.0; len * g4]; nb],
            c: vec![vec![0.0; len * hd]; nb],
            tanh_c: vec![vec![0.0; len * hd]; nb],
            h: vec![vec![0.0; len * hd]; nb],
            outputs: vec![vec![vec![0.0; n_out]; nb]; len],
        };
        let zeros = vec![0.0; hd];
        for (b, seq) in sequences.iter().enumerate() {
            for (t, &x) in seq.iter().enumerate() {
                let (done_h, rest_h) = trace.h[b].split_at_mut(t * hd);
                let (done_c, rest_c) = trace.c[b].split_at_mut(t * hd);
                let h_prev = if t > 0 { &done_h[(t - 1) * hd..] } else { &zeros[..] };
                let c_prev = if t > 0 { &done_c[(t - 1) * hd..] } else { &zeros[..] };
                let a = &mut trace.gates[b][t * g4..(t + 1) * g4];
                a.copy_from_slice(&pk.wx[x * g4..(x + 1) * g4]);
                for (j, &hj) in h_prev.iter().enumerate() {
                    if hj != 0.0 {
                        axpy(a, hj, &pk.wt[j * g4..(j + 1) * g4]);
                    }
                }
                a[..3 * hd].iter_mut().for_each(|v| *v = sigmoid(*v));
                a[3 * hd..].iter_mut().for_each(|v| *v = v.tanh());
                let c = &mut rest_c[..hd];
                let tc = &mut trace.tanh_c[b][t * hd..(t + 1) * hd];
                let h = &mut rest_h[..hd];
                for r in 0..hd {
                    c[r] = a[hd + r] * c_prev[r] + a[r] * a[3 * hd + r];
                    tc[r] = c[r].tanh();
                    h[r] = a[2 * hd + r] * tc[r];
                }
                self.head_into(h, &mut trace.outputs[t][b]);
            }
        }
        Ok(trace)
    }

    /// Backpropagation through a batch trace. `d_outputs[t][b]` is
    /// `∂L/∂q` for sequence `b` at step `t`; gradients accumulate into `grads`.
    pub fn backward_onehot_batch(&self, trace: &BatchTrace, d_outputs: &[Vec<Vec<f64>>], grads: &mut Params) -> Result<()> {
        let (n_in, hd, n_out, nb) = (self.n_in(), self.hidden(), self.n_out(), trace.batch());
        if d_outputs.len() != trace.steps() || !grads.same_shape(self.params()) {
            return Err(Error::Contract("gradient shapes do not match the batch trace".into()));
        }
        if d_outputs.iter().any(|d| d.len() != nb || d.iter().any(|v| v.len() != n_out)) {
            return Err(Error::Contract("output gradient has the wrong shape".into()));
        }
        let g4 = 4 * hd;
        let pk = self.packed();
        let wo = &self.params().blocks[HEAD_W].data;
        let mut g_wt = vec![0.0; hd * g4];
        let mut g_wx = vec![0.0; n_in * g4];
        let mut g_b = vec![0.0; g4];
        let mut g_wo = vec![0.0; n_out * hd];
        let mut g_bo = vec![0.0; n_out];
        let zeros = vec![0.0; hd];
        let mut dh = vec![0.0; hd];
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut da = vec![0.0; g4];
        for (b, seq) in trace.sequences.iter().enumerate() {
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            dc_next.iter_mut().for_each(|v| *v = 0.0);
            for t in (0..trace.len).rev() {
                let h = &trace.h[b][t * hd..(t + 1) * hd];
                let h_prev = if t > 0 { &trace.h[b][(t - 1) * hd..t * hd] } else { &zeros[..] };
                let c_prev = if t > 0 { &trace.c[b][(t - 1) * hd..t * hd] } else { &zeros[..] };
                let tc = &trace.tanh_c[b][t * hd..(t + 1) * hd];
                let a = &trace.gates[b][t * g4..(t + 1) * g4];
                dh.copy_from_slice(&dh_next);
                for (o, &d) in d_outputs[t][b].iter().enumerate() {
                    if d != 0.0 {
                        g_bo[o] += d;
                        axpy(&mut g_wo[o * hd..(o + 1) * hd], d, h);
                        axpy(&mut dh, d, &wo[o * hd..(o + 1) * hd]);
                    }
                }
                let (i, rest) = a.split_at(hd);
                let (f, rest) = rest.split_at(hd);
                let (o, g) = rest.split_at(hd);
                for r in 0..hd {
                    let dc = dh[r] * o[r] * (1.0 - tc[r] * tc[r]) + dc_next[r];
                    da[r] = dc * g[r] * i[r] * (1.0 - i[r]);
                    da[hd + r] = dc * c_prev[r] * f[r] * (1.0 - f[r]);
                    da[2 * hd + r] = dh[r] * tc[r] * o[r] * (1.0 - o[r]);
                    da[3 * hd + r] = dc * i[r] * (1.0 - g[r] * g[r]);
                    dc_next[r] = dc * f[r];
                }
                let x = seq[t];
                axpy(&mut g_wx[x * g4..(x + 1) * g4], 1.0, &da);
                axpy(&mut g_b, 1.0, &da);
                for (j, &hj) in h_prev.iter().enumerate() {
                    let row = &pk.wt[j * g4..(j + 1) * g4];
                    if hj != 0.0 {
                        axpy(&mut g_wt[j * g4..(j + 1) * g4], hj, &da);
                    }
                    dh_next[j] = dot(row, &da);
                }
            }
        }
        let cols = n_in + hd;
        for k in 0..4 {
            for r in 0..hd {
                let m = k * hd + r;
                let row = &mut grads.blocks[2 * k].data[r * cols..(r + 1) * cols];
                for x in 0..n_in {
                    row[x] += g_wx[x * g4 + m];
                }
                for j in 0..hd {
                    row[n_in + j] += g_wt[j * g4 + m];
                }
                grads.blocks[2 * k + 1].data[r] += g_b[m];
            }
        }
        axpy(&mut grads.blocks[HEAD_W].data, 1.0, &g_wo);
        axpy(&mut grads.blocks[HEAD_B].data, 1.0, &g_bo);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{one_hot, LstmState};
    use crate::rng;
    use rand::Rng;

    fn sequences(n: usize, nb: usize, len: usize, seed: u64) -> Vec<Vec<usize>> {
        let mut r = rng::stream(seed, "test");
        (0..nb).map(|_| (0..len).map(|_| r.random_range(0..n)).collect()).collect()
    }

    #[test]
    fn batch_forward_matches_sequential() {
        let net = Lstm::q_network(5, &mut rng::stream(3, rng::INIT));
        let seqs = sequences(5, 6, 7, 1);
        let trace = net.forward_onehot_batch(&seqs).unwrap();
        for (b, s) in seqs.iter().enumerate() {
            let inputs: Vec<Vec<f64>> = s.iter().map(|&x| one_hot(5, x)).collect();
            let single = net.forward_sequence(&inputs, &LstmState::zeros(32)).unwrap();
            for t in 0..s.len() {
                for (u, v) in trace.outputs[t][b].iter().zip(&single.outputs[t]) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn batch_backward_matches_sequential() {
        let net = Lstm::q_network(5, &mut rng::stream(4, rng::INIT));
        let seqs = sequences(5, 4, 6, 2);
        let mut r = rng::stream(9, "test");
        let d: Vec<Vec<Vec<f64>>> =
            (0..6).map(|_| (0..4).map(|_| (0..5).map(|_| r.random_range(-1.0..1.0)).collect()).collect()).collect();
        let trace = net.forward_onehot_batch(&seqs).unwrap();
        let mut g_batch = net.params().zeros_like();
        net.backward_onehot_batch(&trace, &d, &mut g_batch).unwrap();
        let mut g_seq = net.params().zeros_like();
        for (b, s) in seqs.iter().enumerate() {
            let inputs: Vec<Vec<f64>> = s.iter().map(|&x| one_hot(5, x)).collect();
            let tr = net.forward_sequence(&inputs, &LstmState::zeros(32)).unwrap();
            let db: Vec<Vec<f64>> = (0..6).map(|t| d[t][b].clone()).collect();
            net.backward_sequence(&tr, &db, &mut g_seq).unwrap();
        }
        for (a, b) in g_batch.values().zip(g_seq.values()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn ragged_batch_rejected() {
        let net = Lstm::zeros(3, 4, 3);
        assert!(net.forward_onehot_batch(&[vec![0, 1], vec![2]]).is_err());
        assert!(net.forward_onehot_batch(&[vec![3]]).is_err());
        assert!(net.forward_onehot_batch(&[]).is_err());
    }
}
