//! Fully-connected Q-network.

use rand::Rng;

use super::params::{ParamBlock, Params};
use crate::error::{Error, Result};

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Activations saved by [`Mlp::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer (index 0 is the network input).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Vec<f64>>,
}

impl MlpCache {
    /// Sign pattern of every hidden pre-activation (`true` = positive).
    pub fn active_units(&self) -> impl Iterator<Item = bool> + '_ {
        self.pre.iter().flatten().map(|&z| z > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activation: Activation,
    params: Params,
}

impl Mlp {
    /// All-zero network with the given layer sizes `[n_in, h1, ..., n_out]`.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let blocks = sizes
            .windows(2)
            .enumerate()
            .flat_map(|(l, w)| {
                [ParamBlock::zeros(format!("w{l}"), w[1], w[0]), ParamBlock::zeros(format!("b{l}"), w[1], 1)]
            })
            .collect();
        Self { sizes: sizes.to_vec(), activation, params: Params::new(blocks) }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes, activation);
        for l in 0..net.layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            net.params.blocks[2 * l].fill_uniform((6.0 / (fan_in + fan_out) as f64).sqrt(), rng);
        }
        net
    }

    /// Q-network shape: `n` one-hot inputs, three hidden layers of 32, `n` outputs.
    pub fn q_network<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::new(&[n, 32, 32, 32, n], Activation::Relu, rng)
    }

    pub fn from_params(sizes: &[usize], activation: Activation, params: Params) -> Result<Self> {
        let shape = Self::zeros(sizes, activation);
        if !shape.params.same_shape(&params) {
            return Err(Error::Contract("parameter blocks do not match layer sizes".into()));
        }
        Ok(Self { params, ..shape })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_in(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_out(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn affine(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let w = &self.params.blocks[2 * l];
        let b = &self.params.blocks[2 * l + 1];
        (0..w.rows)
            .map(|r| {
                let mut acc = b.data[r];
                for (wi, &xi) in w.row(r).iter().zip(x) {
                    if xi != 0.0 {
                        acc += wi * xi;
                    }
                }
                acc
            })
            .collect()
    }

    fn activate(&self, z: &[f64]) -> Vec<f64> {
        match self.activation {
            Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
            Activation::Identity => z.to_vec(),
        }
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.n_in() {
            return Err(Error::Contract(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.n_in()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_cached(input).map(|(out, _)| out)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        self.check_input(input)?;
        let mut inputs = vec![input.to_vec()];
        let mut pre = Vec::with_capacity(self.layers() - 1);
        for l in 0..self.layers() - 1 {
            let z = self.affine(l, inputs.last().unwrap());
            inputs.push(self.activate(&z));
            pre.push(z);
        }
        let out = self.affine(self.layers() - 1, inputs.last().unwrap());
        Ok((out, MlpCache { inputs, pre }))
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂output`.
    pub fn backward(&self, cache: &MlpCache, d_out: &[f64], grads: &mut Params) -> Result<()> {
        if d_out.len() != self.n_out() || !grads.same_shape(&self.params) {
            return Err(Error::Contract("gradient shapes do not match the network".into()));
        }
        let mut delta = d_out.to_vec();
        for l in (0..self.layers()).rev() {
            let x = &cache.inputs[l];
            {
                let (gw, rest) = grads.blocks[2 * l..].split_at_mut(1);
                let gw = &mut gw[0];
                let gb = &mut rest[0];
                for (r, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb.data[r] += d;
                    let row = &mut gw.data[r * gw.cols..(r + 1) * gw.cols];
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params.blocks[2 * l];
            let mut prev = vec![0.0; w.cols];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, &wv) in prev.iter_mut().zip(w.row(r)) {
                    *p += d * wv;
                }
            }
            if self.activation == Activation::Relu {
                for (p, &z) in prev.iter_mut().zip(&cache.pre[l - 1]) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::one_hot;
    use crate::rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[5, 32, 32, 32, 5], Activation::Relu);
        assert_eq!(net.forward(&one_hot(5, 2)).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn hand_computed_forward() {
        // W0 = [[1, -2], [0.5, 1]], b0 = [0.1, -0.2]; W1 = [[2, -1]], b1 = [0.3]
        // x = [1, 0]: z = [1.1, 0.3] -> relu [1.1, 0.3] -> 2.2 - 0.3 + 0.3 = 2.2
        // x = [0, 1]: z = [-1.9, 0.8] -> relu [0, 0.8] -> -0.8 + 0.3 = -0.5
        let mut net = Mlp::zeros(&[2, 2, 1], Activation::Relu);
        let p = net.params_mut();
        p.blocks[0].data = vec![1.0, -2.0, 0.5, 1.0];
        p.blocks[1].data = vec![0.1, -0.2];
        p.blocks[2].data = vec![2.0, -1.0];
        p.blocks[3].data = vec![0.3];
        assert!((net.forward(&[1.0, 0.0]).unwrap()[0] - 2.2).abs() < 1e-15);
        assert!((net.forward(&[0.0, 1.0]).unwrap()[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn forward_is_pure() {
        let net = Mlp::q_network(9, &mut rng::stream(1, rng::INIT));
        let x = one_hot(9, 4);
        assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn shape_mismatch_is_contract_violation() {
        let net = Mlp::q_network(5, &mut rng::stream(1, rng::INIT));
        assert!(matches!(net.forward(&[1.0, 0.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_output_gradient_gives_zero_grads() {
        let net = Mlp::q_network(5, &mut rng::stream(2, rng::INIT));
        let (_, cache) = net.forward_cached(&one_hot(5, 1)).unwrap();
        let mut g = net.params().zeros_like();
        net.backward(&cache, &[0.0; 5], &mut g).unwrap();
        assert!(g.values().all(|&x| x == 0.0));
    }

    #[test]
    fn linear_single_layer_gradient_is_outer_product() {
        // q = W x + b, L = d·q  =>  ∂L/∂W = d xᵀ, ∂L/∂b = d
        let mut r = rng::stream(3, rng::INIT);
        let net = Mlp::new(&[3, 2], Activation::Identity, &mut r);
        let x = [0.3, -1.2, 2.0];
        let d = [0.7, -0.4];
        let (_, cache) = net.forward_cached(&x).unwrap();
        let mut g = net.params().zeros_like();
        net.backward(&cache, &d, &mut g).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!((g.blocks[0].at(i, j) - d[i] * x[j]).abs() < 1e-15);
            }
            assert_eq!(g.blocks[1].data[i], d[i]);
        }
    }
}
