//! Adam with bias correction, plus plain gradient descent.

use super::params::Params;
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const STABILIZER: f64 = 1e-8;

/// Moment accumulators shaped like the parameters they update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub stabilizer: f64,
}

impl AdamState {
    pub fn new(like: &Params) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            step: 0,
            beta1: BETA1,
            beta2: BETA2,
            stabilizer: STABILIZER,
        }
    }
}

fn check(params: &Params, grads: &Params, block_lr: &[f64]) -> Result<()> {
    if !params.same_shape(grads) || block_lr.len() != params.blocks.len() {
        return Err(Error::Contract("optimizer shapes do not match".into()));
    }
    if let Some(b) = grads.blocks.iter().find(|b| b.data.iter().any(|g| !g.is_finite())) {
        return Err(Error::Divergence {
            slot: 0,
            reason: format!("non-finite gradient in block {}", b.name),
        });
    }
    Ok(())
}

/// One bias-corrected Adam update with a learning rate per parameter block.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, block_lr: &[f64]) -> Result<()> {
    check(params, grads, block_lr)?;
    if !state.m.same_shape(params) {
        return Err(Error::Contract("Adam state does not match the parameters".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (k, (pb, gb)) in params.blocks.iter_mut().zip(&grads.blocks).enumerate() {
        let lr = block_lr[k];
        let mb = &mut state.m.blocks[k].data;
        let vb = &mut state.v.blocks[k].data;
        for (((p, &g), m), v) in pb.data.iter_mut().zip(&gb.data).zip(mb.iter_mut()).zip(vb.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + state.stabilizer);
        }
    }
    Ok(())
}

/// `θ ← θ − α g` per block.
pub fn sgd_step(params: &mut Params, grads: &Params, block_lr: &[f64]) -> Result<()> {
    check(params, grads, block_lr)?;
    for (k, (pb, gb)) in params.blocks.iter_mut().zip(&grads.blocks).enumerate() {
        for (p, g) in pb.data.iter_mut().zip(&gb.data) {
            *p -= block_lr[k] * g;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Optimizer bound to one network's parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Adam(AdamState),
    Sgd,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, like: &Params) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(like)),
            OptimizerKind::Sgd => Optimizer::Sgd,
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params, block_lr: &[f64]) -> Result<()> {
        match self {
            Optimizer::Adam(state) => adam_step(params, grads, state, block_lr),
            Optimizer::Sgd => sgd_step(params, grads, block_lr),
        }
    }
}
