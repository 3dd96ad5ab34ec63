//! Small from-scratch neural networks for Q-value approximation.

pub mod adam;
pub mod gradcheck;
pub mod lstm;
pub mod lstm_batch;
pub mod mlp;
pub mod params;

pub use adam::{adam_step, sgd_step, AdamState, Optimizer, OptimizerKind};
pub use lstm::{Lstm, LstmState, LstmTrace};
pub use lstm_batch::BatchTrace;
pub use mlp::{Activation, Mlp, MlpCache};
pub use params::{ParamBlock, Params};

/// Length-`n` vector with a one at `k`.
pub fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}
