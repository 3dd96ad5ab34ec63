//! Temporal-difference targets and minibatch updates.
//!
//! The loss is the mean of `(ς − Q(s̃_t, a_t; θ))²` over the batch. Targets
//! `ς` are constants: gradients flow only through `Q(s̃_t, a_t; θ)`.

use super::mellowmax::mellowmax;
use super::qnet::QNet;
use super::{AgentConfig, Backup};
use crate::error::{Error, Result};
use crate::markov::argmax;
use crate::nn::{one_hot, Mlp, Optimizer, Params};
use crate::signal::Transition;

/// Value of the next state under `backup`. `next_target` is required for
/// the target-network and double-Q backups.
pub fn bootstrap(backup: Backup, next_online: &[f64], next_target: Option<&[f64]>) -> f64 {
    match backup {
        Backup::TargetNetwork => {
            next_target.expect("target backup needs target values").iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        }
        Backup::DoubleQ => next_target.expect("double-Q backup needs target values")[argmax(next_online)],
        Backup::Mellowmax { omega } => mellowmax(next_online, omega),
    }
}

/// `ς = r + γ · bootstrap(s′)`.
pub fn target_from_values(
    reward: f64,
    gamma: f64,
    backup: Backup,
    next_online: &[f64],
    next_target: Option<&[f64]>,
) -> f64 {
    reward + gamma * bootstrap(backup, next_online, next_target)
}

/// Target value of one transition for feed-forward networks. Mellowmax
/// ignores `target` and bootstraps from the online network.
pub fn target_value(tr: &Transition, backup: Backup, online: &Mlp, target: Option<&Mlp>, gamma: f64) -> Result<f64> {
    let x = one_hot(online.n_in(), tr.s_next);
    let next_online = online.forward(&x)?;
    let next_target = match (backup, target) {
        (Backup::Mellowmax { .. }, _) => None,
        (_, Some(t)) => Some(t.forward(&x)?),
        (_, None) => return Err(Error::Contract("backup requires a target network".into())),
    };
    Ok(target_from_values(tr.reward, gamma, backup, &next_online, next_target.as_deref()))
}

/// A minibatch: independent transitions for feed-forward nets, contiguous
/// windows for recurrent nets.
#[derive(Debug, Clone, Copy)]
pub enum Batch<'a> {
    Transitions(&'a [Transition]),
    Windows(&'a [Vec<Transition>]),
}

fn target_net(backup: Backup, target: Option<&QNet>) -> Result<Option<&QNet>> {
    match backup {
        Backup::Mellowmax { .. } => Ok(None),
        _ => target.map(Some).ok_or_else(|| Error::Contract("backup requires a target network".into())),
    }
}

fn mlp_loss_and_grad(
    online: &Mlp,
    target: Option<&Mlp>,
    batch: &[Transition],
    cfg: &AgentConfig,
) -> Result<(f64, Params)> {
    let n = online.n_in();
    if batch.is_empty() {
        return Err(Error::Contract("empty minibatch".into()));
    }
    // Inputs are one-hot states, so each distinct state needs one forward pass.
    let cached: Vec<_> = (0..n).map(|s| online.forward_cached(&one_hot(n, s))).collect::<Result<_>>()?;
    let target_q: Option<Vec<Vec<f64>>> = match target {
        Some(t) => Some((0..n).map(|s| t.forward(&one_hot(n, s))).collect::<Result<_>>()?),
        None => None,
    };
    let scale = 1.0 / batch.len() as f64;
    let mut d_out = vec![vec![0.0; n]; n];
    let mut loss = 0.0;
    for tr in batch {
        if tr.s_det >= n || tr.s_next >= n || tr.action >= n {
            return Err(Error::Contract(format!("transition {tr:?} outside the state space")));
        }
        let next_target = target_q.as_ref().map(|t| t[tr.s_next].as_slice());
        let sigma = target_from_values(tr.reward, cfg.gamma, cfg.backup, &cached[tr.s_next].0, next_target);
        let err = cached[tr.s_det].0[tr.action] - sigma;
        loss += scale * err * err;
        d_out[tr.s_det][tr.action] += 2.0 * scale * err;
    }
    let mut grads = online.params().zeros_like();
    for (s, d) in d_out.iter().enumerate() {
        if d.iter().any(|&v| v != 0.0) {
            online.backward(&cached[s].1, d, &mut grads)?;
        }
    }
    Ok((loss, grads))
}

fn recurrent_loss_and_grad(
    online: &crate::nn::Lstm,
    target: Option<&crate::nn::Lstm>,
    windows: &[Vec<Transition>],
    cfg: &AgentConfig,
) -> Result<(f64, Params)> {
    let n = online.n_in();
    let len = windows.first().map_or(0, Vec::len);
    if len <= cfg.burn_in || windows.iter().any(|w| w.len() != len) {
        return Err(Error::Contract("windows must share a length longer than the burn-in".into()));
    }
    // Each window of L transitions is fed as L + 1 detected states so the
    // last transition's next state gets a Q-vector too.
    let sequences: Vec<Vec<usize>> = windows
        .iter()
        .map(|w| w.iter().map(|t| t.s_det).chain(std::iter::once(w[len - 1].s_next)).collect())
        .collect();
    let trace = online.forward_onehot_batch(&sequences)?;
    let target_trace = match target {
        Some(t) => Some(t.forward_onehot_batch(&sequences)?),
        None => None,
    };
    let scale = 1.0 / (windows.len() * (len - cfg.burn_in)) as f64;
    let mut d_out = vec![vec![vec![0.0; n]; windows.len()]; len + 1];
    let mut loss = 0.0;
    for (b, window) in windows.iter().enumerate() {
        for (t, tr) in window.iter().enumerate().skip(cfg.burn_in) {
            if tr.action >= n {
                return Err(Error::Contract(format!("transition {tr:?} outside the state space")));
            }
            let next_target = target_trace.as_ref().map(|tt| tt.outputs[t + 1][b].as_slice());
            let sigma = target_from_values(tr.reward, cfg.gamma, cfg.backup, &trace.outputs[t + 1][b], next_target);
            let err = trace.outputs[t][b][tr.action] - sigma;
            loss += scale * err * err;
            d_out[t][b][tr.action] = 2.0 * scale * err;
        }
    }
    let mut grads = online.params().zeros_like();
    online.backward_onehot_batch(&trace, &d_out, &mut grads)?;
    Ok((loss, grads))
}

/// Minibatch loss and its gradient with respect to the online parameters.
pub fn td_loss_and_grad(
    online: &QNet,
    target: Option<&QNet>,
    batch: Batch<'_>,
    cfg: &AgentConfig,
) -> Result<(f64, Params)> {
    let target = target_net(cfg.backup, target)?;
    match (online, batch) {
        (QNet::Mlp(net), Batch::Transitions(b)) => {
            let t = match target {
                Some(QNet::Mlp(t)) => Some(t),
                Some(_) => return Err(Error::Contract("target network architecture differs".into())),
                None => None,
            };
            mlp_loss_and_grad(net, t, b, cfg)
        }
        (QNet::Recurrent(net), Batch::Windows(w)) => {
            let t = match target {
                Some(QNet::Recurrent(t)) => Some(t),
                Some(_) => return Err(Error::Contract("target network architecture differs".into())),
                None => None,
            };
            recurrent_loss_and_grad(net, t, w, cfg)
        }
        _ => Err(Error::Contract("batch kind does not match the architecture".into())),
    }
}

/// One optimizer step on the minibatch; returns the loss before the step.
pub fn td_update(
    online: &mut QNet,
    target: Option<&QNet>,
    batch: Batch<'_>,
    cfg: &AgentConfig,
    optimizer: &mut Optimizer,
) -> Result<f64> {
    let (loss, grads) = td_loss_and_grad(online, target, batch, cfg)?;
    if !loss.is_finite() {
        return Err(Error::Divergence { slot: 0, reason: format!("non-finite TD loss {loss}") });
    }
    let rates = online.block_learning_rates(cfg);
    optimizer.step(online.params_mut(), &grads, &rates)?;
    if !online.params().is_finite() {
        return Err(Error::Divergence { slot: 0, reason: "non-finite parameters after update".into() });
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, OptimizerKind};
    use crate::rl::Architecture;

    fn mlp_cfg(backup: Backup, gamma: f64) -> AgentConfig {
        AgentConfig { backup, gamma, ..AgentConfig::paper(Architecture::Mlp, backup) }
    }

    #[test]
    fn zero_gamma_target_is_reward() {
        for backup in [Backup::TargetNetwork, Backup::DoubleQ, Backup::Mellowmax { omega: 15.0 }] {
            let v = target_from_values(1.0, 0.0, backup, &[0.3, 0.9], Some(&[0.5, 0.2]));
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn target_and_double_agree_when_nets_coincide() {
        let q = [0.1, 0.7, 0.3];
        let a = target_from_values(1.0, 0.9, Backup::TargetNetwork, &q, Some(&q));
        let b = target_from_values(1.0, 0.9, Backup::DoubleQ, &q, Some(&q));
        assert_eq!(a, b);
    }

    #[test]
    fn mellowmax_on_equal_values_matches_max_backup() {
        let q = [0.4; 5];
        let a = target_from_values(0.0, 0.95, Backup::Mellowmax { omega: 45.0 }, &q, None);
        let b = target_from_values(0.0, 0.95, Backup::TargetNetwork, &q, Some(&q));
        assert_eq!(a, b);
        assert_eq!(a, 0.95 * 0.4);
    }

    #[test]
    fn loss_zero_when_q_matches_targets() {
        // Zero net with gamma = 0 and zero rewards: Q = 0 = ς everywhere.
        let net = QNet::Mlp(Mlp::zeros(&[3, 4, 3], Activation::Relu));
        let batch = [Transition { s_det: 0, action: 1, reward: 0.0, s_next: 2 }; 4];
        let cfg = mlp_cfg(Backup::Mellowmax { omega: 15.0 }, 0.0);
        let (loss, grads) = td_loss_and_grad(&net, None, Batch::Transitions(&batch), &cfg).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.values().all(|&g| g == 0.0));
    }

    #[test]
    fn hand_computed_single_transition_loss() {
        // Linear 2→2 net, q = W x + b. s = 0: q = [W00 + b0, W10 + b1] = [0.5, -0.25].
        // γ = 0, r = 1, a = 0: loss = (1 − 0.5)² = 0.25.
        let mut mlp = Mlp::zeros(&[2, 2], Activation::Identity);
        mlp.params_mut().blocks[0].data = vec![0.3, 9.0, -0.5, 9.0];
        mlp.params_mut().blocks[1].data = vec![0.2, 0.25];
        let net = QNet::Mlp(mlp);
        let batch = [Transition { s_det: 0, action: 0, reward: 1.0, s_next: 1 }];
        let cfg = mlp_cfg(Backup::Mellowmax { omega: 15.0 }, 0.0);
        let (loss, grads) = td_loss_and_grad(&net, None, Batch::Transitions(&batch), &cfg).unwrap();
        assert!((loss - 0.25).abs() < 1e-15);
        // ∂L/∂b0 = 2(q − ς) = −1
        assert!((grads.blocks[1].data[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn update_step_reduces_loss_on_fixed_batch() {
        let mut r = crate::rng::stream(1, crate::rng::INIT);
        let mut net = QNet::new(Architecture::Mlp, 5, &mut r);
        let batch: Vec<Transition> = (0..16)
            .map(|i| Transition { s_det: i % 5, action: (i * 3) % 5, reward: (i % 2) as f64, s_next: (i + 1) % 5 })
            .collect();
        let cfg = AgentConfig { alpha: 1e-3, ..mlp_cfg(Backup::Mellowmax { omega: 15.0 }, 0.0) };
        let mut opt = Optimizer::new(OptimizerKind::Adam, net.params());
        let first = td_update(&mut net, None, Batch::Transitions(&batch), &cfg, &mut opt).unwrap();
        let mut last = first;
        for _ in 0..200 {
            last = td_update(&mut net, None, Batch::Transitions(&batch), &cfg, &mut opt).unwrap();
        }
        assert!(last < first * 0.5, "{first} -> {last}");
    }

    #[test]
    fn missing_target_network_is_contract_violation() {
        let net = QNet::Mlp(Mlp::zeros(&[3, 3], Activation::Identity));
        let batch = [Transition { s_det: 0, action: 0, reward: 0.0, s_next: 0 }];
        let cfg = mlp_cfg(Backup::DoubleQ, 0.5);
        assert!(td_loss_and_grad(&net, None, Batch::Transitions(&batch), &cfg).is_err());
    }
}
