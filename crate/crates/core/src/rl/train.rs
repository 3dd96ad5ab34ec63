//! ε-greedy deep Q-learning against the jammer environment.

use std::fmt::Write as _;

use log::{debug, info};
use rand::Rng;

use super::qnet::{extract_policies, policy_error_count, ExtractedPolicies, QNet};
use super::replay::ReplayMemory;
use super::td::{td_update, Batch};
use super::{AgentConfig, Architecture};
use crate::error::{Error, Result};
use crate::markov::{argmax, exact_oracle, PolicyOracle};
use crate::nn::{one_hot, LstmState, Optimizer};
use crate::rng;
use crate::signal::{Env, Phase};

/// One logged interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    /// Slots completed so far.
    pub slot: u64,
    /// Mean TD loss over the interval's updates (NaN before the first update).
    pub loss: f64,
    pub epsilon: f64,
    pub pi_star_errors: usize,
    pub cum_reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    pub const CSV_COLUMNS: &'static str = "slot,loss,epsilon,pi_star_errors,cum_reward";

    pub fn final_errors(&self) -> Option<usize> {
        self.records.last().map(|r| r.pi_star_errors)
    }

    /// CSV rows under the column header, without comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_COLUMNS);
        for r in &self.records {
            let _ = writeln!(out, "{},{:.9e},{:.6},{},{}", r.slot, r.loss, r.epsilon, r.pi_star_errors, r.cum_reward);
        }
        out
    }
}

/// A trained agent and everything needed to evaluate it.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: QNet,
    pub log: TrainLog,
    pub oracle: PolicyOracle,
    pub policies: ExtractedPolicies,
    /// Detected states preceding policy extraction (recurrent burn-in).
    pub history: Vec<usize>,
}

/// Training failure together with the log written so far.
#[derive(Debug)]
pub struct TrainError {
    pub error: Error,
    pub log: TrainLog,
}

impl std::fmt::Display for TrainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} log records)", self.error, self.log.records.len())
    }
}

impl std::error::Error for TrainError {}

impl From<TrainError> for Error {
    fn from(e: TrainError) -> Self {
        e.error
    }
}

fn at_slot(e: Error, slot: u64) -> Error {
    match e {
        Error::Divergence { reason, .. } => Error::Divergence { slot, reason },
        other => other,
    }
}

/// Trains a fresh network on `env` for `cfg.train_slots` slots. `seed`
/// drives initialization, exploration and replay sampling.
pub fn train(env: &mut Env, cfg: &AgentConfig, seed: u64) -> std::result::Result<TrainOutcome, TrainError> {
    let oracle = exact_oracle(env.chain(), cfg.gamma).map_err(|error| TrainError { error, log: TrainLog::default() })?;
    train_with_oracle(env, cfg, seed, oracle)
}

/// [`train`] with a precomputed oracle for the policy-error metric.
pub fn train_with_oracle(
    env: &mut Env,
    cfg: &AgentConfig,
    seed: u64,
    oracle: PolicyOracle,
) -> std::result::Result<TrainOutcome, TrainError> {
    let mut log = TrainLog::default();
    match run(env, cfg, seed, &oracle, &mut log) {
        Ok((net, history)) => {
            let policies = extract_policies(&net, &history).map_err(|error| TrainError { error, log: log.clone() })?;
            Ok(TrainOutcome { net, log, oracle, policies, history })
        }
        Err(error) => Err(TrainError { error, log }),
    }
}

fn run(
    env: &mut Env,
    cfg: &AgentConfig,
    seed: u64,
    oracle: &PolicyOracle,
    log: &mut TrainLog,
) -> Result<(QNet, Vec<usize>)> {
    cfg.validate()?;
    let n = env.n();
    if oracle.n() != n {
        return Err(Error::Contract("oracle and environment sizes differ".into()));
    }
    let mut init_rng = rng::stream(seed, rng::INIT);
    let mut explore_rng = rng::stream(seed, rng::EXPLORATION);
    let mut replay_rng = rng::stream(seed, rng::REPLAY);

    let mut net = QNet::new(cfg.architecture, n, &mut init_rng);
    let mut target = cfg.backup.uses_target_network().then(|| net.clone_params());
    let mut optimizer = Optimizer::new(cfg.optimizer, net.params());
    let mut memory = ReplayMemory::new(cfg.replay_capacity);
    let needed = match cfg.architecture {
        Architecture::Mlp => cfg.warmup.max(1),
        Architecture::Recurrent => cfg.warmup.max(cfg.window),
    };

    env.set_phase(Phase::Training);
    let mut s = env.detected();
    let mut hidden = match &net {
        QNet::Recurrent(l) => Some(LstmState::zeros(l.hidden())),
        QNet::Mlp(_) => None,
    };
    let mut cum_reward = 0.0;
    let (mut loss_sum, mut loss_count) = (0.0, 0u64);
    let history_len = cfg.window;

    for slot in 0..cfg.train_slots {
        let eps = cfg.epsilon(slot);
        let explore = explore_rng.random::<f64>() < eps;
        let random_action = explore_rng.random_range(0..n);
        let greedy = match (&net, hidden.as_mut()) {
            (QNet::Recurrent(l), Some(h)) => {
                let (q, next) = l.step(&one_hot(n, s), h)?;
                *h = next;
                (!explore).then(|| argmax(&q))
            }
            (QNet::Mlp(m), _) if !explore => Some(argmax(&m.forward(&one_hot(n, s))?)),
            _ => None,
        };
        let action = greedy.unwrap_or(random_action);

        let outcome = env.step(action)?;
        let tr = outcome.transition;
        memory.push(tr);
        cum_reward += tr.reward;
        s = tr.s_next;

        if memory.len() >= needed {
            let loss = match cfg.architecture {
                Architecture::Mlp => {
                    let batch = memory.sample(cfg.minibatch, &mut replay_rng);
                    td_update(&mut net, target.as_ref(), Batch::Transitions(&batch), cfg, &mut optimizer)
                }
                Architecture::Recurrent => {
                    let windows = memory.sample_windows(cfg.minibatch, cfg.window, &mut replay_rng);
                    td_update(&mut net, target.as_ref(), Batch::Windows(&windows), cfg, &mut optimizer)
                }
            }
            .map_err(|e| at_slot(e, slot + 1))?;
            loss_sum += loss;
            loss_count += 1;
        }

        let done = slot + 1;
        if let Some(t) = target.as_mut() {
            if done % cfg.target_sync == 0 {
                *t = net.clone_params();
            }
        }
        if done % cfg.log_every == 0 || done == cfg.train_slots {
            let history: Vec<usize> = memory.recent(history_len).map(|t| t.s_next).collect();
            let policies = extract_policies(&net, &history)?;
            let record = TrainRecord {
                slot: done,
                loss: if loss_count > 0 { loss_sum / loss_count as f64 } else { f64::NAN },
                epsilon: eps,
                pi_star_errors: policy_error_count(&policies.pi_star, oracle),
                cum_reward,
            };
            debug!("slot {} loss {:.3e} errors {}", record.slot, record.loss, record.pi_star_errors);
            log.records.push(record);
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    let history: Vec<usize> = memory.recent(history_len).map(|t| t.s_next).collect();
    info!(
        "trained {} {} for {} slots: final errors {:?}",
        cfg.architecture.label(),
        cfg.backup.label(),
        cfg.train_slots,
        log.final_errors()
    );
    Ok((net, history))
}
