//! Deep Q-learning of the jammer's next channel: replay memory, Mellowmax,
//! TD updates, the ε-greedy training loop and policy extraction.

pub mod mellowmax;
pub mod qnet;
pub mod replay;
pub mod td;
pub mod train;

pub use mellowmax::mellowmax;
pub use qnet::{extract_policies, policies_from_q_table, policy_error_count, ExtractedPolicies, QNet};
pub use replay::ReplayMemory;
pub use td::{bootstrap, target_from_values, target_value, td_loss_and_grad, td_update, Batch};
pub use train::{train, train_with_oracle, TrainError, TrainLog, TrainOutcome, TrainRecord};

use crate::error::{Error, Result};
use crate::nn::OptimizerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    Mlp,
    Recurrent,
}

impl Architecture {
    pub fn label(self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Recurrent => "recurrent",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Architecture::Mlp),
            "recurrent" | "lstm" => Ok(Architecture::Recurrent),
            _ => Err(Error::Config(format!("unknown architecture '{s}'"))),
        }
    }
}

/// How the next-state value in the TD target is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backup {
    /// `max_a Q_target(s′, a)`.
    TargetNetwork,
    /// `Q_target(s′, argmax_a Q_online(s′, a))`.
    DoubleQ,
    /// Mellowmax of the online values; no target network.
    Mellowmax { omega: f64 },
}

impl Backup {
    pub fn label(self) -> &'static str {
        match self {
            Backup::TargetNetwork => "target-network",
            Backup::DoubleQ => "double-q",
            Backup::Mellowmax { .. } => "mellowmax",
        }
    }

    /// Parses a backup name; `omega` is used only by Mellowmax.
    pub fn parse(s: &str, omega: f64) -> Result<Self> {
        match s {
            "target-network" | "target" => Ok(Backup::TargetNetwork),
            "double-q" | "ddqn" => Ok(Backup::DoubleQ),
            "mellowmax" => Ok(Backup::Mellowmax { omega }),
            _ => Err(Error::Config(format!("unknown backup '{s}'"))),
        }
    }

    pub fn uses_target_network(self) -> bool {
        !matches!(self, Backup::Mellowmax { .. })
    }

    /// Mellowmax with the published coefficient for `n` channels: 15 for
    /// five channels, 45 for nine.
    pub fn mellowmax_for(n: usize) -> Self {
        Backup::Mellowmax { omega: if n <= 5 { 15.0 } else { 45.0 } }
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub architecture: Architecture,
    pub backup: Backup,
    pub gamma: f64,
    /// Learning rate of the whole MLP, or of the recurrent cell.
    pub alpha: f64,
    /// Learning rate of the recurrent output head.
    pub alpha_head: f64,
    pub optimizer: OptimizerKind,
    pub minibatch: usize,
    pub train_slots: u64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of `train_slots` over which ε decays linearly.
    pub eps_anneal: f64,
    pub target_sync: u64,
    pub replay_capacity: usize,
    /// Stored transitions required before the first update.
    pub warmup: usize,
    /// Transitions per recurrent training window.
    pub window: usize,
    /// Leading window steps that only warm up the hidden state.
    pub burn_in: usize,
    pub log_every: u64,
}

impl AgentConfig {
    /// Published hyperparameters for `architecture`: MLP with γ = 0.95 and
    /// Adam at learning rate 7e-5, recurrent with γ = 0.1 and plain gradient
    /// descent at rates 0.13 (cell) and 0.01 (head); minibatch 16 and
    /// 300,000 slots for both.
    pub fn paper(architecture: Architecture, backup: Backup) -> Self {
        let (gamma, alpha, alpha_head, optimizer) = match architecture {
            Architecture::Mlp => (0.95, 7e-5, 7e-5, OptimizerKind::Adam),
            Architecture::Recurrent => (0.1, 0.13, 0.01, OptimizerKind::Sgd),
        };
        Self {
            architecture,
            backup,
            gamma,
            alpha,
            alpha_head,
            optimizer,
            minibatch: 16,
            train_slots: 300_000,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_anneal: 0.5,
            target_sync: 1000,
            replay_capacity: 100_000,
            warmup: 1000,
            window: 16,
            burn_in: 4,
            log_every: 1000,
        }
    }

    /// ε after `slot` slots of training.
    pub fn epsilon(&self, slot: u64) -> f64 {
        let horizon = self.eps_anneal * self.train_slots as f64;
        if horizon <= 0.0 {
            return self.eps_end;
        }
        let frac = (slot as f64 / horizon).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("agent.gamma must lie in (0, 1)");
        }
        if let Backup::Mellowmax { omega } = self.backup {
            if !(omega > 0.0 && omega.is_finite()) {
                return bad("agent.omega must be positive");
            }
        }
        if !(self.alpha >= 0.0 && self.alpha_head >= 0.0) {
            return bad("learning rates must be nonnegative");
        }
        if self.minibatch == 0 {
            return bad("agent.minibatch must be at least 1");
        }
        for e in [self.eps_start, self.eps_end, self.eps_anneal] {
            if !(0.0..=1.0).contains(&e) {
                return bad("epsilon schedule values must lie in [0, 1]");
            }
        }
        if self.replay_capacity == 0 || self.target_sync == 0 || self.log_every == 0 {
            return bad("replay capacity, target sync and log interval must be positive");
        }
        if self.architecture == Architecture::Recurrent && self.burn_in >= self.window {
            return bad("agent.burn_in must be smaller than agent.window");
        }
        if self.warmup > self.replay_capacity {
            return bad("agent.warmup exceeds the replay capacity");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_schedule() {
        let cfg = AgentConfig { train_slots: 1000, ..AgentConfig::paper(Architecture::Mlp, Backup::DoubleQ) };
        assert_eq!(cfg.epsilon(0), 1.0);
        assert!((cfg.epsilon(250) - 0.525).abs() < 1e-12);
        assert!((cfg.epsilon(500) - 0.05).abs() < 1e-12);
        assert!((cfg.epsilon(900) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn presets_validate() {
        for arch in [Architecture::Mlp, Architecture::Recurrent] {
            for backup in [Backup::TargetNetwork, Backup::DoubleQ, Backup::mellowmax_for(9)] {
                AgentConfig::paper(arch, backup).validate().unwrap();
            }
        }
    }

    #[test]
    fn invalid_values_rejected() {
        let base = AgentConfig::paper(Architecture::Recurrent, Backup::mellowmax_for(5));
        assert!(AgentConfig { gamma: 1.0, ..base.clone() }.validate().is_err());
        assert!(AgentConfig { minibatch: 0, ..base.clone() }.validate().is_err());
        assert!(AgentConfig { backup: Backup::Mellowmax { omega: 0.0 }, ..base.clone() }.validate().is_err());
        assert!(AgentConfig { burn_in: 16, ..base }.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for b in [Backup::TargetNetwork, Backup::DoubleQ, Backup::Mellowmax { omega: 3.0 }] {
            assert_eq!(Backup::parse(b.label(), 3.0).unwrap(), b);
        }
        for a in [Architecture::Mlp, Architecture::Recurrent] {
            assert_eq!(Architecture::parse(a.label()).unwrap(), a);
        }
    }
}
