//! Implementation-phase channel selection: uniform random hopping, KARAA
//! (avoid the most likely next jammer channel) and LARA (take the least
//! likely one), with closed-form jam probabilities under full observation.

use log::warn;
use rand::Rng;

use crate::error::{Error, Result};
use crate::markov::{PolicyOracle, TransitionMatrix};
use crate::rng::{self, StreamRng};
use crate::signal::Policy;

/// Which strategy, with the learned policy it relies on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyKind {
    Random,
    /// Uniform over every channel except `pi_star[s]`.
    Karaa(Vec<usize>),
    /// Always `pi_lara[s]`.
    Lara(Vec<usize>),
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Karaa(_) => "karaa",
            StrategyKind::Lara(_) => "lara",
        }
    }
}

/// Whether no two states share the same policy action.
pub fn is_injective(policy: &[usize]) -> bool {
    let mut seen = vec![false; policy.len()];
    policy.iter().all(|&a| a < seen.len() && !std::mem::replace(&mut seen[a], true))
}

/// A strategy bound to its own random stream.
#[derive(Debug, Clone)]
pub struct Strategy {
    kind: StrategyKind,
    n: usize,
    rng: StreamRng,
}

impl Strategy {
    pub fn new(kind: StrategyKind, n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract("strategies need at least two channels".into()));
        }
        if let StrategyKind::Karaa(p) | StrategyKind::Lara(p) = &kind {
            if p.len() != n || p.iter().any(|&a| a >= n) {
                return Err(Error::Contract(format!("policy {p:?} is not a map into 0..{n}")));
            }
        }
        if let StrategyKind::Karaa(p) = &kind {
            if !is_injective(p) {
                warn!("most-likely-channel policy {p:?} is not injective; excluding per state only");
            }
        }
        Ok(Self { kind, n, rng: rng::stream(seed, rng::STRATEGY) })
    }

    pub fn kind(&self) -> &StrategyKind {
        &self.kind
    }

    /// Channel for the next slot given the detected channel `s`.
    pub fn select_action(&mut self, s: usize) -> usize {
        match &self.kind {
            StrategyKind::Random => self.rng.random_range(0..self.n),
            StrategyKind::Karaa(pi_star) => {
                let skip = pi_star[s];
                let a = self.rng.random_range(0..self.n - 1);
                if a >= skip {
                    a + 1
                } else {
                    a
                }
            }
            StrategyKind::Lara(pi_lara) => pi_lara[s],
        }
    }
}

impl Policy for Strategy {
    fn select(&mut self, detected: usize) -> usize {
        self.select_action(detected)
    }
}

/// Long-run jam probability when the radar observes the jammer perfectly.
/// KARAA and LARA use the supplied policies, so a learned policy can be
/// scored exactly; pass the oracle's to get the best achievable rate.
pub fn analytic_jam_probability(chain: &TransitionMatrix, kind: &StrategyKind) -> f64 {
    let n = chain.n();
    let psi = chain.stationary();
    match kind {
        StrategyKind::Random => 1.0 / n as f64,
        StrategyKind::Karaa(pi_star) => (0..n)
            .map(|s| psi[s] * (1.0 - chain.get(s, pi_star[s])) / (n - 1) as f64)
            .sum(),
        StrategyKind::Lara(pi_lara) => (0..n).map(|s| psi[s] * chain.get(s, pi_lara[s])).sum(),
    }
}

/// The three strategies built from the exact oracle.
pub fn oracle_strategies(oracle: &PolicyOracle) -> [StrategyKind; 3] {
    [StrategyKind::Random, StrategyKind::Karaa(oracle.pi_star.clone()), StrategyKind::Lara(oracle.pi_lara())]
}
