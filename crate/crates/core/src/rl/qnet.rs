//! Q-network wrapper over the two architectures, policy extraction and
//! checkpointing.

use rand::Rng;

use super::{AgentConfig, Architecture};
use crate::error::{Error, Result};
use crate::markov::{argmax, argmin, PolicyOracle};
use crate::nn::{one_hot, Activation, Lstm, LstmState, Mlp, Params};

const ARGMIN_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum QNet {
    Mlp(Mlp),
    Recurrent(Lstm),
}

impl QNet {
    pub fn new<R: Rng + ?Sized>(arch: Architecture, n: usize, rng: &mut R) -> Self {
        match arch {
            Architecture::Mlp => QNet::Mlp(Mlp::q_network(n, rng)),
            Architecture::Recurrent => QNet::Recurrent(Lstm::q_network(n, rng)),
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            QNet::Mlp(_) => Architecture::Mlp,
            QNet::Recurrent(_) => Architecture::Recurrent,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            QNet::Mlp(m) => m.n_out(),
            QNet::Recurrent(l) => l.n_out(),
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            QNet::Mlp(m) => m.params(),
            QNet::Recurrent(l) => l.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut Params {
        match self {
            QNet::Mlp(m) => m.params_mut(),
            QNet::Recurrent(l) => l.params_mut(),
        }
    }

    /// Frozen copy of the parameters, e.g. for a target network.
    pub fn clone_params(&self) -> QNet {
        self.clone()
    }

    /// Learning rate of every parameter block: the recurrent head uses
    /// `alpha_head`, everything else `alpha`.
    pub fn block_learning_rates(&self, cfg: &AgentConfig) -> Vec<f64> {
        let count = self.params().blocks.len();
        match self {
            QNet::Mlp(_) => vec![cfg.alpha; count],
            QNet::Recurrent(_) => (0..count)
                .map(|k| if Lstm::is_head_block(k) { cfg.alpha_head } else { cfg.alpha })
                .collect(),
        }
    }

    /// Architecture label stored in checkpoints.
    pub fn arch_label(&self) -> String {
        match self {
            QNet::Mlp(m) => {
                let sizes: Vec<String> = m.sizes().iter().map(|s| s.to_string()).collect();
                format!("mlp:{}", sizes.join(","))
            }
            QNet::Recurrent(l) => format!("lstm:{},{},{}", l.n_in(), l.hidden(), l.n_out()),
        }
    }

    pub fn to_checkpoint(&self) -> String {
        self.params().to_text(&self.arch_label())
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let (arch, params) = Params::from_text(text)?;
        let (kind, dims) = arch
            .split_once(':')
            .ok_or_else(|| Error::ParamFormat(format!("bad arch label '{arch}'")))?;
        let dims: Vec<usize> = dims
            .split(',')
            .map(|d| d.parse().map_err(|_| Error::ParamFormat(format!("bad dimension '{d}'"))))
            .collect::<Result<_>>()?;
        match (kind, dims.as_slice()) {
            ("mlp", sizes) if sizes.len() >= 2 => Ok(QNet::Mlp(Mlp::from_params(sizes, Activation::Relu, params)?)),
            ("lstm", &[n_in, hidden, n_out]) => Ok(QNet::Recurrent(Lstm::from_params(n_in, hidden, n_out, params)?)),
            _ => Err(Error::ParamFormat(format!("unknown architecture '{arch}'"))),
        }
    }

    /// Q-values for every state as input, one row per state. Recurrent nets
    /// first consume `history` (detected states, oldest first) from a zero
    /// hidden state, then take each state as the next input.
    pub fn q_table(&self, history: &[usize]) -> Result<Vec<Vec<f64>>> {
        let n = self.n_actions();
        match self {
            QNet::Mlp(m) => (0..n).map(|s| m.forward(&one_hot(n, s))).collect(),
            QNet::Recurrent(l) => {
                let state = if history.is_empty() {
                    LstmState::zeros(l.hidden())
                } else {
                    let inputs: Vec<Vec<f64>> = history.iter().map(|&s| one_hot(n, s)).collect();
                    l.forward_sequence(&inputs, &LstmState::zeros(l.hidden()))?.final_state
                };
                (0..n).map(|s| l.step(&one_hot(n, s), &state).map(|(q, _)| q)).collect()
            }
        }
    }
}

/// Greedy policies read off a Q-network.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedPolicies {
    /// Per-state argmax (most likely next jammer channel).
    pub pi_star: Vec<usize>,
    /// Per-state argmin, lowest index among ties.
    pub pi_lara: Vec<usize>,
    /// Full argmin tie set per state.
    pub lara_ties: Vec<Vec<usize>>,
    pub q_table: Vec<Vec<f64>>,
}

pub fn policies_from_q_table(q_table: Vec<Vec<f64>>) -> ExtractedPolicies {
    let pi_star = q_table.iter().map(|row| argmax(row)).collect();
    let pi_lara = q_table.iter().map(|row| argmin(row)).collect();
    let lara_ties = q_table
        .iter()
        .map(|row| {
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            (0..row.len()).filter(|&a| row[a] - min <= ARGMIN_TIE_TOL).collect()
        })
        .collect();
    ExtractedPolicies { pi_star, pi_lara, lara_ties, q_table }
}

/// Reads `π̂*` and `π̂_L` from `net`; see [`QNet::q_table`] for `history`.
pub fn extract_policies(net: &QNet, history: &[usize]) -> Result<ExtractedPolicies> {
    Ok(policies_from_q_table(net.q_table(history)?))
}

/// Number of states where `pi_star` disagrees with the oracle's.
pub fn policy_error_count(pi_star: &[usize], oracle: &PolicyOracle) -> usize {
    pi_star.iter().zip(&oracle.pi_star).filter(|(a, b)| a != b).count()
}
