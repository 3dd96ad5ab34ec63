//! Flat `key = value` experiment configuration.
//!
//! Keys use dotted sections (`chain.n = 9`, `recurrent.alpha = 0.13`).
//! Lines starting with `#` and blank lines are ignored, so a CSV written by
//! the harness, whose `#` header lists every resolved key, parses back into
//! the configuration that produced it.
//!
//! `agent.<field>` sets the field for both the `mlp` and `recurrent`
//! sections. `full = true` switches defaults to the long sweep; it is
//! applied before any other key regardless of its position.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::markov::{build_circulant, calibrate_theta, random_permutation, ChainSpec, TransitionMatrix};
use crate::nn::OptimizerKind;
use crate::rl::{AgentConfig, Architecture, Backup};
use crate::rng;
use crate::signal::{Detector, SignalConfig};

/// Bisection tolerance on the normalized uncertainty.
pub const CALIBRATION_TOL: f64 = 1e-6;

/// Chain section.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n: usize,
    pub epsilon: f64,
    /// Target normalized uncertainty; ignored when `theta` is set.
    pub h_tilde: f64,
    pub theta: Option<f64>,
    /// Apply a random row permutation drawn from the run seed.
    pub permute: bool,
}

impl ChainConfig {
    /// Decay `ϑ`: explicit, or calibrated to `h_tilde`.
    pub fn resolve_theta(&self) -> Result<f64> {
        match self.theta {
            Some(t) => Ok(t),
            None => calibrate_theta(self.n, self.epsilon, self.h_tilde, CALIBRATION_TOL),
        }
    }

    /// Builds the chain for a run; the permutation comes from `run_seed`.
    pub fn build(&self, run_seed: u64) -> Result<TransitionMatrix> {
        let mut spec = ChainSpec::new(self.n, self.resolve_theta()?, self.epsilon);
        if self.permute {
            let mut r = rng::stream(run_seed, rng::PERMUTATION);
            spec = spec.with_permutation(random_permutation(self.n, &mut r));
        }
        build_circulant(&spec)
    }
}

/// Strategies evaluated in the implementation phase.
pub const STRATEGY_NAMES: [&str; 3] = ["random", "karaa", "lara"];

/// Backup choice before the Mellowmax coefficient is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackupKind {
    TargetNetwork,
    DoubleQ,
    Mellowmax,
}

impl BackupKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match Backup::parse(s, 1.0)? {
            Backup::TargetNetwork => BackupKind::TargetNetwork,
            Backup::DoubleQ => BackupKind::DoubleQ,
            Backup::Mellowmax { .. } => BackupKind::Mellowmax,
        })
    }

    pub fn label(self) -> &'static str {
        self.with_omega(1.0).label()
    }

    pub fn with_omega(self, omega: f64) -> Backup {
        match self {
            BackupKind::TargetNetwork => Backup::TargetNetwork,
            BackupKind::DoubleQ => Backup::DoubleQ,
            BackupKind::Mellowmax => Backup::Mellowmax { omega },
        }
    }
}

/// Everything needed to reproduce a run or a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Master seed; every run seed is derived from it.
    pub seed: u64,
    /// Replicate identifiers; one run per entry.
    pub seeds: Vec<u64>,
    pub full: bool,
    pub chain: ChainConfig,
    pub signal: SignalConfig,
    pub architecture: Architecture,
    pub backup: BackupKind,
    /// Mellowmax coefficient; `None` picks 15 for n ≤ 5 and 45 otherwise.
    pub omega: Option<f64>,
    pub mlp: AgentConfig,
    pub recurrent: AgentConfig,
    pub eval_slots: u64,
    pub strategies: Vec<String>,
    pub eval_checkpoint: Option<String>,
    pub fig1_h: Vec<f64>,
    pub fig1_n: usize,
    /// `(architecture, backup)` cells of the policy-error figure.
    pub fig1_combos: Vec<(Architecture, BackupKind)>,
    pub fig2_h: Vec<f64>,
    pub fig2_n: Vec<usize>,
    pub fig2_train_slots: u64,
    pub fig2_eval_slots: u64,
    pub plot: bool,
}

/// Training slots per run of the jam-probability sweep at desk scale.
pub const DESK_FIG2_TRAIN_SLOTS: u64 = 20_000;

impl ExperimentConfig {
    /// Defaults; `full` selects the long sweep.
    pub fn defaults(full: bool) -> Self {
        let placeholder = Backup::mellowmax_for(9);
        let mlp = AgentConfig::paper(Architecture::Mlp, placeholder);
        let recurrent = AgentConfig::paper(Architecture::Recurrent, placeholder);
        Self {
            seed: 1,
            seeds: if full { (1..=10).collect() } else { vec![1, 2, 3] },
            full,
            chain: ChainConfig { n: 9, epsilon: 1e-3, h_tilde: 0.85, theta: None, permute: true },
            signal: SignalConfig::default(),
            architecture: Architecture::Recurrent,
            backup: BackupKind::Mellowmax,
            omega: None,
            fig2_train_slots: if full { recurrent.train_slots } else { DESK_FIG2_TRAIN_SLOTS },
            mlp,
            recurrent,
            eval_slots: 1_000_000,
            strategies: STRATEGY_NAMES.iter().map(|s| s.to_string()).collect(),
            eval_checkpoint: None,
            fig1_h: vec![0.85, 0.9],
            fig1_n: 9,
            fig1_combos: vec![
                (Architecture::Mlp, BackupKind::DoubleQ),
                (Architecture::Mlp, BackupKind::Mellowmax),
                (Architecture::Recurrent, BackupKind::DoubleQ),
                (Architecture::Recurrent, BackupKind::Mellowmax),
            ],
            fig2_h: (0..8).map(|k| 0.60 + 0.05 * k as f64).map(|h| (h * 100.0).round() / 100.0).collect(),
            fig2_n: vec![5, 9],
            fig2_eval_slots: 1_000_000,
            plot: true,
        }
    }

    /// Parses `text`, applying keys on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let full = match pairs.iter().rev().find(|(k, _)| k == "full") {
            Some((_, v)) => parse_bool("full", v)?,
            None => false,
        };
        let mut cfg = Self::defaults(full);
        for (k, v) in pairs {
            if k != "full" {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "chain.n" => self.chain.n = parse_num(key, v)?,
            "chain.epsilon" => self.chain.epsilon = parse_num(key, v)?,
            "chain.h_tilde" => self.chain.h_tilde = parse_num(key, v)?,
            "chain.theta" => self.chain.theta = parse_opt(key, v)?,
            "chain.permute" => self.chain.permute = parse_bool(key, v)?,
            "signal.n0" => self.signal.n0 = parse_num(key, v)?,
            "signal.snr_lo_db" => self.signal.snr_range_db.0 = parse_num(key, v)?,
            "signal.snr_hi_db" => self.signal.snr_range_db.1 = parse_num(key, v)?,
            "signal.eval_snr_db" => self.signal.eval_snr_db = parse_num(key, v)?,
            "signal.channel_gain" => self.signal.channel_gain = parse_num(key, v)?,
            "signal.noiseless" => self.signal.noiseless = parse_bool(key, v)?,
            "signal.detector" => {
                self.signal.detector = match v {
                    "argmax" => Detector::ArgmaxEnergy,
                    "threshold" => match self.signal.detector {
                        d @ Detector::Thresholded { .. } => d,
                        Detector::ArgmaxEnergy => Detector::one_percent_false_alarm(self.signal.n0),
                    },
                    _ => return Err(Error::Config(format!("signal.detector: unknown detector '{v}'"))),
                }
            }
            "signal.threshold" => self.signal.detector = Detector::Thresholded { tau: parse_num(key, v)? },
            "agent.architecture" => self.architecture = Architecture::parse(v)?,
            "agent.backup" => self.backup = BackupKind::parse(v)?,
            "agent.omega" => self.omega = parse_opt(key, v)?,
            "eval.slots" => self.eval_slots = parse_num(key, v)?,
            "eval.strategies" => {
                let names: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                if let Some(bad) = names.iter().find(|s| !STRATEGY_NAMES.contains(&s.as_str())) {
                    return Err(Error::Config(format!("eval.strategies: unknown strategy '{bad}'")));
                }
                self.strategies = names;
            }
            "eval.checkpoint" => self.eval_checkpoint = if v.is_empty() || v == "none" { None } else { Some(v.to_string()) },
            "fig1.h_values" => self.fig1_h = parse_list(key, v)?,
            "fig1.n" => self.fig1_n = parse_num(key, v)?,
            "fig1.combos" => {
                self.fig1_combos = v
                    .split(',')
                    .map(|c| {
                        let (a, b) = c.trim().split_once(':').ok_or_else(|| {
                            Error::Config(format!("fig1.combos: expected architecture:backup, got '{c}'"))
                        })?;
                        Ok((Architecture::parse(a)?, BackupKind::parse(b)?))
                    })
                    .collect::<Result<_>>()?
            }
            "fig2.h_values" => self.fig2_h = parse_list(key, v)?,
            "fig2.n_values" => self.fig2_n = parse_list(key, v)?,
            "fig2.train_slots" => self.fig2_train_slots = parse_num(key, v)?,
            "fig2.eval_slots" => self.fig2_eval_slots = parse_num(key, v)?,
            "output.plot" => self.plot = parse_bool(key, v)?,
            _ => {
                let (section, field) = key
                    .split_once('.')
                    .ok_or_else(|| Error::Config(format!("unknown key '{key}'")))?;
                match section {
                    "mlp" => set_agent_field(&mut self.mlp, key, field, v)?,
                    "recurrent" => set_agent_field(&mut self.recurrent, key, field, v)?,
                    "agent" => {
                        set_agent_field(&mut self.mlp, key, field, v)?;
                        set_agent_field(&mut self.recurrent, key, field, v)?;
                    }
                    _ => return Err(Error::Config(format!("unknown key '{key}'"))),
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: at least one seed required".into()));
        }
        ChainSpec::new(self.chain.n, 0.5, self.chain.epsilon).validate()?;
        if self.chain.theta.is_none() && !(self.chain.h_tilde > 0.0 && self.chain.h_tilde < 1.0) {
            return Err(Error::Config("chain.h_tilde must lie in (0, 1)".into()));
        }
        self.signal.validate()?;
        if let Some(w) = self.omega {
            if !(w > 0.0) {
                return Err(Error::Config("agent.omega must be positive".into()));
            }
        }
        self.mlp.validate()?;
        self.recurrent.validate()?;
        if self.eval_slots == 0 || self.fig2_eval_slots == 0 {
            return Err(Error::Config("evaluation needs at least one slot".into()));
        }
        if self.fig2_n.iter().chain([&self.fig1_n]).any(|&n| n < 3 || n % 2 == 0) {
            return Err(Error::Config("figure channel counts must be odd and at least 3".into()));
        }
        Ok(())
    }

    /// Agent hyperparameters for one training run on `n` channels.
    pub fn agent(&self, architecture: Architecture, backup: BackupKind, n: usize) -> AgentConfig {
        let base = match architecture {
            Architecture::Mlp => &self.mlp,
            Architecture::Recurrent => &self.recurrent,
        };
        let omega = self.omega.unwrap_or_else(|| match Backup::mellowmax_for(n) {
            Backup::Mellowmax { omega } => omega,
            _ => unreachable!(),
        });
        AgentConfig { architecture, backup: backup.with_omega(omega), ..base.clone() }
    }

    /// The single-run agent selected by `agent.architecture`/`agent.backup`.
    pub fn selected_agent(&self) -> AgentConfig {
        self.agent(self.architecture, self.backup, self.chain.n)
    }

    /// Every key with its resolved value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("full", self.full.to_string());
        put("seed", self.seed.to_string());
        put("seeds", join(&self.seeds));
        put("chain.n", self.chain.n.to_string());
        put("chain.epsilon", self.chain.epsilon.to_string());
        put("chain.h_tilde", self.chain.h_tilde.to_string());
        put("chain.theta", opt(self.chain.theta));
        put("chain.permute", self.chain.permute.to_string());
        put("signal.n0", self.signal.n0.to_string());
        put("signal.snr_lo_db", self.signal.snr_range_db.0.to_string());
        put("signal.snr_hi_db", self.signal.snr_range_db.1.to_string());
        put("signal.eval_snr_db", self.signal.eval_snr_db.to_string());
        put("signal.channel_gain", self.signal.channel_gain.to_string());
        put("signal.noiseless", self.signal.noiseless.to_string());
        match self.signal.detector {
            Detector::ArgmaxEnergy => put("signal.detector", "argmax".into()),
            Detector::Thresholded { tau } => {
                put("signal.detector", "threshold".into());
                put("signal.threshold", tau.to_string());
            }
        }
        put("agent.architecture", self.architecture.label().into());
        put("agent.backup", self.backup.label().into());
        put("agent.omega", opt(self.omega));
        for (section, a) in [("mlp", &self.mlp), ("recurrent", &self.recurrent)] {
            for (field, value) in agent_fields(a) {
                put(&format!("{section}.{field}"), value);
            }
        }
        put("eval.slots", self.eval_slots.to_string());
        put("eval.strategies", self.strategies.join(","));
        put("eval.checkpoint", self.eval_checkpoint.clone().unwrap_or_else(|| "none".into()));
        put("fig1.h_values", join(&self.fig1_h));
        put("fig1.n", self.fig1_n.to_string());
        put(
            "fig1.combos",
            self.fig1_combos.iter().map(|(a, b)| format!("{}:{}", a.label(), b.label())).collect::<Vec<_>>().join(","),
        );
        put("fig2.h_values", join(&self.fig2_h));
        put("fig2.n_values", join(&self.fig2_n));
        put("fig2.train_slots", self.fig2_train_slots.to_string());
        put("fig2.eval_slots", self.fig2_eval_slots.to_string());
        put("output.plot", self.plot.to_string());
        out
    }

    /// `to_text` as `# `-prefixed comment lines under a title line.
    pub fn header(&self, title: &str) -> String {
        let mut out = format!("# {title}\n");
        for line in self.to_text().lines() {
            let _ = writeln!(out, "# {line}");
        }
        out
    }
}

/// `(key, value)` pairs of a config text in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", no + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Configuration embedded in the `#` header of a harness CSV.
pub fn config_from_csv_header(csv: &str) -> Result<ExperimentConfig> {
    let header: String = csv
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter(|l| l.contains(" = "))
        .map(|l| format!("{}\n", l.trim_start_matches('#').trim()))
        .collect();
    ExperimentConfig::parse(&header)
}

fn agent_fields(a: &AgentConfig) -> Vec<(&'static str, String)> {
    vec![
        ("gamma", a.gamma.to_string()),
        ("alpha", a.alpha.to_string()),
        ("alpha_head", a.alpha_head.to_string()),
        (
            "optimizer",
            match a.optimizer {
                OptimizerKind::Adam => "adam",
                OptimizerKind::Sgd => "sgd",
            }
            .into(),
        ),
        ("minibatch", a.minibatch.to_string()),
        ("train_slots", a.train_slots.to_string()),
        ("eps_start", a.eps_start.to_string()),
        ("eps_end", a.eps_end.to_string()),
        ("eps_anneal", a.eps_anneal.to_string()),
        ("target_sync", a.target_sync.to_string()),
        ("replay_capacity", a.replay_capacity.to_string()),
        ("warmup", a.warmup.to_string()),
        ("window", a.window.to_string()),
        ("burn_in", a.burn_in.to_string()),
        ("log_every", a.log_every.to_string()),
    ]
}

fn set_agent_field(a: &mut AgentConfig, key: &str, field: &str, v: &str) -> Result<()> {
    match field {
        "gamma" => a.gamma = parse_num(key, v)?,
        "alpha" => a.alpha = parse_num(key, v)?,
        "alpha_head" => a.alpha_head = parse_num(key, v)?,
        "optimizer" => {
            a.optimizer = match v {
                "adam" => OptimizerKind::Adam,
                "sgd" => OptimizerKind::Sgd,
                _ => return Err(Error::Config(format!("{key}: unknown optimizer '{v}'"))),
            }
        }
        "minibatch" => a.minibatch = parse_num(key, v)?,
        "train_slots" => a.train_slots = parse_num(key, v)?,
        "eps_start" => a.eps_start = parse_num(key, v)?,
        "eps_end" => a.eps_end = parse_num(key, v)?,
        "eps_anneal" => a.eps_anneal = parse_num(key, v)?,
        "target_sync" => a.target_sync = parse_num(key, v)?,
        "replay_capacity" => a.replay_capacity = parse_num(key, v)?,
        "warmup" => a.warmup = parse_num(key, v)?,
        "window" => a.window = parse_num(key, v)?,
        "burn_in" => a.burn_in = parse_num(key, v)?,
        "log_every" => a.log_every = parse_num(key, v)?,
        _ => return Err(Error::Config(format!("unknown key '{key}'"))),
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_opt(key: &str, v: &str) -> Result<Option<f64>> {
    match v {
        "auto" | "none" => Ok(None),
        _ => parse_num(key, v).map(Some),
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_num(key, s)).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        for full in [false, true] {
            let cfg = ExperimentConfig::defaults(full);
            assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn overrides_and_agent_shorthand() {
        let cfg = ExperimentConfig::parse(
            "chain.n = 5\nagent.backup = double-q\nagent.train_slots = 2000\nrecurrent.alpha = 0.05\n# comment\n\nsignal.detector = threshold\n",
        )
        .unwrap();
        assert_eq!(cfg.chain.n, 5);
        assert_eq!(cfg.backup, BackupKind::DoubleQ);
        assert_eq!(cfg.mlp.train_slots, 2000);
        assert_eq!(cfg.recurrent.train_slots, 2000);
        assert_eq!(cfg.recurrent.alpha, 0.05);
        assert_eq!(cfg.mlp.alpha, 7e-5);
        assert_eq!(cfg.signal.detector, Detector::one_percent_false_alarm(1.0));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn full_applies_before_other_keys() {
        let cfg = ExperimentConfig::parse("fig2.train_slots = 10\nfull = true\n").unwrap();
        assert!(cfg.full);
        assert_eq!(cfg.fig2_train_slots, 10);
        assert_eq!(cfg.seeds.len(), 10);
    }

    #[test]
    fn omega_follows_channel_count() {
        let cfg = ExperimentConfig::defaults(false);
        assert_eq!(cfg.agent(Architecture::Recurrent, BackupKind::Mellowmax, 5).backup, Backup::Mellowmax { omega: 15.0 });
        assert_eq!(cfg.agent(Architecture::Mlp, BackupKind::Mellowmax, 9).backup, Backup::Mellowmax { omega: 45.0 });
        let cfg = ExperimentConfig::parse("agent.omega = 7").unwrap();
        assert_eq!(cfg.agent(Architecture::Mlp, BackupKind::Mellowmax, 9).backup, Backup::Mellowmax { omega: 7.0 });
    }

    #[test]
    fn csv_header_parses_back() {
        let cfg = ExperimentConfig::parse("seed = 42\nchain.h_tilde = 0.7").unwrap();
        let csv = format!("{}slot,loss\n1,2\n", cfg.header("antijam train"));
        assert_eq!(config_from_csv_header(&csv).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            "chain.n = 4",
            "chain.epsilon = 0.5",
            "seeds = ",
            "agent.gamma = 1.5",
            "bogus = 1",
            "chain.n = nine",
            "eval.strategies = random,psychic",
            "signal.n0 = -1",
            "no equals sign",
            "fig1.combos = mlp",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }
}
