//! Multi-channel received-signal environment.
//!
//! Each slot the jammer occupies one channel `ζ_t`. The radar receives one
//! complex sample per channel: noise `w_k ~ CN(0, N₀)` on idle channels and
//! `x_k + w_k` on the jammed one (unit channel gain), where `x_k` has power
//! `SNR·N₀` and uniformly random phase. An energy detector turns the
//! samples into a single detected channel `s̃_t`.
//!
//! The radar's action `a_t` is a prediction of (or, when transmitting, a
//! choice for) the channel of slot `t + 1`; its learning reward is
//! `1{a_t = s̃_{t+1}}`, computed from detections only. The ground-truth
//! indicator `1{a_t = ζ_{t+1}}` is exposed for evaluation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::markov::{sample_next, TransitionMatrix};
use crate::rng::{self, StreamRng};

/// Energy detector variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    /// Channel with the largest `|y_k|²`, lowest index on ties.
    ArgmaxEnergy,
    /// Lowest-index channel with `|y_k|² > tau`, argmax energy if none.
    Thresholded { tau: f64 },
}

impl Detector {
    /// Threshold giving a 1% per-channel false-alarm rate under noise only:
    /// `|w|²` is exponential with mean `N₀`, so `τ = N₀ ln 100`.
    pub fn one_percent_false_alarm(n0: f64) -> Self {
        Detector::Thresholded { tau: n0 * 100f64.ln() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalConfig {
    /// Noise power `N₀` (linear).
    pub n0: f64,
    /// Training-phase SNR bounds in dB; each slot draws uniformly in dB.
    pub snr_range_db: (f64, f64),
    /// SNR used during the implementation phase.
    pub eval_snr_db: f64,
    /// Channel gain `g_k`, fixed at one.
    pub channel_gain: f64,
    pub detector: Detector,
    /// Drop the noise term entirely (full observation).
    pub noiseless: bool,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            n0: 1.0,
            snr_range_db: (5.0, 10.0),
            eval_snr_db: 10.0,
            channel_gain: 1.0,
            detector: Detector::ArgmaxEnergy,
            noiseless: false,
        }
    }
}

impl SignalConfig {
    pub fn noiseless() -> Self {
        Self { noiseless: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0 > 0.0) {
            return Err(Error::Config(format!("n0 must be positive, got {}", self.n0)));
        }
        if !(self.snr_range_db.0 <= self.snr_range_db.1) {
            return Err(Error::Config(format!("snr range {:?} is reversed", self.snr_range_db)));
        }
        if let Detector::Thresholded { tau } = self.detector {
            if !(tau > 0.0) {
                return Err(Error::Config(format!("detector threshold must be positive, got {tau}")));
            }
        }
        Ok(())
    }
}

/// Received samples for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vec<Complex64>,
    pub slot: u64,
}

/// One replay sample `(s̃_t, a_t, r_t, s̃_{t+1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s_det: usize,
    pub action: usize,
    /// 0.0 or 1.0.
    pub reward: f64,
    pub s_next: usize,
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub transition: Transition,
    /// Ground truth: the chosen channel is the one the jammer occupies.
    /// Not available to the radar; evaluation only.
    pub jammed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Training,
    Implementation,
}

/// Maps the latest detected channel to the channel used in the next slot.
pub trait Policy {
    fn select(&mut self, detected: usize) -> usize;
}

impl<F: FnMut(usize) -> usize> Policy for F {
    fn select(&mut self, detected: usize) -> usize {
        self(detected)
    }
}

pub fn detect(obs: &Observation, detector: Detector) -> usize {
    let energy = |k: usize| obs.y[k].norm_sqr();
    let argmax_energy = || {
        (1..obs.y.len()).fold(0, |best, k| if energy(k) > energy(best) { k } else { best })
    };
    match detector {
        Detector::ArgmaxEnergy => argmax_energy(),
        Detector::Thresholded { tau } => {
            (0..obs.y.len()).find(|&k| energy(k) > tau).unwrap_or_else(argmax_energy)
        }
    }
}

/// Jammer chain plus receiver, advanced one slot at a time.
#[derive(Debug, Clone)]
pub struct Env {
    chain: TransitionMatrix,
    cfg: SignalConfig,
    phase: Phase,
    true_state: usize,
    detected: usize,
    slot: u64,
    chain_rng: StreamRng,
    noise_rng: StreamRng,
    snr_rng: StreamRng,
}

impl Env {
    /// Starts in the training phase with the jammer drawn from the stationary
    /// distribution, and performs the first observation.
    pub fn new(chain: TransitionMatrix, cfg: SignalConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut chain_rng = rng::stream(seed, rng::CHAIN);
        let psi = chain.stationary();
        let u: f64 = chain_rng.random();
        let mut acc = 0.0;
        let true_state = psi
            .iter()
            .position(|p| {
                acc += p;
                u < acc
            })
            .unwrap_or(chain.n() - 1);
        let mut env = Self {
            chain,
            cfg,
            phase: Phase::Training,
            true_state,
            detected: 0,
            slot: 0,
            chain_rng,
            noise_rng: rng::stream(seed, rng::NOISE),
            snr_rng: rng::stream(seed, rng::SNR),
        };
        env.detected = env.observe_current();
        Ok(env)
    }

    pub fn n(&self) -> usize {
        self.chain.n()
    }

    pub fn chain(&self) -> &TransitionMatrix {
        &self.chain
    }

    pub fn config(&self) -> &SignalConfig {
        &self.cfg
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    /// Channel the jammer occupies in the current slot.
    pub fn true_state(&self) -> usize {
        self.true_state
    }

    /// Latest detected channel `s̃_t`.
    pub fn detected(&self) -> usize {
        self.detected
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    fn slot_snr_db(&mut self) -> f64 {
        match self.phase {
            Phase::Training => {
                let (lo, hi) = self.cfg.snr_range_db;
                if lo == hi {
                    lo
                } else {
                    self.snr_rng.random_range(lo..=hi)
                }
            }
            Phase::Implementation => self.cfg.eval_snr_db,
        }
    }

    /// Received samples of the current slot.
    pub fn emit_observation(&mut self) -> Observation {
        let n = self.n();
        let snr = 10f64.powf(self.slot_snr_db() / 10.0);
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        if !self.cfg.noiseless {
            let sigma = (self.cfg.n0 / 2.0).sqrt();
            for yk in y.iter_mut() {
                let re: f64 = self.noise_rng.sample(StandardNormal);
                let im: f64 = self.noise_rng.sample(StandardNormal);
                *yk = Complex64::new(sigma * re, sigma * im);
            }
        }
        let phase: f64 = self.noise_rng.random_range(0.0..std::f64::consts::TAU);
        let x = Complex64::from_polar((snr * self.cfg.n0).sqrt(), phase);
        y[self.true_state] += self.cfg.channel_gain * x;
        Observation { y, slot: self.slot }
    }

    /// Observes and detects the current slot again (the initial step of the
    /// implementation phase), updating the detected state.
    pub fn observe_current(&mut self) -> usize {
        let obs = self.emit_observation();
        self.detected = detect(&obs, self.cfg.detector);
        self.detected
    }

    /// Advances the jammer one slot. `action` is the radar's channel for the
    /// new slot.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if action >= self.n() {
            return Err(Error::Contract(format!("action {action} outside 0..{}", self.n())));
        }
        let s_det = self.detected;
        self.true_state = sample_next(&self.chain, self.true_state, &mut self.chain_rng);
        self.slot += 1;
        let obs = self.emit_observation();
        self.detected = detect(&obs, self.cfg.detector);
        let transition = Transition {
            s_det,
            action,
            reward: if action == self.detected { 1.0 } else { 0.0 },
            s_next: self.detected,
        };
        Ok(StepOutcome { transition, jammed: action == self.true_state })
    }
}

/// Monte-Carlo jam-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JamEstimate {
    pub jammed: u64,
    pub slots: u64,
}

impl JamEstimate {
    pub fn probability(&self) -> f64 {
        self.jammed as f64 / self.slots as f64
    }

    /// Binomial standard error of [`probability`](Self::probability).
    pub fn std_error(&self) -> f64 {
        let p = self.probability();
        (p * (1.0 - p) / self.slots as f64).sqrt()
    }
}

/// Runs the implementation phase for `slots` slots and counts how often the
/// radar's channel coincides with the jammer's.
///
/// The initial step detects the jammer in the current slot; every following
/// slot the policy picks a channel from the latest detection and transmits
/// in it while the jammer moves.
pub fn jam_probability_mc<P: Policy + ?Sized>(
    env: &mut Env,
    policy: &mut P,
    slots: u64,
) -> Result<JamEstimate> {
    if slots == 0 {
        return Err(Error::Contract("at least one evaluation slot required".into()));
    }
    env.set_phase(Phase::Implementation);
    let mut detected = env.observe_current();
    let mut jammed = 0;
    for _ in 0..slots {
        let action = policy.select(detected);
        let outcome = env.step(action)?;
        jammed += u64::from(outcome.jammed);
        detected = outcome.transition.s_next;
    }
    Ok(JamEstimate { jammed, slots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{build_circulant, ChainSpec};

    fn chain() -> TransitionMatrix {
        build_circulant(&ChainSpec::new(5, 0.5, 0.001)).unwrap()
    }

    #[test]
    fn tie_breaks_to_lowest_channel() {
        let obs = Observation { y: vec![Complex64::new(1.0, 0.0); 4], slot: 0 };
        assert_eq!(detect(&obs, Detector::ArgmaxEnergy), 0);
        assert_eq!(detect(&obs, Detector::Thresholded { tau: 5.0 }), 0);
    }

    #[test]
    fn threshold_picks_first_crossing() {
        let y = [0.1, 3.0, 5.0, 0.2].iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let obs = Observation { y, slot: 0 };
        assert_eq!(detect(&obs, Detector::Thresholded { tau: 4.0 }), 1);
        assert_eq!(detect(&obs, Detector::ArgmaxEnergy), 2);
    }

    #[test]
    fn noiseless_detection_is_exact() {
        let mut env = Env::new(chain(), SignalConfig::noiseless(), 1).unwrap();
        for _ in 0..1000 {
            env.step(0).unwrap();
            assert_eq!(env.detected(), env.true_state());
        }
    }

    #[test]
    fn very_high_snr_detection_is_exact() {
        let cfg = SignalConfig { snr_range_db: (80.0, 80.0), ..SignalConfig::default() };
        let mut env = Env::new(chain(), cfg, 2).unwrap();
        for _ in 0..10_000 {
            env.step(0).unwrap();
            assert_eq!(env.detected(), env.true_state());
        }
    }

    #[test]
    fn received_power_moments() {
        // E|y_ζ|² = SNR·N₀ + N₀ = 11, E|y_k|² = N₀ = 1
        let cfg = SignalConfig { snr_range_db: (10.0, 10.0), ..SignalConfig::default() };
        let mut env = Env::new(chain(), cfg, 3).unwrap();
        let draws = 100_000;
        let (mut jam, mut idle, mut idle_count) = (0.0, 0.0, 0usize);
        for _ in 0..draws {
            let obs = env.emit_observation();
            for (k, y) in obs.y.iter().enumerate() {
                if k == env.true_state() {
                    jam += y.norm_sqr();
                } else {
                    idle += y.norm_sqr();
                    idle_count += 1;
                }
            }
        }
        // Var|x+w|² = 2·SNR·N₀² + N₀² = 21; Var|w|² = 1
        let jam_mean = jam / draws as f64;
        let idle_mean = idle / idle_count as f64;
        assert!((jam_mean - 11.0).abs() < 3.0 * (21.0 / draws as f64).sqrt(), "{jam_mean}");
        assert!((idle_mean - 1.0).abs() < 3.0 * (1.0 / idle_count as f64).sqrt(), "{idle_mean}");
    }

    #[test]
    fn same_seed_same_observations() {
        let mut a = Env::new(chain(), SignalConfig::default(), 9).unwrap();
        let mut b = Env::new(chain(), SignalConfig::default(), 9).unwrap();
        for t in 0..50 {
            assert_eq!(a.step(t % 5).unwrap(), b.step(t % 5).unwrap());
        }
        assert_eq!(a.emit_observation(), b.emit_observation());
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let mut env = Env::new(chain(), SignalConfig::default(), 0).unwrap();
        assert!(matches!(env.step(5), Err(Error::Contract(_))));
    }

    #[test]
    fn reward_tracks_detection_not_truth() {
        let cfg = SignalConfig { snr_range_db: (0.0, 0.0), ..SignalConfig::default() };
        let mut env = Env::new(chain(), cfg, 4).unwrap();
        let mut disagreements = 0;
        for t in 0..5000 {
            let out = env.step(t % 5).unwrap();
            let tr = out.transition;
            assert_eq!(tr.reward == 1.0, tr.action == tr.s_next);
            if (tr.reward == 1.0) != out.jammed {
                disagreements += 1;
                assert_ne!(env.detected(), env.true_state());
            }
        }
        assert!(disagreements > 0);
    }

    #[test]
    fn near_deterministic_chain_self_prediction() {
        let p = build_circulant(&ChainSpec::new(5, 1e-9, 0.001)).unwrap();
        let mut env = Env::new(p, SignalConfig::noiseless(), 5).unwrap();
        let slots = 200_000;
        let mut hits = 0.0;
        for _ in 0..slots {
            let a = env.detected();
            hits += env.step(a).unwrap().transition.reward;
        }
        let expect = 1.0 - 4.0 * 0.001;
        let sigma = (expect * (1.0 - expect) / slots as f64).sqrt();
        assert!((hits / slots as f64 - expect).abs() < 4.0 * sigma);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SignalConfig { n0: 0.0, ..SignalConfig::default() };
        assert!(Env::new(chain(), cfg, 0).is_err());
    }
}
