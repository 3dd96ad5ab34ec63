//! Central finite-difference verification of the backpropagation code.
//!
//! For a random direction `d` over all parameters, the analytic directional
//! derivative `∇L·d` is compared with `(L(θ + hd) − L(θ − hd)) / 2h`.

use std::fmt::Write as _;

use rand::Rng;

use super::lstm::{Lstm, LstmState};
use super::mlp::Mlp;
use super::one_hot;
use super::params::Params;
use crate::rng::{self, StreamRng};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub scales: Vec<f64>,
    pub directions: usize,
    pub step: f64,
    pub tolerance: f64,
    pub channels: usize,
    /// Negative control: scales one analytic gradient block by 1.5.
    pub corrupt_gradient: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            scales: vec![0.1, 1.0, 3.0],
            directions: 50,
            step: DEFAULT_STEP,
            tolerance: DEFAULT_TOLERANCE,
            channels: 5,
            corrupt_gradient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckEntry {
    pub network: &'static str,
    pub scale: f64,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub entries: Vec<GradcheckEntry>,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_rel_error < self.tolerance)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.max_rel_error).fold(0.0, f64::max)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let verdict = if e.max_rel_error < self.tolerance { "ok" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{:<5} scale={:<4} max_rel_error={:.3e} {}",
                e.network, e.scale, e.max_rel_error, verdict
            );
        }
        let _ = writeln!(
            out,
            "gradcheck {} (max {:.3e}, tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.max_rel_error(),
            self.tolerance
        );
        out
    }
}

/// Redraws every block uniformly in `±scale·limit`, where `limit` is the
/// Glorot bound for weight matrices and 0.5 for bias vectors.
pub fn randomize(params: &mut Params, scale: f64, rng: &mut StreamRng) {
    for b in &mut params.blocks {
        let limit = if b.cols == 1 { 0.5 } else { (6.0 / (b.rows + b.cols) as f64).sqrt() };
        b.fill_uniform(scale * limit, rng);
    }
}

fn random_direction(like: &Params, rng: &mut StreamRng) -> Params {
    let mut d = like.zeros_like();
    d.values_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    d
}

/// Largest relative error between analytic and central-difference
/// directional derivatives over `directions` random directions.
///
/// `loss` returns the loss and a pattern of piecewise-linear branch choices
/// (e.g. which rectifiers are active). Directions whose two probes land on
/// a different pattern than the base point straddle a kink, where the
/// central difference is not a derivative; they are redrawn.
pub fn directional_check<F>(
    params: &Params,
    grad: &Params,
    loss: F,
    directions: usize,
    step: f64,
    rng: &mut StreamRng,
) -> f64
where
    F: Fn(&Params) -> (f64, Vec<bool>),
{
    let (_, base_pattern) = loss(params);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < directions && attempts < 100 * directions {
        attempts += 1;
        let d = random_direction(params, rng);
        let analytic = grad.dot(&d);
        let mut plus = params.clone();
        plus.add_scaled(&d, step);
        let mut minus = params.clone();
        minus.add_scaled(&d, -step);
        let (loss_plus, pattern_plus) = loss(&plus);
        let (loss_minus, pattern_minus) = loss(&minus);
        if pattern_plus != base_pattern || pattern_minus != base_pattern {
            continue;
        }
        accepted += 1;
        let numeric = (loss_plus - loss_minus) / (2.0 * step);
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    worst
}

fn squared_error(outputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    outputs
        .iter()
        .zip(targets)
        .flat_map(|(o, t)| o.iter().zip(t).map(|(a, b)| 0.5 * (a - b) * (a - b)))
        .sum()
}

fn random_targets(count: usize, n: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn corrupt(grad: &mut Params) {
    if let Some(b) = grad.blocks.first_mut() {
        b.data.iter_mut().for_each(|g| *g *= 1.5);
    }
}

fn check_mlp(opts: &GradcheckOptions, scale: f64, rng: &mut StreamRng) -> f64 {
    let n = opts.channels;
    let mut net = Mlp::q_network(n, rng);
    randomize(net.params_mut(), scale, rng);
    let mut inputs: Vec<Vec<f64>> = (0..n).map(|k| one_hot(n, k)).collect();
    inputs.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    let targets = random_targets(inputs.len(), n, rng);

    let mut grad = net.params().zeros_like();
    for (x, t) in inputs.iter().zip(&targets) {
        let (q, cache) = net.forward_cached(x).expect("shapes fixed above");
        let dq: Vec<f64> = q.iter().zip(t).map(|(a, b)| a - b).collect();
        net.backward(&cache, &dq, &mut grad).expect("shapes fixed above");
    }
    if opts.corrupt_gradient {
        corrupt(&mut grad);
    }
    let loss = |p: &Params| {
        let probe = Mlp::from_params(net.sizes(), net.activation(), p.clone()).expect("same shape");
        let mut outs = Vec::with_capacity(inputs.len());
        let mut pattern = Vec::new();
        for x in &inputs {
            let (q, cache) = probe.forward_cached(x).expect("shape");
            outs.push(q);
            pattern.extend(cache.active_units());
        }
        (squared_error(&outs, &targets), pattern)
    };
    directional_check(net.params(), &grad, loss, opts.directions, opts.step, rng)
}

fn check_lstm(opts: &GradcheckOptions, scale: f64, rng: &mut StreamRng) -> f64 {
    let n = opts.channels;
    let hidden = 32;
    let mut net = Lstm::q_network(n, rng);
    randomize(net.params_mut(), scale, rng);
    let seq: Vec<Vec<f64>> = (0..4).map(|_| one_hot(n, rng.random_range(0..n))).collect();
    let init = LstmState {
        h: (0..hidden).map(|_| rng.random_range(-0.5..0.5)).collect(),
        c: (0..hidden).map(|_| rng.random_range(-0.5..0.5)).collect(),
    };
    let targets = random_targets(seq.len(), n, rng);

    let trace = net.forward_sequence(&seq, &init).expect("shapes fixed above");
    let d_out: Vec<Vec<f64>> = trace
        .outputs
        .iter()
        .zip(&targets)
        .map(|(q, t)| q.iter().zip(t).map(|(a, b)| a - b).collect())
        .collect();
    let mut grad = net.params().zeros_like();
    net.backward_sequence(&trace, &d_out, &mut grad).expect("shapes fixed above");
    if opts.corrupt_gradient {
        corrupt(&mut grad);
    }
    let loss = |p: &Params| {
        let probe = Lstm::from_params(n, hidden, n, p.clone()).expect("same shape");
        let trace = probe.forward_sequence(&seq, &init).expect("shape");
        (squared_error(&trace.outputs, &targets), Vec::new())
    };
    directional_check(net.params(), &grad, loss, opts.directions, opts.step, rng)
}

/// Finite-difference suite over both architectures and every scale.
pub fn run_gradcheck(opts: &GradcheckOptions) -> GradcheckReport {
    let mut entries = Vec::new();
    for (i, &scale) in opts.scales.iter().enumerate() {
        let mut rng = rng::indexed_stream(opts.seed, "gradcheck.mlp", i as u64);
        entries.push(GradcheckEntry { network: "mlp", scale, max_rel_error: check_mlp(opts, scale, &mut rng) });
        let mut rng = rng::indexed_stream(opts.seed, "gradcheck.lstm", i as u64);
        entries.push(GradcheckEntry { network: "lstm", scale, max_rel_error: check_lstm(opts, scale, &mut rng) });
    }
    GradcheckReport { entries, tolerance: opts.tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_networks_pass_at_all_scales() {
        let report = run_gradcheck(&GradcheckOptions::default());
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let opts = GradcheckOptions { corrupt_gradient: true, directions: 5, ..Default::default() };
        let report = run_gradcheck(&opts);
        assert!(!report.passed());
        assert!(report.entries.iter().all(|e| e.max_rel_error > opts.tolerance), "{}", report.render());
    }

    #[test]
    fn report_is_reproducible() {
        let opts = GradcheckOptions { directions: 5, ..Default::default() };
        assert_eq!(run_gradcheck(&opts), run_gradcheck(&opts));
    }
}
