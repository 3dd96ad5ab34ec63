//! Qualitative reproduction checks over sweep results.

use std::fmt;

use super::{BackupKind, Fig1Result, Fig2Result};
use crate::rl::Architecture;

/// Uncertainty at which the recurrent Mellowmax agent must learn the
/// most-likely-channel policy.
pub const FIG1_H_RECURRENT: f64 = 0.85;
/// Uncertainty at which Mellowmax and double-Q MLP agents are compared.
pub const FIG1_H_MLP: f64 = 0.9;

/// Allowed distance between measured and analytic crossing uncertainty.
pub const CROSSING_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Recurrent Mellowmax ends with at most one policy error at every seed
/// (H̃ = `h_recurrent`); Mellowmax MLP ends with no more errors than
/// double-Q MLP in a majority of seeds (H̃ = `h_mlp`). Checks whose cells
/// were not run are omitted.
pub fn fig1_checks(result: &Fig1Result, h_recurrent: f64, h_mlp: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    let rec = result.select(Architecture::Recurrent, BackupKind::Mellowmax, h_recurrent);
    if !rec.is_empty() {
        let finals: Vec<Option<usize>> = rec.iter().map(|c| c.final_errors()).collect();
        let ok = finals.iter().all(|e| matches!(e, Some(k) if *k <= 1));
        checks.push(Check::new(
            format!("recurrent mellowmax final policy errors <= 1 at H={h_recurrent}"),
            ok,
            format!("final errors per seed {finals:?}"),
        ));
    }
    let dq = result.select(Architecture::Mlp, BackupKind::DoubleQ, h_mlp);
    let mm = result.select(Architecture::Mlp, BackupKind::Mellowmax, h_mlp);
    if !dq.is_empty() && !mm.is_empty() {
        let mut wins = 0;
        let mut pairs = Vec::new();
        for m in &mm {
            let Some(d) = dq.iter().find(|d| d.seed == m.seed) else { continue };
            let win = match (m.final_errors(), d.final_errors()) {
                (Some(a), Some(b)) => a <= b,
                (Some(_), None) => true,
                _ => false,
            };
            wins += usize::from(win);
            pairs.push((m.seed, m.final_errors(), d.final_errors()));
        }
        checks.push(Check::new(
            format!("mlp mellowmax errors <= mlp double-q errors at H={h_mlp} in a majority of seeds"),
            !pairs.is_empty() && 2 * wins > pairs.len(),
            format!("{wins}/{} seeds; (seed, mellowmax, double-q) = {pairs:?}", pairs.len()),
        ));
    }
    checks
}

/// Downward trend of KARAA and LARA as uncertainty falls (within three
/// standard errors of the seed means), LARA below KARAA everywhere, and the
/// crossing against random hopping near its analytic location.
pub fn fig2_checks(result: &Fig2Result) -> Vec<Check> {
    let points = result.sweep.points();
    let mut ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    ns.dedup();
    let mut checks = Vec::new();
    for &n in &ns {
        for strategy in ["karaa", "lara"] {
            let curve: Vec<_> = points.iter().filter(|p| p.n == n && p.strategy == strategy).collect();
            if curve.len() < 2 {
                continue;
            }
            let mut worst = f64::NEG_INFINITY;
            let mut violations = Vec::new();
            for w in curve.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let tol = 3.0 * (lo.std_error.powi(2) + hi.std_error.powi(2)).sqrt();
                let excess = lo.mean_mc - hi.mean_mc - tol;
                worst = worst.max(excess);
                if excess > 0.0 {
                    violations.push((lo.h_tilde, hi.h_tilde));
                }
            }
            checks.push(Check::new(
                format!("{strategy} n={n} nonincreasing as uncertainty decreases"),
                violations.is_empty(),
                format!("worst excess over tolerance {worst:.5}; violations {violations:?}"),
            ));
        }
        let karaa: Vec<_> = points.iter().filter(|p| p.n == n && p.strategy == "karaa").collect();
        let lara: Vec<_> = points.iter().filter(|p| p.n == n && p.strategy == "lara").collect();
        if !karaa.is_empty() && karaa.len() == lara.len() {
            let bad: Vec<f64> =
                karaa.iter().zip(&lara).filter(|(k, l)| l.mean_mc >= k.mean_mc).map(|(k, _)| k.h_tilde).collect();
            let gap = karaa.iter().zip(&lara).map(|(k, l)| k.mean_mc - l.mean_mc).fold(f64::INFINITY, f64::min);
            checks.push(Check::new(
                format!("lara below karaa at every point, n={n}"),
                bad.is_empty(),
                format!("smallest gap {gap:.5}; failing points {bad:?}"),
            ));
        }
    }
    if let Some(c) = &result.crossing {
        let (passed, detail) = match c.measured {
            Some(m) => (
                (m - c.analytic).abs() <= CROSSING_TOL,
                format!("measured {m:.4}, analytic {:.4}, reference rate {:.5}", c.analytic, c.reference),
            ),
            None => (false, format!("no crossing found; analytic {:.4}", c.analytic)),
        };
        checks.push(Check::new("karaa n=5 crosses random n=9 near the analytic point", passed, detail));
    }
    checks
}
