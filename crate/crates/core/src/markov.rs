//! Jammer dynamics: circulant transition matrices, entropy characterization,
//! calibration of the decay parameter, trajectory sampling, and the exact
//! dynamic-programming policy oracle.
//!
//! States and channels are the same thing here: state `i` is "the jammer
//! occupies channel `i`", with zero-based indices.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Row-sum tolerance for a matrix to count as stochastic.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Default floor `ε` added to every circulant entry.
pub const DEFAULT_EPSILON: f64 = 1e-3;

const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;
const BISECTION_MAX_ITERS: usize = 200;
const VALUE_ITERATION_TOL: f64 = 1e-13;
const ARGMIN_TIE_TOL: f64 = 1e-12;

/// Parameters of the circulant jammer family.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    /// Channel count; must be odd and at least 3.
    pub n: usize,
    /// Decay `ϑ ∈ [0, 1)` of transition mass with circular distance.
    pub theta: f64,
    /// Positive floor keeping every transition reachable.
    pub epsilon: f64,
    /// Row permutation: row `i` of the result is row `permutation[i]` of the
    /// plain circulant.
    pub permutation: Option<Vec<usize>>,
}

impl ChainSpec {
    pub fn new(n: usize, theta: f64, epsilon: f64) -> Self {
        Self { n, theta, epsilon, permutation: None }
    }

    pub fn with_permutation(mut self, permutation: Vec<usize>) -> Self {
        self.permutation = Some(permutation);
        self
    }

    /// `ρ = (n − 1) / 2`, the largest circular distance.
    pub fn rho(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Normalizer `κ` solving `κ(1 + 2 Σ_{d=1}^{ρ} ϑ^d) = 1 − nε`.
    pub fn kappa(&self) -> f64 {
        let decay_sum: f64 = (1..=self.rho()).map(|d| self.theta.powi(d as i32)).sum();
        (1.0 - self.n as f64 * self.epsilon) / (1.0 + 2.0 * decay_sum)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!("n must be odd and >= 3, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::InvalidSpec(format!("theta must lie in [0, 1), got {}", self.theta)));
        }
        if !(self.epsilon > 0.0) || self.n as f64 * self.epsilon >= 1.0 {
            return Err(Error::InvalidSpec(format!(
                "epsilon must satisfy 0 < n*epsilon < 1, got n={} epsilon={}",
                self.n, self.epsilon
            )));
        }
        if let Some(perm) = &self.permutation {
            if !is_bijection(perm, self.n) {
                return Err(Error::InvalidSpec(format!(
                    "permutation {perm:?} is not a bijection on 0..{}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

fn is_bijection(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Strictly positive row-stochastic matrix over `n` labelled states.
///
/// State `i` carries label "channel `i`", so labels are distinct by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    p: Vec<f64>,
}

impl TransitionMatrix {
    /// Validates and wraps a row-major `n × n` matrix.
    pub fn from_row_major(n: usize, p: Vec<f64>) -> Result<Self> {
        if n == 0 || p.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {n}x{n} = {} entries, got {}",
                n * n,
                p.len()
            )));
        }
        for (i, row) in p.chunks_exact(n).enumerate() {
            if let Some(j) = row.iter().position(|&x| !(x > 0.0 && x <= 1.0)) {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i},{j}) = {} is not in (0, 1]",
                    row[j]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMatrix(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { n, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("matrix is not square".into()));
        }
        Self::from_row_major(n, rows.concat())
    }

    /// Every transition equally likely.
    pub fn uniform(n: usize) -> Self {
        Self { n, p: vec![1.0 / n as f64; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.p[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.p[from * self.n..(from + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.p.chunks_exact(self.n)
    }

    /// Channel label of each state.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    /// New matrix whose row `i` is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if !is_bijection(perm, self.n) {
            return Err(Error::InvalidSpec(format!("permutation {perm:?} is not a bijection")));
        }
        let p = perm.iter().flat_map(|&src| self.row(src).iter().copied()).collect();
        Ok(Self { n: self.n, p })
    }

    /// Stationary distribution `ψ = ψP` by power iteration from the uniform
    /// vector, stopping when the L1 change drops below 1e-12. Sums run in a
    /// canonical order, so relabeling states permutes `ψ` exactly.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.n;
        let mut psi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for _ in 0..STATIONARY_MAX_ITERS {
            for (j, x) in next.iter_mut().enumerate() {
                let mut terms: Vec<f64> = (0..n).map(|i| psi[i] * self.p[i * n + j]).collect();
                *x = canonical_sum(&mut terms);
            }
            let total = canonical_sum(&mut next.clone());
            next.iter_mut().for_each(|x| *x /= total);
            let change: f64 = psi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut psi, &mut next);
            if change < STATIONARY_TOL {
                break;
            }
        }
        psi
    }

    /// Spectral radius of the 0/1 connection matrix `1{p_ij > 0}`.
    pub fn connection_spectral_radius(&self) -> f64 {
        let n = self.n;
        let mut v = vec![1.0; n];
        let mut radius = 0.0;
        for _ in 0..10_000 {
            let mut w = vec![0.0; n];
            for (i, row) in self.rows().enumerate() {
                w[i] = row.iter().zip(&v).filter(|(p, _)| **p > 0.0).map(|(_, x)| x).sum();
            }
            let norm = w.iter().cloned().fold(0.0, f64::max);
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let change: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            v = next;
            let converged = (norm - radius).abs() <= 1e-15 * norm && change < 1e-15;
            radius = norm;
            if converged {
                break;
            }
        }
        radius
    }
}

/// Circulant matrix with exponential decay: row `i` has `κϑ^d + ε` at
/// circular distance `d` from `i`, optionally with permuted rows.
pub fn build_circulant(spec: &ChainSpec) -> Result<TransitionMatrix> {
    spec.validate()?;
    let n = spec.n;
    let kappa = spec.kappa();
    let by_distance: Vec<f64> =
        (0..=spec.rho()).map(|d| kappa * spec.theta.powi(d as i32) + spec.epsilon).collect();
    let mut p = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let diff = i.abs_diff(j);
            p.push(by_distance[diff.min(n - diff)]);
        }
    }
    let base = TransitionMatrix { n, p };
    match &spec.permutation {
        Some(perm) => base.permute_rows(perm),
        None => Ok(base),
    }
}

/// Entropy characterization of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyReport {
    /// `H_i` in bits.
    pub state_entropies: Vec<f64>,
    /// `ψ_i`.
    pub stationary: Vec<f64>,
    /// `H{X} = Σ ψ_i H_i` in bits.
    pub chain_entropy: f64,
    pub lambda_max: f64,
    /// `H{X} / log₂ λ_max`.
    pub normalized: f64,
}

/// Compensated sum of `terms` taken in ascending order; the result depends
/// only on the multiset of values.
fn canonical_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &t in terms.iter() {
        let next = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - next) + t } else { (t - next) + sum };
        sum = next;
    }
    sum + comp
}

fn row_entropy(row: &[f64]) -> f64 {
    -row.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

pub fn uncertainty(chain: &TransitionMatrix) -> UncertaintyReport {
    let state_entropies: Vec<f64> = chain.rows().map(row_entropy).collect();
    let stationary = chain.stationary();
    let mut terms: Vec<f64> = stationary.iter().zip(&state_entropies).map(|(psi, h)| psi * h).collect();
    let chain_entropy = canonical_sum(&mut terms);
    let lambda_max = chain.connection_spectral_radius();
    UncertaintyReport {
        state_entropies,
        stationary,
        chain_entropy,
        lambda_max,
        normalized: chain_entropy / lambda_max.log2(),
    }
}

/// Normalized uncertainty of the unpermuted circulant (permutation does not
/// change it).
pub fn circulant_normalized_uncertainty(n: usize, theta: f64, epsilon: f64) -> Result<f64> {
    Ok(uncertainty(&build_circulant(&ChainSpec::new(n, theta, epsilon))?).normalized)
}

/// Achievable open interval of normalized uncertainty for the circulant
/// family: from `ϑ = 0` up to the uniform limit `ϑ → 1`.
pub fn achievable_range(n: usize, epsilon: f64) -> Result<(f64, f64)> {
    Ok((circulant_normalized_uncertainty(n, 0.0, epsilon)?, 1.0))
}

/// Finds `ϑ` whose circulant reaches normalized uncertainty `target_h`
/// within `tol`, by bisection on `[0, 1)`.
pub fn calibrate_theta(n: usize, epsilon: f64, target_h: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Contract(format!("tolerance must be positive, got {tol}")));
    }
    let (lo_h, hi_h) = achievable_range(n, epsilon)?;
    if !(target_h > lo_h && target_h < hi_h) {
        return Err(Error::OutOfRange { target: target_h, lo: lo_h, hi: hi_h });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let gap = circulant_normalized_uncertainty(n, mid, epsilon)? - target_h;
        if gap.abs() <= tol {
            return Ok(mid);
        }
        if gap < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Only reachable when `tol` is below the float resolution of H̃ near the target.
    Err(Error::OutOfRange { target: target_h, lo: lo_h, hi: hi_h })
}

/// Draws the next jammer state from row `state`.
pub fn sample_next<R: Rng + ?Sized>(chain: &TransitionMatrix, state: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let row = chain.row(state);
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.len() - 1
}

/// Exact optimal values and the policies derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOracle {
    /// Row-wise argmax of `q_star` (lowest index on ties).
    pub pi_star: Vec<usize>,
    /// Row-wise argmin set of `q_star`, ascending.
    pub pi_lara_set: Vec<Vec<usize>>,
    /// Row-major `n × n` optimal action values.
    pub q_star: Vec<f64>,
    pub gamma: f64,
    n: usize,
}

impl PolicyOracle {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self, state: usize, action: usize) -> f64 {
        self.q_star[state * self.n + action]
    }

    /// Canonical least-reward policy: lowest channel in each argmin set.
    pub fn pi_lara(&self) -> Vec<usize> {
        self.pi_lara_set.iter().map(|set| set[0]).collect()
    }
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the first minimum.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn argmin_set(values: &[f64], tol: f64) -> Vec<usize> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    values.iter().enumerate().filter(|(_, &v)| v - min <= tol).map(|(i, _)| i).collect()
}

/// Value iteration on the prediction MDP with expected reward
/// `r(s, a) = p_{s,a}` and action-independent transitions `P`.
pub fn exact_oracle(chain: &TransitionMatrix, gamma: f64) -> Result<PolicyOracle> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Contract(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let n = chain.n();
    let mut q = vec![0.0; n * n];
    let mut v = vec![0.0; n];
    for _ in 0..1_000_000 {
        for (s, row) in q.chunks_exact(n).enumerate() {
            v[s] = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let cont: f64 = chain.row(s).iter().zip(&v).map(|(p, v)| p * v).sum();
            for a in 0..n {
                let updated = chain.get(s, a) + gamma * cont;
                delta = delta.max((updated - q[s * n + a]).abs());
                q[s * n + a] = updated;
            }
        }
        if delta <= VALUE_ITERATION_TOL {
            break;
        }
    }
    let pi_star = q.chunks_exact(n).map(argmax).collect();
    let pi_lara_set = q.chunks_exact(n).map(|row| argmin_set(row, ARGMIN_TIE_TOL)).collect();
    Ok(PolicyOracle { pi_star, pi_lara_set, q_star: q, gamma, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn kappa_and_row_for_reference_chain() {
        let spec = ChainSpec::new(5, 0.5, 0.001);
        assert!((spec.kappa() - 0.398).abs() < 1e-15);
        let p = build_circulant(&spec).unwrap();
        let expected = [0.1005, 0.2, 0.399, 0.2, 0.1005];
        for (got, want) in p.row(2).iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        assert!((p.row(2).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn near_zero_theta_is_almost_deterministic() {
        let p = build_circulant(&ChainSpec::new(5, 1e-12, 0.001)).unwrap();
        for s in 0..5 {
            assert!((p.get(s, s) - (1.0 - 4.0 * 0.001)).abs() < 1e-9);
            for a in (0..5).filter(|&a| a != s) {
                assert!((p.get(s, a) - 0.001).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(build_circulant(&ChainSpec::new(4, 0.5, 0.001)), Err(Error::InvalidSpec(_))));
        assert!(matches!(build_circulant(&ChainSpec::new(5, 0.5, 0.2)), Err(Error::InvalidSpec(_))));
        assert!(matches!(build_circulant(&ChainSpec::new(5, 1.0, 0.001)), Err(Error::InvalidSpec(_))));
        let dup = ChainSpec::new(3, 0.5, 0.001).with_permutation(vec![0, 0, 1]);
        assert!(matches!(build_circulant(&dup), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn rejects_non_stochastic_matrix() {
        let bad = TransitionMatrix::from_rows(&[vec![0.5, 0.6], vec![0.5, 0.5]]);
        assert!(matches!(bad, Err(Error::InvalidMatrix(_))));
        let zero = TransitionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert!(matches!(zero, Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn circulant_rows_share_entropy() {
        let p = build_circulant(&ChainSpec::new(9, 0.7, 0.001)).unwrap();
        let report = uncertainty(&p);
        for h in &report.state_entropies {
            assert!((h - report.state_entropies[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_chain_is_maximally_uncertain() {
        for n in [3, 5, 9] {
            let report = uncertainty(&TransitionMatrix::uniform(n));
            assert!((report.normalized - 1.0).abs() < 1e-12);
            assert_eq!(report.lambda_max, n as f64);
        }
    }

    #[test]
    fn reference_chain_entropy() {
        // H = -Σ p log2 p over the row [0.1005, 0.2, 0.399, 0.2, 0.1005]
        let row = [0.1005_f64, 0.2, 0.399, 0.2, 0.1005];
        let h_direct: f64 = -row.iter().map(|p| p * p.ln() / std::f64::consts::LN_2).sum::<f64>();
        let report = uncertainty(&build_circulant(&ChainSpec::new(5, 0.5, 0.001)).unwrap());
        assert!((report.chain_entropy - h_direct).abs() < 1e-12);
        assert!((report.chain_entropy - 2.1239).abs() < 1e-3);
        assert!((report.normalized - 0.9147).abs() < 1e-3);
    }

    #[test]
    fn calibration_hits_target() {
        let theta = calibrate_theta(9, 0.001, 0.85, 1e-6).unwrap();
        let h = circulant_normalized_uncertainty(9, theta, 0.001).unwrap();
        assert!((h - 0.85).abs() <= 1e-6);

        let theta = calibrate_theta(5, 0.001, 1.0 - 1e-6, 1e-7).unwrap();
        assert!(theta > 0.99, "theta = {theta}");
    }

    #[test]
    fn calibration_out_of_range() {
        let (floor, _) = achievable_range(5, 0.001).unwrap();
        match calibrate_theta(5, 0.001, floor * 0.5, 1e-6) {
            Err(Error::OutOfRange { lo, hi, .. }) => {
                assert_eq!(lo, floor);
                assert_eq!(hi, 1.0);
            }
            other => panic!("expected out-of-range, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = build_circulant(&ChainSpec::new(5, 0.5, 0.001)).unwrap();
        let walk = |seed| {
            let mut r = rng::stream(seed, rng::CHAIN);
            let mut s = 0;
            (0..100).map(|_| { s = sample_next(&p, s, &mut r); s }).collect::<Vec<_>>()
        };
        assert_eq!(walk(3), walk(3));
        assert_ne!(walk(3), walk(4));
    }

    #[test]
    fn sampling_matches_row_frequencies() {
        let p = build_circulant(&ChainSpec::new(5, 0.5, 0.001)).unwrap();
        let mut r = rng::stream(11, rng::CHAIN);
        let draws = 1_000_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            counts[sample_next(&p, 2, &mut r)] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let pj = p.get(2, j);
            let sigma = (draws as f64 * pj * (1.0 - pj)).sqrt();
            assert!((c as f64 - draws as f64 * pj).abs() < 4.0 * sigma, "channel {j}: {c}");
        }
    }

    #[test]
    fn uniform_oracle_closed_form() {
        let oracle = exact_oracle(&TransitionMatrix::uniform(5), 0.95).unwrap();
        for q in &oracle.q_star {
            assert!((q - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn circulant_oracle_policies() {
        let p = build_circulant(&ChainSpec::new(5, 0.5, 0.001)).unwrap();
        let oracle = exact_oracle(&p, 0.95).unwrap();
        assert_eq!(oracle.pi_star, vec![0, 1, 2, 3, 4]);
        for (s, set) in oracle.pi_lara_set.iter().enumerate() {
            let mut want = vec![(s + 2) % 5, (s + 3) % 5];
            want.sort_unstable();
            assert_eq!(set, &want);
        }
    }

    #[test]
    fn oracle_rejects_bad_gamma() {
        assert!(exact_oracle(&TransitionMatrix::uniform(3), 1.0).is_err());
        assert!(exact_oracle(&TransitionMatrix::uniform(3), 0.0).is_err());
    }
}
