//! Seeded path sampling, log-likelihood-ratio trajectories and the Fatou
//! diagnostic.
//!
//! Every path has its own random stream (see [`rng`]), so results depend
//! only on `(inputs, seed, path index)`. The per-path entry points
//! ([`PathSampler::sample`], [`LogLrSampler::walk`], [`FatouSampler::hit`])
//! let callers spread paths over threads without changing any output.

pub mod rng;

use alloc::vec;
use alloc::vec::Vec;

use crate::exact::Distribution;
use crate::model::CanonicalChain;
use crate::{Error, Result};
use rng::CounterRng;

/// Recorded in place of `log z_k` once a path leaves the support of `A`.
pub const LOG_Z_NULL: f64 = f64::MIN;

/// Cumulative distribution of one row, with the last index of positive mass
/// as the fallback when rounding leaves `u` above the final partial sum.
#[derive(Debug, Clone)]
struct Cdf {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl Cdf {
    fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        let last_positive = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        Cdf {
            cumulative,
            last_positive,
        }
    }

    #[inline]
    fn draw(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.last_positive)
    }
}

/// Inverse-CDF sampler for paths `(𝕏_1, …, 𝕏_n)`.
#[derive(Debug, Clone)]
pub struct PathSampler {
    horizon: usize,
    initial: Cdf,
    /// `steps[k-1][s]` samples `𝕏_{k+1}` given `𝕏_k = s`.
    steps: Vec<Vec<Cdf>>,
}

impl PathSampler {
    pub fn new(chain: &CanonicalChain, horizon: u64) -> Self {
        let d = chain.state_count();
        let steps = (1..horizon.max(1))
            .map(|k| {
                let p = chain.transition_at(k);
                (0..d).map(|s| Cdf::new(p.row(s))).collect()
            })
            .collect();
        PathSampler {
            horizon: horizon as usize,
            initial: Cdf::new(chain.lambda1()),
            steps,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Calls `visit(k, state)` along path `index`, `k = 1..=horizon`.
    #[inline]
    fn walk(&self, seed: u64, index: u64, mut visit: impl FnMut(usize, usize, usize)) {
        if self.horizon == 0 {
            return;
        }
        let mut rng = CounterRng::for_path(seed, index);
        let mut state = self.initial.draw(rng.next_f64());
        visit(1, usize::MAX, state);
        for k in 2..=self.horizon {
            let next = self.steps[k - 2][state].draw(rng.next_f64());
            visit(k, state, next);
            state = next;
        }
    }

    /// Path number `index` of the batch seeded with `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.horizon);
        self.walk(seed, index, |_, _, s| path.push(s));
        path
    }
}

/// `count` independent paths of length `n` from the exact law of the chain.
pub fn sample_paths(chain: &CanonicalChain, n: u64, count: u64, seed: u64) -> Result<Vec<Vec<usize>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let sampler = PathSampler::new(chain, n);
    Ok((0..count).map(|i| sampler.sample(seed, i)).collect())
}

/// Fraction of sampled paths in each state at level `n`.
pub fn empirical_marginal(paths: &[Vec<usize>], n: usize, states: usize) -> Distribution {
    let mut counts = vec![0.0; states];
    for path in paths {
        counts[path[n - 1]] += 1.0;
    }
    let total = paths.len() as f64;
    Distribution::new(counts.into_iter().map(|c| c / total).collect())
}

/// Samples under `B` and tracks `log z_k = log (dA_k/dB_k)` along the path.
#[derive(Debug, Clone)]
pub struct LogLrSampler {
    paths: PathSampler,
    initial: Vec<f64>,
    /// `ratios[k-1][s·d + t] = log P_k(s,t) − log Q_k(s,t)`, or `LOG_Z_NULL`.
    ratios: Vec<Vec<f64>>,
    states: usize,
}

fn log_ratio(p: f64, q: f64) -> f64 {
    if p > 0.0 && q > 0.0 {
        libm::log(p) - libm::log(q)
    } else {
        LOG_Z_NULL
    }
}

impl LogLrSampler {
    pub fn new(a: &CanonicalChain, b: &CanonicalChain, horizon: u64) -> Result<Self> {
        a.ensure_compatible(b)?;
        let d = a.state_count();
        let initial = a
            .lambda1()
            .iter()
            .zip(b.lambda1())
            .map(|(&p, &q)| log_ratio(p, q))
            .collect();
        let ratios = (1..horizon.max(1))
            .map(|k| {
                let p = a.transition_at(k);
                let q = b.transition_at(k);
                (0..d * d)
                    .map(|i| log_ratio(p.get(i / d, i % d), q.get(i / d, i % d)))
                    .collect()
            })
            .collect();
        Ok(LogLrSampler {
            paths: PathSampler::new(b, horizon),
            initial,
            ratios,
            states: d,
        })
    }

    pub fn horizon(&self) -> usize {
        self.paths.horizon()
    }

    /// Calls `visit(k, log z_k)` along path `index`.
    pub fn walk(&self, seed: u64, index: u64, mut visit: impl FnMut(usize, f64)) {
        let mut log_z = 0.0;
        let d = self.states;
        self.paths.walk(seed, index, |k, prev, state| {
            let inc = if k == 1 {
                self.initial[state]
            } else {
                self.ratios[k - 2][prev * d + state]
            };
            if log_z != LOG_Z_NULL {
                log_z = if inc == LOG_Z_NULL { LOG_Z_NULL } else { log_z + inc };
            }
            visit(k, log_z);
        });
    }

    pub fn trajectory(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.horizon());
        self.walk(seed, index, |_, x| out.push(x));
        out
    }

    /// `log z_n` of path `index`.
    pub fn endpoint(&self, seed: u64, index: u64) -> f64 {
        let mut last = 0.0;
        self.walk(seed, index, |_, x| last = x);
        last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub seed: u64,
    pub horizon: u64,
    pub count: u64,
    /// `log_z[i][k-1] = log z_k` on path `i`.
    pub log_z: Vec<Vec<f64>>,
}

impl TrajectoryBatch {
    pub fn endpoints(&self) -> Vec<f64> {
        self.log_z
            .iter()
            .map(|t| t.last().copied().unwrap_or(0.0))
            .collect()
    }

    pub fn summary(&self, threshold: f64) -> TrajectorySummary {
        summarize(&self.endpoints(), threshold)
    }
}

/// `count` trajectories of `log z_k`, `k = 1..=n`, sampled under `B`.
pub fn loglr_trajectories(
    a: &CanonicalChain,
    b: &CanonicalChain,
    n: u64,
    count: u64,
    seed: u64,
) -> Result<TrajectoryBatch> {
    let sampler = LogLrSampler::new(a, b, n)?;
    Ok(TrajectoryBatch {
        seed,
        horizon: n,
        count,
        log_z: (0..count).map(|i| sampler.trajectory(seed, i)).collect(),
    })
}

/// Final values `log z_n` only; equal to the last column of
/// [`loglr_trajectories`] with the same arguments.
pub fn loglr_endpoints(a: &CanonicalChain, b: &CanonicalChain, n: u64, count: u64, seed: u64) -> Result<Vec<f64>> {
    let sampler = LogLrSampler::new(a, b, n)?;
    Ok((0..count).map(|i| sampler.endpoint(seed, i)).collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrajectorySummary {
    pub count: u64,
    pub threshold: f64,
    /// Fraction of paths with `log z_n < −threshold`, null paths included.
    pub fraction_below: f64,
    pub null_fraction: f64,
    /// Sample mean of `z_n`; null paths count as `z_n = 0`.
    pub mean_z: f64,
    /// Standard error of `mean_z`.
    pub std_error: f64,
    /// Four standard errors.
    pub confidence_radius: f64,
    /// Mean and median of `log z_n` over non-null paths.
    pub mean_log_z: Option<f64>,
    pub median_log_z: Option<f64>,
}

pub fn summarize(endpoints: &[f64], threshold: f64) -> TrajectorySummary {
    let count = endpoints.len();
    let n = count as f64;
    let below = endpoints.iter().filter(|&&x| x < -threshold).count();
    let mut finite: Vec<f64> = endpoints.iter().copied().filter(|&x| x != LOG_Z_NULL).collect();
    let nulls = count - finite.len();
    let zs: Vec<f64> = endpoints
        .iter()
        .map(|&x| if x == LOG_Z_NULL { 0.0 } else { libm::exp(x) })
        .collect();
    let mean_z = zs.iter().sum::<f64>() / n;
    let var = if count > 1 {
        zs.iter().map(|z| (z - mean_z) * (z - mean_z)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std_error = libm::sqrt(var / n);
    let mean_log_z = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
    finite.sort_by(f64::total_cmp);
    let median_log_z = (!finite.is_empty()).then(|| {
        let m = finite.len();
        if m % 2 == 1 {
            finite[m / 2]
        } else {
            0.5 * (finite[m / 2 - 1] + finite[m / 2])
        }
    });
    TrajectorySummary {
        count: count as u64,
        threshold,
        fraction_below: below as f64 / n,
        null_fraction: nulls as f64 / n,
        mean_z,
        std_error,
        confidence_radius: 4.0 * std_error,
        mean_log_z,
        median_log_z,
    }
}

/// Weight sequences `a_n` for the Fatou diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weights {
    /// `a_n = value`.
    Constant(f64),
    /// `a_n = scale·n^{-alpha}`.
    Power { scale: f64, alpha: f64 },
}

impl Weights {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            Weights::Constant(v) => v,
            Weights::Power { scale, alpha } => scale * libm::pow(n as f64, -alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FatouEstimate {
    /// Estimate of `P(Σ_{n≤N} a_n·1{𝕏_n = s} ≥ C)`.
    pub probability: f64,
    /// Four binomial standard errors.
    pub radius: f64,
    pub count: u64,
    pub horizon: u64,
    pub threshold: f64,
}

/// Per-path indicator `Σ_{n≤N} a_n·1{𝕏_n = s} ≥ C`.
#[derive(Debug, Clone)]
pub struct FatouSampler {
    paths: PathSampler,
    weights: Vec<f64>,
    state: usize,
    threshold: f64,
}

impl FatouSampler {
    pub fn new(chain: &CanonicalChain, weights: Weights, state: usize, horizon: u64, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidArgument("threshold C must be positive".into()));
        }
        if state >= chain.state_count() {
            return Err(Error::InvalidArgument("state outside the working state space".into()));
        }
        let weights: Vec<f64> = (1..=horizon).map(|n| weights.at(n)).collect();
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be non-negative".into()));
        }
        Ok(FatouSampler {
            paths: PathSampler::new(chain, horizon),
            weights,
            state,
            threshold,
        })
    }

    pub fn hit(&self, seed: u64, index: u64) -> bool {
        let mut total = 0.0;
        self.paths.walk(seed, index, |k, _, x| {
            if x == self.state {
                total += self.weights[k - 1];
            }
        });
        total >= self.threshold
    }
}

pub fn fatou_estimate(hits: u64, count: u64, horizon: u64, threshold: f64) -> FatouEstimate {
    let p = hits as f64 / count as f64;
    FatouEstimate {
        probability: p,
        radius: 4.0 * libm::sqrt(p * (1.0 - p) / count as f64),
        count,
        horizon,
        threshold,
    }
}

/// Monte Carlo estimate of `P(Σ_{n≤N} a_n·1{𝕏_n = s} ≥ C)`.
pub fn fatou_diagnostic(
    chain: &CanonicalChain,
    weights: Weights,
    state: usize,
    horizon: u64,
    threshold: f64,
    count: u64,
    seed: u64,
) -> Result<FatouEstimate> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let sampler = FatouSampler::new(chain, weights, state, horizon, threshold)?;
    let hits = (0..count).filter(|&i| sampler.hit(seed, i)).count() as u64;
    Ok(fatou_estimate(hits, count, horizon, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::marginal;
    use crate::matrix::StochasticMatrix;
    use crate::model::{Alphabet, Sidedness, TransitionSequence};

    fn chain(lambda1: &[f64], p: StochasticMatrix) -> CanonicalChain {
        CanonicalChain::from_first_law(
            Alphabet::numbered(lambda1.len()),
            Sidedness::OneSided,
            lambda1,
            TransitionSequence::constant(p),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_chain_gives_identical_paths() {
        let c = chain(&[1.0, 0.0, 0.0], StochasticMatrix::permutation(&[1, 2, 0]));
        let paths = sample_paths(&c, 7, 20, 9).unwrap();
        for p in &paths {
            assert_eq!(p, &[0, 1, 2, 0, 1, 2, 0]);
        }
    }

    #[test]
    fn same_seed_same_paths() {
        let c = chain(&[0.3, 0.7], StochasticMatrix::from_rows("P", &[vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap());
        assert_eq!(sample_paths(&c, 30, 50, 1).unwrap(), sample_paths(&c, 30, 50, 1).unwrap());
        assert_ne!(sample_paths(&c, 30, 50, 1).unwrap(), sample_paths(&c, 30, 50, 2).unwrap());
        assert!(sample_paths(&c, 30, 0, 1).is_err());
    }

    #[test]
    fn empirical_marginal_within_four_sigma() {
        let c = chain(&[1.0, 0.0], StochasticMatrix::from_rows("P", &[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap());
        let count = 100_000;
        let paths = sample_paths(&c, 5, count, 2024).unwrap();
        let emp = empirical_marginal(&paths, 5, 2);
        let exact = marginal(&c, 5);
        let sigma = libm::sqrt(exact[0] * (1.0 - exact[0]) / count as f64);
        assert!((emp[0] - exact[0]).abs() < 4.0 * sigma, "{} vs {}", emp[0], exact[0]);
    }

    #[test]
    fn self_ratio_is_zero() {
        let c = chain(&[0.3, 0.7], StochasticMatrix::from_rows("P", &[vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap());
        let batch = loglr_trajectories(&c, &c, 25, 10, 5).unwrap();
        assert!(batch.log_z.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn endpoints_match_trajectories_and_paths() {
        let a = chain(&[0.3, 0.7], StochasticMatrix::from_rows("P", &[vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap());
        let b = chain(&[0.5, 0.5], StochasticMatrix::uniform(2));
        let batch = loglr_trajectories(&a, &b, 40, 25, 77).unwrap();
        assert_eq!(batch.endpoints(), loglr_endpoints(&a, &b, 40, 25, 77).unwrap());
        // The trajectory follows the path sampled under B with the same stream.
        let paths = sample_paths(&b, 40, 25, 77).unwrap();
        let path = &paths[3];
        let mut expected = libm::log(a.lambda1()[path[0]]) - libm::log(0.5);
        for k in 1..40 {
            expected += libm::log(a.transition_at(k as u64).get(path[k - 1], path[k])) - libm::log(0.5);
        }
        assert!((batch.log_z[3][39] - expected).abs() < 1e-12);
    }

    #[test]
    fn null_transitions_use_sentinel() {
        let a = chain(&[0.5, 0.5], StochasticMatrix::identity(2));
        let b = chain(&[0.5, 0.5], StochasticMatrix::uniform(2));
        let batch = loglr_trajectories(&a, &b, 30, 200, 3).unwrap();
        let s = batch.summary(10.0);
        assert!(s.null_fraction > 0.99);
        assert!(s.fraction_below >= s.null_fraction);
    }

    #[test]
    fn fatou_trivial_cases() {
        let c = chain(&[0.5, 0.5], StochasticMatrix::uniform(2));
        let zero = fatou_diagnostic(&c, Weights::Constant(0.0), 0, 100, 1.0, 500, 1).unwrap();
        assert_eq!(zero.probability, 0.0);
        let never = chain(&[1.0, 0.0], StochasticMatrix::identity(2));
        let est = fatou_diagnostic(&never, Weights::Constant(1.0), 1, 100, 1.0, 500, 1).unwrap();
        assert_eq!(est.probability, 0.0);
        assert!(fatou_diagnostic(&c, Weights::Constant(1.0), 0, 100, 0.0, 10, 1).is_err());
    }
}
