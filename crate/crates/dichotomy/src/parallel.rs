//! Thread-parallel versions of the Monte Carlo routines.
//!
//! Each path draws from its own counter-based stream, so the output is
//! bit-identical to the sequential functions in `dichotomy_core::montecarlo`
//! for any number of threads.

use dichotomy_core::montecarlo::{
    fatou_estimate, FatouEstimate, FatouSampler, LogLrSampler, PathSampler, TrajectoryBatch, Weights,
};
use dichotomy_core::{CanonicalChain, Error, Result};
use rayon::prelude::*;

fn check_count(count: u64) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    Ok(())
}

pub fn sample_paths(chain: &CanonicalChain, n: u64, count: u64, seed: u64) -> Result<Vec<Vec<usize>>> {
    check_count(count)?;
    let sampler = PathSampler::new(chain, n);
    Ok((0..count).into_par_iter().map(|i| sampler.sample(seed, i)).collect())
}

pub fn loglr_trajectories(
    a: &CanonicalChain,
    b: &CanonicalChain,
    n: u64,
    count: u64,
    seed: u64,
) -> Result<TrajectoryBatch> {
    let sampler = LogLrSampler::new(a, b, n)?;
    let log_z = (0..count).into_par_iter().map(|i| sampler.trajectory(seed, i)).collect();
    Ok(TrajectoryBatch {
        seed,
        horizon: n,
        count,
        log_z,
    })
}

pub fn loglr_endpoints(a: &CanonicalChain, b: &CanonicalChain, n: u64, count: u64, seed: u64) -> Result<Vec<f64>> {
    let sampler = LogLrSampler::new(a, b, n)?;
    Ok((0..count).into_par_iter().map(|i| sampler.endpoint(seed, i)).collect())
}

pub fn fatou_diagnostic(
    chain: &CanonicalChain,
    weights: Weights,
    state: usize,
    horizon: u64,
    threshold: f64,
    count: u64,
    seed: u64,
) -> Result<FatouEstimate> {
    check_count(count)?;
    let sampler = FatouSampler::new(chain, weights, state, horizon, threshold)?;
    let hits = (0..count).into_par_iter().filter(|&i| sampler.hit(seed, i)).count() as u64;
    Ok(fatou_estimate(hits, count, horizon, threshold))
}
