//! Exact dynamic-programming quantities on canonical chains.
//!
//! All routines run in `O(n·|𝕊|²)` (window products in `O(n·|𝕊|³)`) and
//! never enumerate paths; the [`oracle`](crate::oracle) module provides the
//! brute-force counterpart.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::matrix::StochasticMatrix;
use crate::model::{Alphabet, CanonicalChain, Sidedness};
use crate::{Error, Result};

/// Probability vector over the working state space.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(p: Vec<f64>) -> Self {
        Distribution(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Finite set of constraints `X_i = symbol`.
///
/// Indices are coordinates of the underlying sequence: non-negative for
/// one-sided chains, any integer for two-sided fields. A constraint at
/// index `i` restricts level `|i|` of the working process (the right
/// coordinate for `i > 0`, the left coordinate for `i < 0`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CylinderEvent {
    constraints: BTreeMap<i64, usize>,
}

impl CylinderEvent {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `X_index = symbol`; an index may be constrained only once.
    pub fn insert(&mut self, index: i64, symbol: usize) -> Result<()> {
        if self.constraints.insert(index, symbol).is_some() {
            return Err(Error::InvalidEvent(format!("index {index} constrained twice")));
        }
        Ok(())
    }

    pub fn with(mut self, index: i64, symbol: usize) -> Result<Self> {
        self.insert(index, symbol)?;
        Ok(self)
    }

    pub fn from_named(alphabet: &Alphabet, constraints: &[(i64, &str)]) -> Result<Self> {
        let mut event = CylinderEvent::new();
        for &(i, sym) in constraints {
            event.insert(i, alphabet.index_of(sym)?)?;
        }
        Ok(event)
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        self.constraints.iter().map(|(&i, &s)| (i, s))
    }

    /// Largest level touched, `max |i|` (0 for the empty event).
    pub fn span(&self) -> usize {
        self.constraints
            .keys()
            .map(|i| i.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Per-level admissibility masks derived from a cylinder event.
struct LevelMasks {
    origin: Option<Vec<bool>>,
    levels: BTreeMap<usize, Vec<bool>>,
}

impl LevelMasks {
    fn build(chain: &CanonicalChain, event: &CylinderEvent) -> Result<Self> {
        let k = chain.alphabet().len();
        let d = chain.state_count();
        let mut origin = None;
        let mut levels: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        for (i, sym) in event.iter() {
            if sym >= k {
                return Err(Error::InvalidEvent(format!(
                    "symbol index {sym} outside alphabet of size {k}"
                )));
            }
            if i < 0 && chain.sidedness() == Sidedness::OneSided {
                return Err(Error::InvalidEvent(format!(
                    "negative index {i} on a one-sided chain"
                )));
            }
            if i == 0 {
                origin = Some((0..k).map(|x| x == sym).collect());
                continue;
            }
            let mask = levels
                .entry(i.unsigned_abs() as usize)
                .or_insert_with(|| vec![true; d]);
            for (u, m) in mask.iter_mut().enumerate() {
                let (left, right) = chain.coordinates(u);
                let coordinate = if i > 0 { right } else { left.unwrap_or(right) };
                *m &= coordinate == sym;
            }
        }
        Ok(LevelMasks { origin, levels })
    }

    fn last_level(&self) -> usize {
        self.levels.keys().next_back().copied().unwrap_or(1).max(1)
    }

    fn apply(&self, level: usize, v: &mut [f64]) {
        if let Some(mask) = self.levels.get(&level) {
            for (x, &keep) in v.iter_mut().zip(mask) {
                if !keep {
                    *x = 0.0;
                }
            }
        }
    }
}

/// Forward–backward tables for a chain conditioned on a cylinder event.
struct Conditioned<'a> {
    chain: &'a CanonicalChain,
    masks: LevelMasks,
    mass: f64,
}

impl<'a> Conditioned<'a> {
    fn new(chain: &'a CanonicalChain, event: &CylinderEvent) -> Result<Self> {
        let masks = LevelMasks::build(chain, event)?;
        let mut c = Conditioned {
            chain,
            masks,
            mass: 0.0,
        };
        let last = c.masks.last_level();
        c.mass = c.forward(last).iter().sum();
        if !(c.mass > 0.0) {
            return Err(Error::NullEvent);
        }
        Ok(c)
    }

    /// `α_n(u) = ν(E restricted to levels ≤ n, 𝕏_n = u)`.
    fn forward(&self, n: usize) -> Vec<f64> {
        let mut alpha = match &self.masks.origin {
            Some(mask) => {
                let start: Vec<f64> = self
                    .chain
                    .pi0()
                    .iter()
                    .zip(mask)
                    .map(|(&p, &keep)| if keep { p } else { 0.0 })
                    .collect();
                self.chain.step0().left_mul(&start)
            }
            None => self.chain.lambda1().to_vec(),
        };
        self.masks.apply(1, &mut alpha);
        for k in 1..n {
            alpha = self.chain.transition_at(k as u64).as_matrix().left_mul(&alpha);
            self.masks.apply(k + 1, &mut alpha);
        }
        alpha
    }

    /// `β_n(u) = ν(E restricted to levels > n | 𝕏_n = u)`.
    fn backward(&self, n: usize) -> Vec<f64> {
        let d = self.chain.state_count();
        let last = self.masks.last_level();
        let mut beta = vec![1.0; d];
        let mut level = last;
        while level > n {
            self.masks.apply(level, &mut beta);
            let p = self.chain.transition_at((level - 1) as u64);
            beta = (0..d)
                .map(|u| p.row(u).iter().zip(&beta).map(|(a, b)| a * b).sum())
                .collect();
            level -= 1;
        }
        beta
    }

    fn marginal(&self, n: usize) -> Distribution {
        let alpha = self.forward(n);
        let beta = self.backward(n);
        Distribution(
            alpha
                .iter()
                .zip(&beta)
                .map(|(a, b)| a * b / self.mass)
                .collect(),
        )
    }

    fn pair(&self, n: usize, m: usize, s: usize, t: usize) -> f64 {
        let alpha = self.forward(n);
        if alpha[s] == 0.0 {
            return 0.0;
        }
        let mut g = vec![0.0; self.chain.state_count()];
        g[s] = 1.0;
        for k in n..m {
            g = self.chain.transition_at(k as u64).as_matrix().left_mul(&g);
            self.masks.apply(k + 1, &mut g);
        }
        let beta = self.backward(m);
        alpha[s] * g[t] * beta[t] / self.mass
    }
}

fn check_level(n: u64) {
    assert!(n >= 1, "levels start at 1");
}

/// Law of `𝕏_n`: `lambda1` pushed through `P_1, …, P_{n-1}`.
pub fn marginal(chain: &CanonicalChain, n: u64) -> Distribution {
    check_level(n);
    marginals(chain).nth((n - 1) as usize).expect("marginal iterator is infinite")
}

/// The laws of `𝕏_1, 𝕏_2, …` in order.
pub fn marginals(chain: &CanonicalChain) -> Marginals<'_> {
    Marginals {
        chain,
        level: 0,
        current: Vec::new(),
    }
}

pub struct Marginals<'a> {
    chain: &'a CanonicalChain,
    level: u64,
    current: Vec<f64>,
}

impl Iterator for Marginals<'_> {
    type Item = Distribution;

    fn next(&mut self) -> Option<Distribution> {
        self.current = if self.level == 0 {
            self.chain.lambda1().to_vec()
        } else {
            self.chain
                .transition_at(self.level)
                .as_matrix()
                .left_mul(&self.current)
        };
        self.level += 1;
        Some(Distribution(self.current.clone()))
    }
}

/// `P_n ⋯ P_m`.
pub fn window_product(chain: &CanonicalChain, n: u64, m: u64) -> StochasticMatrix {
    check_level(n);
    assert!(m >= n, "window must satisfy n <= m");
    let mut w = chain.transition_at(n).into_owned();
    for k in n + 1..=m {
        w = w.mul(&chain.transition_at(k));
    }
    w
}

/// `ν(𝕏_n = s, 𝕏_m = t)` for `n < m`.
pub fn pair_probability(chain: &CanonicalChain, n: u64, m: u64, s: usize, t: usize) -> f64 {
    check_level(n);
    assert!(n < m, "pair probability needs n < m");
    let mass = marginal(chain, n)[s];
    if mass == 0.0 {
        return 0.0;
    }
    mass * propagate_point(chain, n, m, s)[t]
}

/// Row `s` of `P_n ⋯ P_{m-1}`.
fn propagate_point(chain: &CanonicalChain, n: u64, m: u64, s: usize) -> Vec<f64> {
    let mut row = vec![0.0; chain.state_count()];
    row[s] = 1.0;
    for k in n..m {
        row = chain.transition_at(k).as_matrix().left_mul(&row);
    }
    row
}

/// `H_n = E_B[√z_n]` where `z_n` is the density of the law of
/// `(𝕏_1, …, 𝕏_n)` under `a` with respect to `b`.
pub fn hellinger_integral(a: &CanonicalChain, b: &CanonicalChain, n: u64) -> Result<f64> {
    check_level(n);
    Ok(*hellinger_trajectory(a, b, n)?.last().expect("n >= 1"))
}

/// `[H_1, …, H_horizon]` in one forward pass.
pub fn hellinger_trajectory(a: &CanonicalChain, b: &CanonicalChain, horizon: u64) -> Result<Vec<f64>> {
    a.ensure_compatible(b)?;
    let mut out = Vec::with_capacity(horizon as usize);
    if horizon == 0 {
        return Ok(out);
    }
    let mut r: Vec<f64> = a
        .lambda1()
        .iter()
        .zip(b.lambda1())
        .map(|(x, y)| libm::sqrt(x * y))
        .collect();
    out.push(r.iter().sum());
    let d = a.state_count();
    for k in 1..horizon {
        let p = a.transition_at(k);
        let q = b.transition_at(k);
        let mut next = vec![0.0; d];
        for (s, &w) in r.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for ((o, &x), &y) in next.iter_mut().zip(p.row(s)).zip(q.row(s)) {
                *o += w * libm::sqrt(x * y);
            }
        }
        r = next;
        out.push(r.iter().sum());
    }
    Ok(out)
}

/// `Σ_t (√P_n(s,t) − √Q_n(s,t))²`, the local Hellinger distance at `𝕏_n = s`.
pub fn local_hellinger(a: &CanonicalChain, b: &CanonicalChain, n: u64, s: usize) -> f64 {
    check_level(n);
    row_hellinger(a.transition_at(n).row(s), b.transition_at(n).row(s))
}

pub(crate) fn row_hellinger(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&x, &y)| {
            let d = libm::sqrt(x) - libm::sqrt(y);
            d * d
        })
        .sum()
}

/// First level `n` at which the law of `(𝕏_1..𝕏_n)` under `a` charges a
/// path that is null under `b`, searching levels `1..=horizon`.
pub fn first_loc_ac_violation(a: &CanonicalChain, b: &CanonicalChain, horizon: u64) -> Option<u64> {
    let mut reach: Vec<bool> = a.lambda1().iter().map(|&x| x > 0.0).collect();
    if reach.iter().zip(b.lambda1()).any(|(&r, &y)| r && y == 0.0) {
        return Some(1);
    }
    for k in 1..horizon {
        let p = a.transition_at(k);
        let q = b.transition_at(k);
        let d = a.state_count();
        let mut next = vec![false; d];
        for s in (0..d).filter(|&s| reach[s]) {
            for t in 0..d {
                if p.get(s, t) > 0.0 {
                    if q.get(s, t) == 0.0 {
                        return Some(k + 1);
                    }
                    next[t] = true;
                }
            }
        }
        reach = next;
    }
    None
}

/// `E_B[z_n]`; equals one whenever `a` is locally absolutely continuous
/// with respect to `b`, which is checked first.
pub fn z_mean(a: &CanonicalChain, b: &CanonicalChain, n: u64) -> Result<f64> {
    check_level(n);
    a.ensure_compatible(b)?;
    if let Some(level) = first_loc_ac_violation(a, b, n) {
        return Err(Error::NotLocallyAbsolutelyContinuous { level: level as usize });
    }
    let mut v: Vec<f64> = a
        .lambda1()
        .iter()
        .zip(b.lambda1())
        .map(|(&x, &y)| if y > 0.0 { x } else { 0.0 })
        .collect();
    let d = a.state_count();
    for k in 1..n {
        let p = a.transition_at(k);
        let q = b.transition_at(k);
        let mut next = vec![0.0; d];
        for (s, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for t in 0..d {
                if q.get(s, t) > 0.0 {
                    next[t] += w * p.get(s, t);
                }
            }
        }
        v = next;
    }
    Ok(v.iter().sum())
}

/// `ν(E)` for a cylinder event.
pub fn event_probability(chain: &CanonicalChain, event: &CylinderEvent) -> Result<f64> {
    match Conditioned::new(chain, event) {
        Ok(c) => Ok(c.mass),
        Err(Error::NullEvent) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `ν_E(𝕏_n = ·)` by forward–backward recursion.
pub fn conditional_marginal(chain: &CanonicalChain, event: &CylinderEvent, n: u64) -> Result<Distribution> {
    check_level(n);
    Ok(Conditioned::new(chain, event)?.marginal(n as usize))
}

/// `ν_E(𝕏_n = s, 𝕏_m = t)` for `n < m`.
pub fn conditional_pair(
    chain: &CanonicalChain,
    event: &CylinderEvent,
    n: u64,
    m: u64,
    s: usize,
    t: usize,
) -> Result<f64> {
    check_level(n);
    if n >= m {
        return Err(Error::InvalidArgument(format!("pair needs n < m, got {n} and {m}")));
    }
    Ok(Conditioned::new(chain, event)?.pair(n as usize, m as usize, s, t))
}
