//! Exhaustive path enumeration on small instances.
//!
//! Every quantity here is computed from explicit path probabilities
//! `lambda1(x_1)·Π P_k(x_k, x_{k+1})` and never from the forward recursions
//! in [`exact`](crate::exact), so the two can be compared.

use alloc::vec;
use alloc::vec::Vec;

use crate::exact::{CylinderEvent, Distribution};
use crate::matrix::StochasticMatrix;
use crate::model::{CanonicalChain, Sidedness};
use crate::{Error, Result};

/// Maximum number of paths any single enumeration may visit.
pub const PATH_LIMIT: u64 = 10_000_000;

fn guard(states: usize, length: u64, extra: usize) -> Result<()> {
    let paths = libm::pow(states as f64, length as f64) * extra as f64;
    if paths > PATH_LIMIT as f64 {
        return Err(Error::GuardExceeded {
            paths,
            limit: PATH_LIMIT,
        });
    }
    Ok(())
}

fn transitions(chain: &CanonicalChain, length: u64) -> Vec<StochasticMatrix> {
    (1..length).map(|k| chain.transition_at(k).into_owned()).collect()
}

/// Calls `visit(path, weights)` for every path of the given length in
/// lexicographic order; `weights[i]` is the product of `start[i][x_1]` and
/// the transition entries of `mats[i]` along the path.
fn for_each_path<F>(states: usize, length: usize, start: &[&[f64]], mats: &[&[StochasticMatrix]], mut visit: F)
where
    F: FnMut(&[usize], &[f64]),
{
    let k = start.len();
    let mut path = vec![0usize; length];
    loop {
        let mut w: Vec<f64> = (0..k).map(|i| start[i][path[0]]).collect();
        for j in 1..length {
            for i in 0..k {
                w[i] *= mats[i][j - 1].get(path[j - 1], path[j]);
            }
        }
        visit(&path, &w);
        // odometer
        let mut pos = length;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            path[pos] += 1;
            if path[pos] < states {
                break;
            }
            path[pos] = 0;
        }
    }
}

/// Exact law of `(𝕏_1, …, 𝕏_n)` with zero-probability paths removed.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    length: usize,
    states: usize,
    paths: Vec<u16>,
    probabilities: Vec<f64>,
}

impl PathTable {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u16], f64)> + '_ {
        self.paths
            .chunks_exact(self.length.max(1))
            .zip(self.probabilities.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Law of `𝕏_k` read off the table (`1 ≤ k ≤ length`).
    pub fn marginal(&self, k: usize) -> Distribution {
        assert!(k >= 1 && k <= self.length);
        let mut out = vec![0.0; self.states];
        for (path, p) in self.iter() {
            out[path[k - 1] as usize] += p;
        }
        Distribution::new(out)
    }

    /// `P(𝕏_n = s, 𝕏_m = t)` read off the table.
    pub fn pair(&self, n: usize, m: usize, s: usize, t: usize) -> f64 {
        self.iter()
            .filter(|(path, _)| path[n - 1] as usize == s && path[m - 1] as usize == t)
            .map(|(_, p)| p)
            .sum()
    }
}

pub fn enumerate_paths(chain: &CanonicalChain, n: u64) -> Result<PathTable> {
    if n == 0 {
        return Err(Error::InvalidArgument("paths have length at least 1".into()));
    }
    let d = chain.state_count();
    guard(d, n, 1)?;
    let mats = transitions(chain, n);
    let mut table = PathTable {
        length: n as usize,
        states: d,
        paths: Vec::new(),
        probabilities: Vec::new(),
    };
    for_each_path(d, n as usize, &[chain.lambda1()], &[&mats], |path, w| {
        if w[0] > 0.0 {
            table.paths.extend(path.iter().map(|&x| x as u16));
            table.probabilities.push(w[0]);
        }
    });
    Ok(table)
}

/// Path probabilities of the same path under both measures.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPath {
    pub path: Vec<usize>,
    pub p_a: f64,
    pub p_b: f64,
}

impl JointPath {
    /// `z = p_A / p_B`, `None` on `B`-null paths.
    pub fn z(&self) -> Option<f64> {
        (self.p_b > 0.0).then(|| self.p_a / self.p_b)
    }
}

/// All paths of length `n` charged by at least one of the two measures.
pub fn joint_paths(a: &CanonicalChain, b: &CanonicalChain, n: u64) -> Result<Vec<JointPath>> {
    a.ensure_compatible(b)?;
    if n == 0 {
        return Err(Error::InvalidArgument("paths have length at least 1".into()));
    }
    let d = a.state_count();
    guard(d, n, 1)?;
    let ma = transitions(a, n);
    let mb = transitions(b, n);
    let mut out = Vec::new();
    for_each_path(d, n as usize, &[a.lambda1(), b.lambda1()], &[&ma, &mb], |path, w| {
        if w[0] > 0.0 || w[1] > 0.0 {
            out.push(JointPath {
                path: path.to_vec(),
                p_a: w[0],
                p_b: w[1],
            });
        }
    });
    Ok(out)
}

/// `Σ_paths √(p_A·p_B)`, i.e. `1 − h²/2` between the two level-`n` laws.
pub fn oracle_hellinger(a: &CanonicalChain, b: &CanonicalChain, n: u64) -> Result<f64> {
    Ok(joint_paths(a, b, n)?
        .iter()
        .map(|j| libm::sqrt(j.p_a * j.p_b))
        .sum())
}

/// One atom of the law of `z_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZAtom {
    pub z: f64,
    pub prob_b: f64,
    pub prob_a: f64,
}

/// Exact law of `z_n = p_A/p_B` under both measures, atoms sorted by value.
pub fn oracle_z_distribution(a: &CanonicalChain, b: &CanonicalChain, n: u64) -> Result<Vec<ZAtom>> {
    let mut atoms: Vec<ZAtom> = Vec::new();
    for j in joint_paths(a, b, n)? {
        let Some(z) = j.z() else {
            return Err(Error::NotLocallyAbsolutelyContinuous { level: n as usize });
        };
        atoms.push(ZAtom {
            z,
            prob_b: j.p_b,
            prob_a: j.p_a,
        });
    }
    atoms.sort_by(|x, y| x.z.total_cmp(&y.z));
    let mut merged: Vec<ZAtom> = Vec::new();
    for atom in atoms {
        match merged.last_mut() {
            Some(last) if last.z == atom.z => {
                last.prob_b += atom.prob_b;
                last.prob_a += atom.prob_a;
            }
            _ => merged.push(atom),
        }
    }
    Ok(merged)
}

/// `E_B[z_n]` from the exact law of `z_n`.
pub fn oracle_z_mean(a: &CanonicalChain, b: &CanonicalChain, n: u64) -> Result<f64> {
    Ok(oracle_z_distribution(a, b, n)?
        .iter()
        .map(|atom| atom.z * atom.prob_b)
        .sum())
}

/// `E_B[√(z_n / z_{n-1}) | 𝕏_1..𝕏_{n-1}]` for one history.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtIncrement {
    pub history: Vec<usize>,
    /// The value of `𝕏_{n-1}`.
    pub last: usize,
    pub conditional_mean: f64,
}

/// Groups the level-`n` paths by their history `(𝕏_1..𝕏_{n-1})` and
/// computes `E_B[√Z_n | history]` with `Z_n = z_n / z_{n-1}`, for every
/// history charged by both measures.
pub fn oracle_sqrt_increments(a: &CanonicalChain, b: &CanonicalChain, n: u64) -> Result<Vec<SqrtIncrement>> {
    if n < 2 {
        return Err(Error::InvalidArgument("increments need n >= 2".into()));
    }
    let d = a.state_count();
    let mut paths = joint_paths(a, b, n)?;
    if paths.iter().any(|j| j.p_a > 0.0 && j.p_b == 0.0) {
        return Err(Error::NotLocallyAbsolutelyContinuous { level: n as usize });
    }
    let prior = joint_paths(a, b, n - 1)?;
    paths.sort_by(|x, y| x.path.cmp(&y.path));
    let mut out = Vec::new();
    for h in prior.iter().filter(|h| h.p_a > 0.0 && h.p_b > 0.0) {
        let z_prev = h.p_a / h.p_b;
        let mut mean = 0.0;
        for t in 0..d {
            let mut full = h.path.clone();
            full.push(t);
            let Ok(idx) = paths.binary_search_by(|j| j.path.cmp(&full)) else {
                continue;
            };
            let j = &paths[idx];
            if j.p_b == 0.0 {
                continue;
            }
            let cond_b = j.p_b / h.p_b;
            let big_z = (j.p_a / j.p_b) / z_prev;
            mean += cond_b * libm::sqrt(big_z);
        }
        out.push(SqrtIncrement {
            last: *h.path.last().expect("n >= 2"),
            history: h.path.clone(),
            conditional_mean: mean,
        });
    }
    Ok(out)
}

/// Value of the coordinate `X_index` on a rooted path `(x_0, 𝕏_1, 𝕏_2, …)`.
fn coordinate(chain: &CanonicalChain, rooted: &[usize], index: i64) -> usize {
    if index == 0 {
        return rooted[0];
    }
    let state = rooted[index.unsigned_abs() as usize];
    match chain.sidedness() {
        Sidedness::OneSided => state,
        Sidedness::TwoSided => {
            let k = chain.alphabet().len();
            if index > 0 {
                state % k
            } else {
                state / k
            }
        }
    }
}

/// Calls `visit(rooted_path, probability)` for all rooted paths
/// `(x_0, 𝕏_1..𝕏_len)` of positive probability that lie in `event`.
fn for_each_rooted_in_event<F>(chain: &CanonicalChain, event: &CylinderEvent, len: u64, mut visit: F) -> Result<()>
where
    F: FnMut(&[usize], f64),
{
    let k = chain.alphabet().len();
    let d = chain.state_count();
    for (i, sym) in event.iter() {
        if sym >= k || (i < 0 && chain.sidedness() == Sidedness::OneSided) {
            return Err(Error::InvalidEvent(alloc::format!("constraint X_{i} = {sym} is not representable")));
        }
    }
    guard(d, len, k)?;
    let mats = transitions(chain, len);
    let step0 = chain.step0();
    for x0 in 0..k {
        let p0 = chain.pi0()[x0];
        if p0 == 0.0 {
            continue;
        }
        let first: Vec<f64> = step0.row(x0).iter().map(|&w| p0 * w).collect();
        let mut rooted = vec![0usize; len as usize + 1];
        rooted[0] = x0;
        for_each_path(d, len as usize, &[&first], &[&mats], |path, w| {
            if w[0] == 0.0 {
                return;
            }
            rooted[1..].copy_from_slice(path);
            if event.iter().all(|(i, sym)| coordinate(chain, &rooted, i) == sym) {
                visit(&rooted, w[0]);
            }
        });
    }
    Ok(())
}

/// `ν(E)` by enumeration.
pub fn oracle_event_probability(chain: &CanonicalChain, event: &CylinderEvent) -> Result<f64> {
    let len = (event.span() as u64).max(1);
    let mut mass = 0.0;
    for_each_rooted_in_event(chain, event, len, |_, p| mass += p)?;
    Ok(mass)
}

/// `ν_E(𝕏_n = ·)` by filtering enumerated paths.
pub fn oracle_conditional(chain: &CanonicalChain, event: &CylinderEvent, n: u64) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::InvalidArgument("levels start at 1".into()));
    }
    let len = n.max(event.span() as u64);
    let mut out = vec![0.0; chain.state_count()];
    let mut mass = 0.0;
    for_each_rooted_in_event(chain, event, len, |rooted, p| {
        mass += p;
        out[rooted[n as usize]] += p;
    })?;
    if mass == 0.0 {
        return Err(Error::NullEvent);
    }
    Ok(Distribution::new(out.into_iter().map(|x| x / mass).collect()))
}

/// `ν_E(𝕏_n = s, 𝕏_m = t)` by filtering enumerated paths.
pub fn oracle_conditional_pair(
    chain: &CanonicalChain,
    event: &CylinderEvent,
    n: u64,
    m: u64,
    s: usize,
    t: usize,
) -> Result<f64> {
    let len = n.max(m).max(event.span() as u64).max(1);
    let mut hit = 0.0;
    let mut mass = 0.0;
    for_each_rooted_in_event(chain, event, len, |rooted, p| {
        mass += p;
        if rooted[n as usize] == s && rooted[m as usize] == t {
            hit += p;
        }
    })?;
    if mass == 0.0 {
        return Err(Error::NullEvent);
    }
    Ok(hit / mass)
}

/// All `ν_E(𝕏_k = s, 𝕏_m = t)` for `1 ≤ k < m ≤ n` from a single
/// enumeration; entry `[k-1][m-1][s·d + t]` (empty for `m ≤ k`).
pub fn oracle_conditional_pairs(chain: &CanonicalChain, event: &CylinderEvent, n: u64) -> Result<Vec<Vec<Vec<f64>>>> {
    let d = chain.state_count();
    let len = n.max(event.span() as u64).max(1);
    let n = n as usize;
    let mut table = vec![vec![Vec::new(); n]; n];
    for (k, row) in table.iter_mut().enumerate() {
        for cell in row.iter_mut().skip(k + 1) {
            *cell = vec![0.0; d * d];
        }
    }
    let mut mass = 0.0;
    for_each_rooted_in_event(chain, event, len, |rooted, p| {
        mass += p;
        for k in 1..=n {
            for m in k + 1..=n {
                table[k - 1][m - 1][rooted[k] * d + rooted[m]] += p;
            }
        }
    })?;
    if mass == 0.0 {
        return Err(Error::NullEvent);
    }
    for cell in table.iter_mut().flatten().flatten() {
        *cell /= mass;
    }
    Ok(table)
}
