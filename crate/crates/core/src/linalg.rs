use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{Matrix, StochasticMatrix};

const RESIDUAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Stationary {
    /// Unique stationary law; `None` when the support graph is reducible.
    pub distribution: Option<Vec<f64>>,
    pub irreducible: bool,
    /// Period of the support graph when irreducible.
    pub period: Option<u64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reachable_from(p: &StochasticMatrix, start: usize, transpose: bool) -> Vec<Option<u64>> {
    let d = p.dim();
    let mut level = vec![None; d];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for v in 0..d {
            let edge = if transpose { p.get(v, u) } else { p.get(u, v) };
            if edge > 0.0 && level[v].is_none() {
                level[v] = Some(level[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

fn residual(p: &StochasticMatrix, pi: &[f64]) -> f64 {
    p.as_matrix()
        .left_mul(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Solves `π(P − I) = 0, Σπ = 1` by Gaussian elimination with partial pivoting.
fn solve_direct(p: &StochasticMatrix) -> Option<Vec<f64>> {
    let d = p.dim();
    let mut a = Matrix::zeros(d, d + 1);
    for i in 0..d {
        for j in 0..d {
            let identity = if i == j { 1.0 } else { 0.0 };
            a.set(i, j, p.get(j, i) - identity);
        }
    }
    for j in 0..=d {
        a.set(d - 1, j, 1.0);
    }
    for col in 0..d {
        let pivot = (col..d).max_by(|&x, &y| a.get(x, col).abs().total_cmp(&a.get(y, col).abs()))?;
        if a.get(pivot, col).abs() < 1e-14 {
            return None;
        }
        if pivot != col {
            for j in 0..=d {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot, j));
                a.set(pivot, j, tmp);
            }
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = a.get(r, col) / a.get(col, col);
            if f == 0.0 {
                continue;
            }
            for j in col..=d {
                a.set(r, j, a.get(r, j) - f * a.get(col, j));
            }
        }
    }
    let pi: Vec<f64> = (0..d).map(|i| (a.get(i, d) / a.get(i, i)).max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    Some(pi.into_iter().map(|x| x / total).collect())
}

/// Power iteration on the lazy chain `(P + I)/2`, which shares the
/// stationary law of `P` and is aperiodic.
fn solve_iterative(p: &StochasticMatrix) -> Vec<f64> {
    let d = p.dim();
    let mut pi = vec![1.0 / d as f64; d];
    for _ in 0..1_000_000 {
        let step = p.as_matrix().left_mul(&pi);
        let next: Vec<f64> = step.iter().zip(&pi).map(|(a, b)| 0.5 * (a + b)).collect();
        let change = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if change < 1e-16 {
            break;
        }
    }
    pi
}

pub(crate) fn stationary_distribution(p: &StochasticMatrix) -> Stationary {
    let d = p.dim();
    let forward = reachable_from(p, 0, false);
    let backward = reachable_from(p, 0, true);
    let irreducible = forward.iter().all(Option::is_some) && backward.iter().all(Option::is_some);
    if !irreducible {
        return Stationary {
            distribution: None,
            irreducible,
            period: None,
        };
    }
    let mut period = 0;
    for u in 0..d {
        for v in 0..d {
            if p.get(u, v) > 0.0 {
                let (lu, lv) = (forward[u].unwrap(), forward[v].unwrap());
                period = gcd(period, (lu + 1).abs_diff(lv));
            }
        }
    }
    let direct = solve_direct(p).filter(|pi| residual(p, pi) <= RESIDUAL_TOLERANCE);
    let distribution = direct.unwrap_or_else(|| solve_iterative(p));
    Stationary {
        distribution: Some(distribution),
        irreducible,
        period: Some(period),
    }
}
