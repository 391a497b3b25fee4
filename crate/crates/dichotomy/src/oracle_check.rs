//! Dynamic-programming results compared against brute-force enumeration.

use dichotomy_core::exact::{
    conditional_marginal, conditional_pair, first_loc_ac_violation, hellinger_integral, local_hellinger, marginal,
    pair_probability, z_mean, CylinderEvent,
};
use dichotomy_core::oracle::{
    enumerate_paths, oracle_conditional, oracle_conditional_pairs, oracle_event_probability, oracle_hellinger,
    oracle_sqrt_increments, oracle_z_mean, PathTable,
};
use dichotomy_core::{CanonicalChain, Error, Result};
use serde::Serialize;

pub const ORACLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub quantity: String,
    /// Number of scalar values compared.
    pub count: usize,
    pub max_abs_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub horizon: u64,
    pub tolerance: f64,
    pub comparisons: Vec<Comparison>,
    pub skipped: Vec<String>,
    pub pass: bool,
}

struct Tracker {
    quantity: String,
    count: usize,
    max: f64,
}

impl Tracker {
    fn new(quantity: impl Into<String>) -> Self {
        Tracker {
            quantity: quantity.into(),
            count: 0,
            max: 0.0,
        }
    }

    fn add(&mut self, dp: f64, oracle: f64) {
        self.count += 1;
        let dev = (dp - oracle).abs();
        // NaN must not pass silently.
        if !(dev <= self.max) {
            self.max = dev;
        }
    }

    fn finish(self) -> Comparison {
        Comparison {
            pass: self.max <= ORACLE_TOLERANCE,
            quantity: self.quantity,
            count: self.count,
            max_abs_deviation: self.max,
        }
    }
}

fn oracle_pairs(table: &PathTable, states: usize) -> Vec<Vec<Vec<f64>>> {
    let n = table.length();
    let mut pairs = vec![vec![vec![0.0; states * states]; n]; n];
    for (path, p) in table.iter() {
        for k in 0..n {
            for m in k + 1..n {
                pairs[k][m][path[k] as usize * states + path[m] as usize] += p;
            }
        }
    }
    pairs
}

fn check_chain(label: &str, chain: &CanonicalChain, n: u64, out: &mut Vec<Comparison>) -> Result<()> {
    let table = enumerate_paths(chain, n)?;
    let d = chain.state_count();
    let mut mass = Tracker::new(format!("mass_{label}"));
    mass.add(table.total(), 1.0);
    out.push(mass.finish());

    let mut marg = Tracker::new(format!("marginal_{label}"));
    for k in 1..=n {
        let dp = marginal(chain, k);
        let or = table.marginal(k as usize);
        for s in 0..d {
            marg.add(dp[s], or[s]);
        }
    }
    out.push(marg.finish());

    let pairs = oracle_pairs(&table, d);
    let mut pair = Tracker::new(format!("pair_probability_{label}"));
    for k in 1..=n {
        for m in k + 1..=n {
            for s in 0..d {
                for t in 0..d {
                    let or = pairs[k as usize - 1][m as usize - 1][s * d + t];
                    pair.add(pair_probability(chain, k, m, s, t), or);
                }
            }
        }
    }
    out.push(pair.finish());
    Ok(())
}

fn check_event(
    label: &str,
    chain: &CanonicalChain,
    event: &CylinderEvent,
    n: u64,
    out: &mut Vec<Comparison>,
    skipped: &mut Vec<String>,
) -> Result<()> {
    if oracle_event_probability(chain, event)? == 0.0 {
        skipped.push(format!("conditioning of {label} on a null event"));
        return Ok(());
    }
    let d = chain.state_count();
    let mut marg = Tracker::new(format!("conditional_marginal_{label}"));
    for k in 1..=n {
        let dp = conditional_marginal(chain, event, k)?;
        let or = oracle_conditional(chain, event, k)?;
        for s in 0..d {
            marg.add(dp[s], or[s]);
        }
    }
    out.push(marg.finish());
    let all = oracle_conditional_pairs(chain, event, n)?;
    let mut pair = Tracker::new(format!("conditional_pair_{label}"));
    for k in 1..=n {
        for m in k + 1..=n {
            for s in 0..d {
                for t in 0..d {
                    let dp = conditional_pair(chain, event, k, m, s, t)?;
                    pair.add(dp, all[k as usize - 1][m as usize - 1][s * d + t]);
                }
            }
        }
    }
    out.push(pair.finish());
    Ok(())
}

/// Compares every exact quantity for levels `1..=n` with enumeration.
/// Each event in `events` adds conditional comparisons for both chains.
pub fn oracle_check(a: &CanonicalChain, b: &CanonicalChain, n: u64, events: &[CylinderEvent]) -> Result<OracleCheck> {
    a.ensure_compatible(b)?;
    if n == 0 {
        return Err(Error::InvalidArgument("oracle check needs a horizon of at least 1".into()));
    }
    let mut comparisons = Vec::new();
    let mut skipped = Vec::new();
    check_chain("A", a, n, &mut comparisons)?;
    check_chain("B", b, n, &mut comparisons)?;

    let mut hell = Tracker::new("hellinger_integral");
    for k in 1..=n {
        hell.add(hellinger_integral(a, b, k)?, oracle_hellinger(a, b, k)?);
    }
    comparisons.push(hell.finish());

    // z_n and its increments only exist while A ≪ B on the first n levels.
    let ac_levels = first_loc_ac_violation(a, b, n).map_or(n, |v| v - 1);
    if ac_levels < n {
        skipped.push(format!("z_mean and local_hellinger beyond level {ac_levels}: A is not absolutely continuous"));
    }
    if ac_levels >= 1 {
        let mut zm = Tracker::new("z_mean");
        for k in 1..=ac_levels {
            zm.add(z_mean(a, b, k)?, oracle_z_mean(a, b, k)?);
        }
        comparisons.push(zm.finish());
    }
    if ac_levels >= 2 {
        let mut local = Tracker::new("local_hellinger");
        for k in 2..=ac_levels {
            for inc in oracle_sqrt_increments(a, b, k)? {
                local.add(local_hellinger(a, b, k - 1, inc.last), 2.0 * (1.0 - inc.conditional_mean));
            }
        }
        comparisons.push(local.finish());
    }
    for (i, event) in events.iter().enumerate() {
        check_event(&format!("A_E{i}"), a, event, n, &mut comparisons, &mut skipped)?;
        check_event(&format!("B_E{i}"), b, event, n, &mut comparisons, &mut skipped)?;
    }
    Ok(OracleCheck {
        horizon: n,
        tolerance: ORACLE_TOLERANCE,
        pass: comparisons.iter().all(|c| c.pass),
        comparisons,
        skipped,
    })
}
