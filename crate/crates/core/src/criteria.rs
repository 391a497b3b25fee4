//! Decision criteria: `D_n²`, symbolic series classification, local
//! absolute continuity, class certificates and the final verdict.
//!
//! Equivalence is licensed for a locally absolutely continuous pair whose
//! first measure has strictly positive asymptotic marginals (class `R`)
//! exactly when `Σ D_n²` converges. For two measures with positive
//! asymptotic pair probabilities (class `S`) that are locally equivalent,
//! divergence of the same series means mutual singularity. Class membership
//! is a liminf condition, so it is only ever certified through the
//! `(δ, M)` sufficient condition; windowed estimates are reported as
//! evidence and never feed the verdict.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::exact::{marginals, row_hellinger};
use crate::matrix::{Matrix, StochasticMatrix, SupportPattern};
use crate::model::{CanonicalChain, TailRule};
use crate::{Error, Result};

/// Horizon used for numeric partial sums when none is given.
pub const DEFAULT_SERIES_HORIZON: u64 = 1024;

/// `Σ_{s,t} (√P(s,t) − √Q(s,t))²`.
pub fn d_n_squared(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::Shape {
            field: "Q".into(),
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok((0..p.dim()).map(|s| row_hellinger(p.row(s), q.row(s))).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SeriesVerdict {
    Converges,
    Diverges,
}

/// Symbolic rule that decided the tail of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "rule", rename_all = "snake_case"))]
pub enum TailArgument {
    /// Terms vanish identically on the tail.
    ZeroTail,
    /// Terms tend to a positive constant.
    DistinctLimits,
    /// Terms are `Θ(n^{-exponent})`.
    PowerLaw { exponent: f64 },
}

impl TailArgument {
    pub fn tag(&self) -> &'static str {
        match self {
            TailArgument::ZeroTail => "zero_tail",
            TailArgument::DistinctLimits => "distinct_limits",
            TailArgument::PowerLaw { .. } => "power_law",
        }
    }

    pub fn verdict(&self) -> SeriesVerdict {
        match *self {
            TailArgument::ZeroTail => SeriesVerdict::Converges,
            TailArgument::DistinctLimits => SeriesVerdict::Diverges,
            TailArgument::PowerLaw { exponent } if exponent > 1.0 => SeriesVerdict::Converges,
            TailArgument::PowerLaw { .. } => SeriesVerdict::Diverges,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SeriesClassification {
    pub verdict: SeriesVerdict,
    /// `(n, Σ_{k≤n} term_k)` at checkpoints.
    pub partial_sums: Vec<(u64, f64)>,
    pub tail_argument: TailArgument,
    /// First index from which the symbolic rule applies.
    pub tail_start: u64,
}

impl SeriesClassification {
    pub fn converges(&self) -> bool {
        self.verdict == SeriesVerdict::Converges
    }

    /// Last recorded partial sum.
    pub fn total(&self) -> f64 {
        self.partial_sums.last().map_or(0.0, |&(_, s)| s)
    }

    /// Evaluates `term(n)` for `n = 1..=horizon` and records checkpoints.
    pub(crate) fn from_terms(
        tail_argument: TailArgument,
        tail_start: u64,
        horizon: u64,
        mut term: impl FnMut(u64) -> f64,
    ) -> Self {
        let horizon = horizon.max(tail_start);
        let mut partial_sums = Vec::new();
        let mut sum = 0.0;
        for n in 1..=horizon {
            sum += term(n);
            let checkpoint = n <= 16 || n.is_power_of_two() || n + 1 == tail_start || n == horizon;
            if checkpoint {
                partial_sums.push((n, sum));
            }
        }
        SeriesClassification {
            verdict: tail_argument.verdict(),
            partial_sums,
            tail_argument,
            tail_start,
        }
    }
}

/// Leading behaviour `limit + direction·(n + offset)^{-alpha}` of a tail.
#[derive(Debug, Clone)]
pub(crate) struct TailForm<'a> {
    pub limit: &'a StochasticMatrix,
    pub term: Option<(Matrix, f64, u64)>,
}

impl<'a> TailForm<'a> {
    pub fn of(tail: &'a TailRule) -> Self {
        match tail {
            TailRule::Constant(p) => TailForm { limit: p, term: None },
            TailRule::PowerPerturbation(t) => {
                let direction = t.direction();
                let term = (!direction.is_zero()).then_some((direction, t.alpha, t.offset));
                TailForm {
                    limit: &t.base,
                    term,
                }
            }
        }
    }

    pub fn constant(limit: &'a StochasticMatrix) -> Self {
        TailForm { limit, term: None }
    }

    /// Asymptotics of `Σ (√P_n − √Q_n)²` for two tails of this form.
    pub fn compare(&self, other: &TailForm<'_>) -> TailArgument {
        if self.limit != other.limit {
            return TailArgument::DistinctLimits;
        }
        // (√(p+ε) − √(p+ε'))² = (ε − ε')²/(4p) + O(|ε−ε'|³) on the common support.
        match (&self.term, &other.term) {
            (None, None) => TailArgument::ZeroTail,
            (Some((_, alpha, _)), None) | (None, Some((_, alpha, _))) => {
                TailArgument::PowerLaw { exponent: 2.0 * alpha }
            }
            (Some((da, aa, oa)), Some((db, ab, ob))) => {
                if aa == ab && da == db {
                    if oa == ob {
                        TailArgument::ZeroTail
                    } else {
                        // n^{-α} − (n+k)^{-α} = Θ(n^{-α-1})
                        TailArgument::PowerLaw {
                            exponent: 2.0 * (aa + 1.0),
                        }
                    }
                } else {
                    TailArgument::PowerLaw {
                        exponent: 2.0 * aa.min(*ab),
                    }
                }
            }
        }
    }
}

/// Classifies `Σ_n D_n²(A, B)` with partial sums up to [`DEFAULT_SERIES_HORIZON`].
pub fn series_classify(a: &CanonicalChain, b: &CanonicalChain) -> Result<SeriesClassification> {
    series_classify_to(a, b, DEFAULT_SERIES_HORIZON)
}

/// Like [`series_classify`], recording partial sums up to `horizon` (and at
/// least through the explicit prefixes).
pub fn series_classify_to(
    a: &CanonicalChain,
    b: &CanonicalChain,
    horizon: u64,
) -> Result<SeriesClassification> {
    a.ensure_compatible(b)?;
    let ta = a.transitions();
    let tb = b.transitions();
    let tail_start = ta.explicit_len().max(tb.explicit_len()) as u64 + 1;
    let argument = TailForm::of(ta.tail()).compare(&TailForm::of(tb.tail()));
    Ok(SeriesClassification::from_terms(argument, tail_start, horizon, |n| {
        d_n_squared(&ta.at(n), &tb.at(n)).expect("compatible chains share dimensions")
    }))
}

/// First index after which both chains follow their tail rules.
fn common_tail_start(a: &CanonicalChain, b: &CanonicalChain) -> u64 {
    a.transitions().explicit_len().max(b.transitions().explicit_len()) as u64 + 1
}

fn support_at(chain: &CanonicalChain, n: u64, tail_start: u64) -> SupportPattern {
    if n >= tail_start {
        chain.transitions().tail().support()
    } else {
        chain.support_pattern(n)
    }
}

/// Whether every finite-level law of `a` is absolutely continuous with
/// respect to that of `b`. Decided exactly: once both chains are on their
/// tails the support patterns are fixed, so the sets of reachable states
/// become eventually periodic and only finitely many levels need checking.
pub fn loc_abs_continuous(a: &CanonicalChain, b: &CanonicalChain) -> Result<bool> {
    a.ensure_compatible(b)?;
    let mut reach: Vec<bool> = a.lambda1().iter().map(|&x| x > 0.0).collect();
    if reach.iter().zip(b.lambda1()).any(|(&r, &y)| r && y == 0.0) {
        return Ok(false);
    }
    let tail_start = common_tail_start(a, b);
    let mut seen = BTreeSet::new();
    let mut n = 1;
    loop {
        if n >= tail_start && !seen.insert(reach.clone()) {
            return Ok(true);
        }
        let p = support_at(a, n, tail_start);
        let q = support_at(b, n, tail_start);
        for s in (0..reach.len()).filter(|&s| reach[s]) {
            if p.row(s).iter().zip(q.row(s)).any(|(&x, &y)| x && !y) {
                return Ok(false);
            }
        }
        reach = p.step(&reach);
        n += 1;
    }
}

/// The cycle that the reachable sets of `chain` eventually repeat.
fn reachable_cycle(chain: &CanonicalChain) -> Vec<Vec<bool>> {
    let tail_start = chain.transitions().explicit_len() as u64 + 1;
    let mut reach: Vec<bool> = chain.lambda1().iter().map(|&x| x > 0.0).collect();
    for n in 1..tail_start {
        reach = chain.support_pattern(n).step(&reach);
    }
    let tail = chain.transitions().tail().support();
    let mut history: Vec<Vec<bool>> = Vec::new();
    loop {
        if let Some(pos) = history.iter().position(|r| *r == reach) {
            return history.split_off(pos);
        }
        let next = tail.step(&reach);
        history.push(reach);
        reach = next;
    }
}

/// Some state has zero marginal infinitely often, so the chain is outside `R`.
fn provably_outside_r(chain: &CanonicalChain) -> bool {
    reachable_cycle(chain)
        .iter()
        .any(|reach| reach.iter().any(|&r| !r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum MeasureClass {
    R,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    SufficientCondition,
    WindowEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Witness {
    DeltaM { delta: f64, m: u64 },
    Window { horizon: u64, min_probability: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Conclusion {
    Member,
    NotMember,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClassMembership {
    pub class: MeasureClass,
    pub method: Method,
    pub witness: Witness,
    pub conclusion: Conclusion,
}

impl ClassMembership {
    pub fn is_member(&self) -> bool {
        self.conclusion == Conclusion::Member
    }
}

/// Smallest value any positive transition entry takes, over the prefix and
/// every tail index.
fn min_positive_entry(chain: &CanonicalChain) -> Option<f64> {
    let seq = chain.transitions();
    let mut lo = seq.prefix().iter().filter_map(StochasticMatrix::min_positive).reduce(f64::min);
    let tail_lo = match seq.tail() {
        TailRule::Constant(p) => p.min_positive(),
        TailRule::PowerPerturbation(t) => {
            let first = t.at(seq.explicit_len() as u64 + 1);
            let d = t.base.dim();
            (0..d)
                .flat_map(|s| (0..d).map(move |u| (s, u)))
                .filter(|&(s, u)| t.base.get(s, u) > 0.0)
                .map(|(s, u)| first.get(s, u).min(t.base.get(s, u)))
                .reduce(f64::min)
        }
    };
    if let Some(x) = tail_lo {
        lo = Some(lo.map_or(x, |l| l.min(x)));
    }
    lo
}

fn windows_positive(chain: &CanonicalChain, m: u64) -> bool {
    let tail_start = chain.transitions().explicit_len() as u64 + 1;
    // Windows starting at or after `tail_start` share one support pattern.
    (1..=tail_start).all(|n| {
        let mut w = support_at(chain, n, tail_start);
        for k in n + 1..n + m {
            w = w.compose(&support_at(chain, k, tail_start));
        }
        w.all()
    })
}

/// Sufficient condition for class `S`: every transition entry is `0` or
/// `≥ δ`, and every window `P_n ⋯ P_{n+M-1}` is a positive matrix.
pub fn class_s_sufficient(chain: &CanonicalChain, delta: f64, m: u64) -> Result<ClassMembership> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let entries_ok = min_positive_entry(chain).is_some_and(|lo| lo >= delta);
    let member = entries_ok && windows_positive(chain, m);
    Ok(ClassMembership {
        class: MeasureClass::S,
        method: Method::SufficientCondition,
        witness: Witness::DeltaM { delta, m },
        conclusion: if member {
            Conclusion::Member
        } else {
            Conclusion::Undetermined
        },
    })
}

/// Searches for a `(δ, M)` certificate, honouring whichever of the two is
/// given. `δ` defaults to the smallest positive entry (capped at 1/2) and
/// `M` to the least window length that works, up to the Wielandt bound plus
/// the prefix length.
pub fn certify_class_s(chain: &CanonicalChain, delta: Option<f64>, m: Option<u64>) -> Result<ClassMembership> {
    let delta = match delta {
        Some(d) => d,
        None => min_positive_entry(chain).map_or(0.5, |x| x.min(0.5)),
    };
    if let Some(m) = m {
        return class_s_sufficient(chain, delta, m);
    }
    let d = chain.state_count() as u64;
    let max_m = (d - 1) * (d - 1) + 1 + chain.transitions().explicit_len() as u64;
    let mut last = None;
    for m in 1..=max_m {
        let record = class_s_sufficient(chain, delta, m)?;
        if record.is_member() {
            return Ok(record);
        }
        last = Some(record);
    }
    Ok(last.expect("max_m >= 1"))
}

/// Finite-window estimate of class membership.
///
/// For `R`: the least marginal `ν(𝕏_n = s)` over `n ∈ [horizon/2, horizon]`.
/// For `S`: the least pair probability `ν(𝕏_n = s, 𝕏_m = t)` over `n < m ≤
/// horizon` with `min{n, m − n} ≥ horizon/4`. A positive minimum is reported
/// as membership; a zero minimum is `NotMember` only when some state is
/// provably unreachable infinitely often.
pub fn class_window_estimate(chain: &CanonicalChain, class: MeasureClass, horizon: u64) -> Result<ClassMembership> {
    if horizon < 2 {
        return Err(Error::InvalidArgument(format!("horizon must be at least 2, got {horizon}")));
    }
    let min_probability = match class {
        MeasureClass::R => {
            let lower = horizon.div_ceil(2).max(1);
            marginals(chain)
                .take(horizon as usize)
                .skip((lower - 1) as usize)
                .map(|m| m.min())
                .fold(f64::INFINITY, f64::min)
        }
        MeasureClass::S => window_pair_minimum(chain, horizon),
    };
    let conclusion = if min_probability > 0.0 {
        Conclusion::Member
    } else if provably_outside_r(chain) {
        Conclusion::NotMember
    } else {
        Conclusion::Undetermined
    };
    Ok(ClassMembership {
        class,
        method: Method::WindowEstimate,
        witness: Witness::Window {
            horizon,
            min_probability,
        },
        conclusion,
    })
}

/// Least `ν(𝕏_n = s, 𝕏_m = t)` over `n < m ≤ horizon`, `min{n, m−n} ≥ ⌈horizon/4⌉`.
pub fn window_pair_minimum(chain: &CanonicalChain, horizon: u64) -> f64 {
    let gap = horizon.div_ceil(4).max(1);
    let d = chain.state_count();
    let mut min = f64::INFINITY;
    for (idx, marg) in marginals(chain).enumerate().take(horizon as usize) {
        let n = idx as u64 + 1;
        if n < gap || n + gap > horizon {
            continue;
        }
        let mut w = Matrix::identity(d);
        for m in n + 1..=horizon {
            w = w.mul(chain.transition_at(m - 1).as_matrix());
            if m - n < gap {
                continue;
            }
            for s in 0..d {
                for t in 0..d {
                    min = min.min(marg[s] * w.get(s, t));
                }
            }
        }
    }
    min
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecideOptions {
    /// `δ` hint for the class `S` certificate.
    pub delta: Option<f64>,
    /// `M` hint for the class `S` certificate.
    pub bigm: Option<u64>,
    /// Horizon for partial sums and windowed class estimates.
    pub horizon: u64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            delta: None,
            bigm: None,
            horizon: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Verdict {
    #[cfg_attr(feature = "serde", serde(rename = "equivalent"))]
    Equivalent,
    #[cfg_attr(feature = "serde", serde(rename = "mutually_singular"))]
    MutuallySingular,
    #[cfg_attr(feature = "serde", serde(rename = "not_A_ac_B"))]
    NotAAcB,
    #[cfg_attr(feature = "serde", serde(rename = "not_loc_equivalent"))]
    NotLocEquivalent,
    #[cfg_attr(feature = "serde", serde(rename = "inconclusive"))]
    Inconclusive,
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Equivalent => "equivalent",
            Verdict::MutuallySingular => "mutually_singular",
            Verdict::NotAAcB => "not_A_ac_B",
            Verdict::NotLocEquivalent => "not_loc_equivalent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Which result licensed the verdict: the equivalence criterion (`A`), the
/// dichotomy (`B`), or neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum AppliedTheorem {
    A,
    B,
    #[cfg_attr(feature = "serde", serde(rename = "none"))]
    None,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecisionReport {
    #[cfg_attr(feature = "serde", serde(rename = "loc_ac_A_wrt_B"))]
    pub loc_ac_a_wrt_b: bool,
    #[cfg_attr(feature = "serde", serde(rename = "loc_ac_B_wrt_A"))]
    pub loc_ac_b_wrt_a: bool,
    pub series: SeriesClassification,
    /// Certificate first, then windowed estimates for `R` and `S`.
    #[cfg_attr(feature = "serde", serde(rename = "class_A"))]
    pub class_a: Vec<ClassMembership>,
    #[cfg_attr(feature = "serde", serde(rename = "class_B"))]
    pub class_b: Vec<ClassMembership>,
    pub verdict: Verdict,
    pub applied_theorem: AppliedTheorem,
    /// Whether `A ≪ B`, when some criterion settles it.
    #[cfg_attr(feature = "serde", serde(rename = "A_ac_B"))]
    pub a_ac_b: Option<bool>,
    pub notes: Vec<String>,
}

impl DecisionReport {
    fn certified(records: &[ClassMembership]) -> bool {
        records
            .iter()
            .any(|r| r.method == Method::SufficientCondition && r.is_member())
    }

    pub fn a_certified(&self) -> bool {
        Self::certified(&self.class_a)
    }

    pub fn b_certified(&self) -> bool {
        Self::certified(&self.class_b)
    }
}

fn class_records(chain: &CanonicalChain, options: &DecideOptions) -> Result<Vec<ClassMembership>> {
    let horizon = options.horizon.max(2);
    Ok(vec![
        certify_class_s(chain, options.delta, options.bigm)?,
        class_window_estimate(chain, MeasureClass::R, horizon)?,
        class_window_estimate(chain, MeasureClass::S, horizon)?,
    ])
}

/// Equivalence / singularity verdict for the pair `(A, B)` with all evidence.
pub fn decide(a: &CanonicalChain, b: &CanonicalChain, options: &DecideOptions) -> Result<DecisionReport> {
    a.ensure_compatible(b)?;
    let loc_ab = loc_abs_continuous(a, b)?;
    let loc_ba = loc_abs_continuous(b, a)?;
    let series = series_classify_to(a, b, options.horizon)?;
    let class_a = class_records(a, options)?;
    let class_b = class_records(b, options)?;
    let mut report = DecisionReport {
        loc_ac_a_wrt_b: loc_ab,
        loc_ac_b_wrt_a: loc_ba,
        series,
        class_a,
        class_b,
        verdict: Verdict::Inconclusive,
        applied_theorem: AppliedTheorem::None,
        a_ac_b: None,
        notes: Vec::new(),
    };
    // Certified S implies R.
    let cert_a = report.a_certified();
    let cert_b = report.b_certified();
    let converges = report.series.converges();

    if !loc_ab || !loc_ba {
        if !loc_ab {
            report.a_ac_b = Some(false);
            report.notes.push("A charges a finite cylinder that is null under B".into());
        } else if cert_a {
            report.a_ac_b = Some(converges);
            report.applied_theorem = AppliedTheorem::A;
        }
        report.verdict = if !loc_ab && loc_ba {
            Verdict::NotAAcB
        } else {
            Verdict::NotLocEquivalent
        };
        return Ok(report);
    }

    let identical = a.lambda1() == b.lambda1()
        && report.series.tail_argument == TailArgument::ZeroTail
        && report.series.total() == 0.0;
    if identical {
        report.verdict = Verdict::Equivalent;
        report.a_ac_b = Some(true);
        if cert_a && cert_b {
            report.applied_theorem = AppliedTheorem::A;
        } else {
            report.notes.push("laws coincide on every level".into());
        }
        return Ok(report);
    }

    match (converges, cert_a, cert_b) {
        (true, true, true) => {
            report.verdict = Verdict::Equivalent;
            report.applied_theorem = AppliedTheorem::A;
            report.a_ac_b = Some(true);
        }
        (true, true, false) => {
            report.applied_theorem = AppliedTheorem::A;
            report.a_ac_b = Some(true);
            report.notes.push("B is not certified in R; B << A is not settled".into());
        }
        (false, true, true) => {
            report.verdict = Verdict::MutuallySingular;
            report.applied_theorem = AppliedTheorem::B;
            report.a_ac_b = Some(false);
        }
        (false, true, false) => {
            report.applied_theorem = AppliedTheorem::A;
            report.a_ac_b = Some(false);
            report
                .notes
                .push("A is not absolutely continuous w.r.t. B; B is not certified in S, so singularity is not settled".into());
        }
        (_, false, _) => {
            report
                .notes
                .push("A is not certified in R; no criterion applies".into());
        }
    }
    Ok(report)
}
