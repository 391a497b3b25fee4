//! Text, CSV and JSON renderings of analysis results.
//!
//! CSV headers:
//!
//! | output            | header                          |
//! |-------------------|---------------------------------|
//! | Hellinger table   | `n,H_n,partial_D2`              |
//! | trajectories      | `path_id,k,log_z`               |
//! | path table        | `path,p_A,p_B,z`                |
//! | series            | `n,partial_sum`                 |
//! | oracle check      | `quantity,count,max_abs_deviation,pass` |
//!
//! `log_z` is written as `-inf` once a path leaves the support of `A`;
//! `z` is empty on paths that are null under `B`.

use std::fmt::Write as _;

use dichotomy_core::applications::{ShiftReport, StationarizationReport};
use dichotomy_core::criteria::{ClassMembership, DecisionReport, SeriesClassification, TailArgument, Witness};
use dichotomy_core::exact::hellinger_trajectory;
use dichotomy_core::montecarlo::{TrajectoryBatch, TrajectorySummary, LOG_Z_NULL};
use dichotomy_core::oracle::JointPath;
use dichotomy_core::{criteria::d_n_squared, CanonicalChain, Result};
use serde::Serialize;

use crate::oracle_check::OracleCheck;
use crate::spec_file::RawSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HellingerRow {
    pub n: u64,
    #[serde(rename = "H_n")]
    pub h_n: f64,
    /// `Σ_{k≤n} D_k²`.
    #[serde(rename = "partial_D2")]
    pub partial_d2: f64,
}

pub fn hellinger_table(a: &CanonicalChain, b: &CanonicalChain, horizon: u64) -> Result<Vec<HellingerRow>> {
    let h = hellinger_trajectory(a, b, horizon)?;
    let mut sum = 0.0;
    Ok(h.into_iter()
        .zip(1..)
        .map(|(h_n, n)| {
            sum += d_n_squared(&a.transition_at(n), &b.transition_at(n)).expect("compatible chains");
            HellingerRow {
                n,
                h_n,
                partial_d2: sum,
            }
        })
        .collect())
}

pub fn hellinger_csv(rows: &[HellingerRow]) -> String {
    let mut out = String::from("n,H_n,partial_D2\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.n, r.h_n, r.partial_d2);
    }
    out
}

pub fn hellinger_text(rows: &[HellingerRow]) -> String {
    let mut out = format!("{:>8}  {:>22}  {:>22}\n", "n", "H_n", "partial_D2");
    for r in rows {
        let _ = writeln!(out, "{:>8}  {:>22.15e}  {:>22.15e}", r.n, r.h_n, r.partial_d2);
    }
    out
}

fn log_z_field(x: f64) -> String {
    if x == LOG_Z_NULL {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

pub fn trajectory_csv(batch: &TrajectoryBatch) -> String {
    let mut out = String::from("path_id,k,log_z\n");
    for (i, path) in batch.log_z.iter().enumerate() {
        for (k, &x) in path.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{}", k + 1, log_z_field(x));
        }
    }
    out
}

pub fn path_table_csv(paths: &[JointPath]) -> String {
    let mut out = String::from("path,p_A,p_B,z\n");
    for j in paths {
        let path: Vec<String> = j.path.iter().map(usize::to_string).collect();
        let z = j.z().map(|z| z.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", path.join(" "), j.p_a, j.p_b, z);
    }
    out
}

pub fn series_csv(series: &SeriesClassification) -> String {
    let mut out = String::from("n,partial_sum\n");
    for (n, s) in &series.partial_sums {
        let _ = writeln!(out, "{n},{s}");
    }
    out
}

pub fn oracle_csv(check: &OracleCheck) -> String {
    let mut out = String::from("quantity,count,max_abs_deviation,pass\n");
    for c in &check.comparisons {
        let _ = writeln!(out, "{},{},{},{}", c.quantity, c.count, c.max_abs_deviation, c.pass);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub horizon: u64,
    pub samples: u64,
    pub summary: TrajectorySummary,
}

pub fn simulation_text(r: &SimulationReport) -> String {
    let s = &r.summary;
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    format!(
        "seed: {}\nhorizon: {}\nsamples: {}\nfraction log z_n < -{}: {:.6}\nnull paths: {:.6}\n\
         mean z_n: {:.6} ± {:.6} (4 s.e.)\nmean log z_n: {}\nmedian log z_n: {}\n",
        r.seed,
        r.horizon,
        r.samples,
        s.threshold,
        s.fraction_below,
        s.null_fraction,
        s.mean_z,
        s.confidence_radius,
        opt(s.mean_log_z),
        opt(s.median_log_z),
    )
}

fn tail_text(arg: &TailArgument) -> String {
    match arg {
        TailArgument::ZeroTail => "zero tail".into(),
        TailArgument::DistinctLimits => "distinct limits".into(),
        TailArgument::PowerLaw { exponent } => format!("terms ~ n^-{exponent}"),
    }
}

fn series_text(label: &str, s: &SeriesClassification) -> String {
    format!(
        "{label}: {} ({}, tail from n = {}, partial sum {:.6e} at n = {})\n",
        if s.converges() { "converges" } else { "diverges" },
        tail_text(&s.tail_argument),
        s.tail_start,
        s.total(),
        s.partial_sums.last().map_or(0, |p| p.0),
    )
}

fn membership_text(m: &ClassMembership) -> String {
    let witness = match m.witness {
        Witness::DeltaM { delta, m } => format!("delta = {delta}, M = {m}"),
        Witness::Window {
            horizon,
            min_probability,
        } => format!("horizon {horizon}, min probability {min_probability:.6e}"),
    };
    format!("{:?} via {:?} ({witness}): {:?}", m.class, m.method, m.conclusion)
}

pub fn decision_text(r: &DecisionReport) -> String {
    let mut out = format!("verdict: {}\napplied theorem: {:?}\n", r.verdict.tag(), r.applied_theorem);
    let _ = writeln!(out, "A loc<< B: {}\nB loc<< A: {}", r.loc_ac_a_wrt_b, r.loc_ac_b_wrt_a);
    if let Some(ac) = r.a_ac_b {
        let _ = writeln!(out, "A << B: {ac}");
    }
    out += &series_text("sum D_n^2", &r.series);
    for (label, records) in [("A", &r.class_a), ("B", &r.class_b)] {
        for m in records {
            let _ = writeln!(out, "class {label}: {}", membership_text(m));
        }
    }
    for note in &r.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftJson<'a> {
    pub subshift_supported: bool,
    pub initial_support_preserved: bool,
    pub series: &'a SeriesClassification,
    #[serde(rename = "class_S")]
    pub class_s: &'a ClassMembership,
    pub verdict: &'static str,
    pub notes: &'a [String],
}

impl<'a> From<&'a ShiftReport> for ShiftJson<'a> {
    fn from(r: &'a ShiftReport) -> Self {
        ShiftJson {
            subshift_supported: r.subshift_supported,
            initial_support_preserved: r.initial_support_preserved,
            series: &r.series,
            class_s: &r.class_s,
            verdict: r.verdict.tag(),
            notes: &r.notes,
        }
    }
}

pub fn shift_text(r: &ShiftReport) -> String {
    let mut out = format!(
        "verdict: {}\nsubshift supported: {}\ninitial support preserved: {}\n",
        r.verdict.tag(),
        r.subshift_supported,
        r.initial_support_preserved
    );
    out += &series_text("sum of consecutive differences", &r.series);
    let _ = writeln!(out, "class S: {}", membership_text(&r.class_s));
    for note in &r.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarizationJson<'a> {
    pub limit_exists: bool,
    pub limit_matrix: Option<&'a dichotomy_core::StochasticMatrix>,
    pub series: &'a SeriesClassification,
    pub irreducible: bool,
    pub period: Option<u64>,
    pub initial: Option<&'a [f64]>,
    pub initial_source: Option<dichotomy_core::applications::InitialSource>,
    pub loc_equivalent: Option<bool>,
    #[serde(rename = "class_S")]
    pub class_s: &'a ClassMembership,
    pub verdict: &'static str,
    pub notes: &'a [String],
    pub stationary_spec: Option<RawSpec>,
}

impl<'a> From<&'a StationarizationReport> for StationarizationJson<'a> {
    fn from(r: &'a StationarizationReport) -> Self {
        StationarizationJson {
            limit_exists: r.limit_exists,
            limit_matrix: r.limit_matrix.as_ref(),
            series: &r.series,
            irreducible: r.irreducible,
            period: r.period,
            initial: r.initial.as_deref(),
            initial_source: r.initial_source,
            loc_equivalent: r.loc_equivalent,
            class_s: &r.class_s,
            verdict: r.verdict.tag(),
            notes: &r.notes,
            stationary_spec: r.stationary_spec.as_ref().map(RawSpec::from_spec),
        }
    }
}

pub fn stationarization_text(r: &StationarizationReport) -> String {
    let mut out = format!("verdict: {}\n", r.verdict.tag());
    if let Some(p) = &r.limit_matrix {
        let _ = writeln!(out, "limit matrix: {:?}", p.as_matrix().to_rows());
    }
    out += &series_text("sum of distances to the limit", &r.series);
    let _ = writeln!(out, "irreducible: {}", r.irreducible);
    if let Some(period) = r.period {
        let _ = writeln!(out, "period: {period}");
    }
    if let Some(pi) = &r.initial {
        let _ = writeln!(out, "stationary law: {pi:?}");
    }
    if let Some(eq) = r.loc_equivalent {
        let _ = writeln!(out, "locally equivalent to candidate: {eq}");
    }
    let _ = writeln!(out, "class S: {}", membership_text(&r.class_s));
    for note in &r.notes {
        let _ = writeln!(out, "note: {note}");
    }
    if let Some(spec) = &r.stationary_spec {
        let _ = writeln!(out, "stationary spec:\n{}", crate::spec_file::spec_to_json(spec));
    }
    out
}

pub fn oracle_text(check: &OracleCheck) -> String {
    let mut out = format!("horizon: {}\ntolerance: {:e}\n", check.horizon, check.tolerance);
    for c in &check.comparisons {
        let _ = writeln!(
            out,
            "{:<6} {:<28} {:>9} values  max |dp - oracle| = {:.3e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.quantity,
            c.count,
            c.max_abs_deviation
        );
    }
    for s in &check.skipped {
        let _ = writeln!(out, "skipped: {s}");
    }
    let _ = writeln!(out, "overall: {}", if check.pass { "PASS" } else { "FAIL" });
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports are serializable");
    s.push('\n');
    s
}
