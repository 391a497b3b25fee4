//! Shift non-singularity and equivalent stationary Markov measures.
//!
//! Both analyses assume the chain is in class 𝒮. The reports carry the
//! certificate attempt and compute regardless of its outcome.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::criteria::{
    certify_class_s, d_n_squared, loc_abs_continuous, ClassMembership, SeriesClassification, TailArgument, TailForm,
    DEFAULT_SERIES_HORIZON,
};
use crate::linalg::stationary_distribution;
use crate::matrix::{probability_vector, StochasticMatrix};
use crate::model::{CanonicalChain, MarkovMeasureSpec, Sidedness, TailRule, TransitionSequence};
use crate::{Error, Result};

/// Tolerance for accepting a user-supplied stationary distribution.
pub const STATIONARITY_TOLERANCE: f64 = 1e-10;

/// True iff the zero pattern of `P_n` is the same for every `n`.
pub fn subshift_support_check(chain: &CanonicalChain) -> bool {
    let tail = chain.transitions().tail().support();
    chain
        .transitions()
        .prefix()
        .iter()
        .all(|p| p.support() == tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ShiftVerdict {
    Nonsingular,
    Singular,
    NotLocEquivalent,
}

impl ShiftVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            ShiftVerdict::Nonsingular => "nonsingular",
            ShiftVerdict::Singular => "singular",
            ShiftVerdict::NotLocEquivalent => "not_loc_equivalent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub subshift_supported: bool,
    /// Whether the law of `𝕏_1` and its image under the shift share support.
    pub initial_support_preserved: bool,
    /// `Σ_n Σ_{s,t} (√P_n(s,t) − √P_{n+1}(s,t))²`.
    pub series: SeriesClassification,
    pub class_s: ClassMembership,
    pub verdict: ShiftVerdict,
    pub notes: Vec<String>,
}

/// Compares `ν` with its image under the left shift.
pub fn shift_analysis(chain: &CanonicalChain) -> ShiftReport {
    let transitions = chain.transitions();
    let tail_start = transitions.explicit_len() as u64 + 1;
    // Consecutive tail matrices differ by c·Δ·(n^{-α} − (n+1)^{-α}) = Θ(n^{-α-1}).
    let argument = match transitions.tail() {
        TailRule::PowerPerturbation(t) if !t.direction().is_zero() => TailArgument::PowerLaw {
            exponent: 2.0 * (t.alpha + 1.0),
        },
        _ => TailArgument::ZeroTail,
    };
    let series = SeriesClassification::from_terms(argument, tail_start, DEFAULT_SERIES_HORIZON, |n| {
        d_n_squared(&transitions.at(n), &transitions.at(n + 1)).expect("same dimension")
    });
    let subshift_supported = subshift_support_check(chain);
    let shifted = chain.shifted();
    let initial_support_preserved = chain
        .lambda1()
        .iter()
        .zip(shifted.lambda1())
        .all(|(&x, &y)| (x > 0.0) == (y > 0.0));
    let class_s = certify_class_s(chain, None, None).expect("automatic search takes no user input");
    let mut notes = Vec::new();
    let verdict = if !subshift_supported || !initial_support_preserved {
        if !initial_support_preserved {
            notes.push("law of the first coordinate changes support under the shift".into());
        }
        ShiftVerdict::NotLocEquivalent
    } else if series.converges() {
        ShiftVerdict::Nonsingular
    } else {
        ShiftVerdict::Singular
    };
    if verdict == ShiftVerdict::Singular && !class_s.is_member() {
        notes.push("class S hypothesis not certified; singularity is not established".into());
    }
    if chain.sidedness() == Sidedness::TwoSided {
        notes.push("two-sided field: the shift is applied to the working-state process".into());
    }
    ShiftReport {
        subshift_supported,
        initial_support_preserved,
        series,
        class_s,
        verdict,
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StationarizationVerdict {
    EquivalentStationaryFound,
    SingularToAllStationary,
    NotLocEquivalent,
}

impl StationarizationVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            StationarizationVerdict::EquivalentStationaryFound => "equivalent_stationary_found",
            StationarizationVerdict::SingularToAllStationary => "singular_to_all_stationary",
            StationarizationVerdict::NotLocEquivalent => "not_loc_equivalent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitialSource {
    /// Unique stationary law of an irreducible limit.
    Computed,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarizationReport {
    pub limit_exists: bool,
    pub limit_matrix: Option<StochasticMatrix>,
    /// `Σ_n Σ_{s,t} (√P_n(s,t) − √P(s,t))²`.
    pub series: SeriesClassification,
    pub irreducible: bool,
    /// Period of the limit's support graph; values above 1 are reported only.
    pub period: Option<u64>,
    pub initial: Option<Vec<f64>>,
    pub initial_source: Option<InitialSource>,
    /// Local equivalence with the stationary candidate, when one was built.
    pub loc_equivalent: Option<bool>,
    pub stationary_spec: Option<MarkovMeasureSpec>,
    pub class_s: ClassMembership,
    pub verdict: StationarizationVerdict,
    pub notes: Vec<String>,
}

fn check_stationary(p: &StochasticMatrix, pi: &[f64]) -> Result<Vec<f64>> {
    let pi = probability_vector("initial", pi)?;
    if pi.len() != p.dim() {
        return Err(Error::Shape {
            field: "initial".into(),
            expected: p.dim(),
            found: pi.len(),
        });
    }
    let image = p.as_matrix().left_mul(&pi);
    let gap = image.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > STATIONARITY_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "initial distribution is not stationary for the limit matrix (max deviation {gap:e})"
        )));
    }
    Ok(pi)
}

fn stationary_spec(chain: &CanonicalChain, p: &StochasticMatrix, pi: &[f64]) -> Result<MarkovMeasureSpec> {
    let transitions = TransitionSequence::constant(p.clone());
    match chain.sidedness() {
        Sidedness::OneSided => MarkovMeasureSpec::new(
            chain.alphabet().clone(),
            Sidedness::OneSided,
            pi.to_vec(),
            p.as_matrix().clone(),
            transitions,
        ),
        Sidedness::TwoSided => {
            MarkovMeasureSpec::with_first_law(chain.alphabet().clone(), Sidedness::TwoSided, pi, transitions)
        }
    }
}

/// Looks for a stationary Markov measure equivalent to `chain`, built from
/// `P = lim P_n`. `initial` overrides the computed stationary law and is
/// required when `P` is reducible.
pub fn stationarize(chain: &CanonicalChain, initial: Option<&[f64]>) -> Result<StationarizationReport> {
    let transitions = chain.transitions();
    let limit = transitions.tail().limit().clone();
    let tail_start = transitions.explicit_len() as u64 + 1;
    let argument = TailForm::of(transitions.tail()).compare(&TailForm::constant(&limit));
    let series = SeriesClassification::from_terms(argument, tail_start, DEFAULT_SERIES_HORIZON, |n| {
        d_n_squared(&transitions.at(n), &limit).expect("same dimension")
    });
    let class_s = certify_class_s(chain, None, None).expect("automatic search takes no user input");
    let structure = stationary_distribution(&limit);
    let mut notes = Vec::new();
    if let Some(period) = structure.period.filter(|&p| p > 1) {
        notes.push(format!("limit matrix has period {period}; stationary law is not a limit of marginals"));
    }
    let (pi, source) = match initial {
        Some(user) => (Some(check_stationary(&limit, user)?), Some(InitialSource::UserSupplied)),
        None => match structure.distribution.clone() {
            Some(pi) => (Some(pi), Some(InitialSource::Computed)),
            None => {
                notes.push("limit matrix is reducible; supply a stationary initial distribution".into());
                (None, None)
            }
        },
    };
    let (spec, loc_equivalent) = match &pi {
        Some(pi) => {
            let spec = stationary_spec(chain, &limit, pi)?;
            let candidate = spec.canonicalize();
            let equivalent = loc_abs_continuous(chain, &candidate)? && loc_abs_continuous(&candidate, chain)?;
            (Some(spec), Some(equivalent))
        }
        None => (None, None),
    };
    let verdict = if !series.converges() {
        StationarizationVerdict::SingularToAllStationary
    } else if loc_equivalent == Some(false) {
        StationarizationVerdict::NotLocEquivalent
    } else {
        StationarizationVerdict::EquivalentStationaryFound
    };
    if verdict == StationarizationVerdict::SingularToAllStationary && !class_s.is_member() {
        notes.push("class S hypothesis not certified; singularity is not established".into());
    }
    if chain.sidedness() == Sidedness::TwoSided {
        notes.push("two-sided field: the stationary candidate describes the working-state process".into());
    }
    Ok(StationarizationReport {
        limit_exists: true,
        limit_matrix: Some(limit),
        series,
        irreducible: structure.irreducible,
        period: structure.period,
        initial: pi,
        initial_source: source,
        loc_equivalent,
        stationary_spec: spec,
        class_s,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{decide, series_classify, DecideOptions, Verdict};
    use crate::matrix::Matrix;
    use crate::model::{Alphabet, PowerTail};
    use alloc::vec;

    fn sm(rows: &[&[f64]]) -> StochasticMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        StochasticMatrix::from_rows("P", &rows).unwrap()
    }

    fn chain(lambda1: &[f64], prefix: Vec<StochasticMatrix>, tail: TailRule) -> CanonicalChain {
        CanonicalChain::from_first_law(
            Alphabet::numbered(lambda1.len()),
            Sidedness::OneSided,
            lambda1,
            TransitionSequence::new(prefix, tail).unwrap(),
        )
        .unwrap()
    }

    fn power(alpha: f64) -> TailRule {
        TailRule::PowerPerturbation(PowerTail {
            base: StochasticMatrix::uniform(2),
            delta: Matrix::from_rows("delta", &[vec![1.0, -1.0], vec![-1.0, 1.0]], 2).unwrap(),
            c: 0.24,
            alpha,
            offset: 0,
        })
    }

    #[test]
    fn constant_chain_is_nonsingular() {
        let c = chain(&[0.5, 0.5], vec![], TailRule::Constant(sm(&[&[0.9, 0.1], &[0.3, 0.7]])));
        let r = shift_analysis(&c);
        assert_eq!(r.verdict, ShiftVerdict::Nonsingular);
        assert_eq!(r.series.tail_argument, TailArgument::ZeroTail);
        assert_eq!(r.series.total(), 0.0);
    }

    #[test]
    fn power_tail_shift_terms_decay_fast() {
        let c = chain(&[0.5, 0.5], vec![], power(1.0));
        let r = shift_analysis(&c);
        assert_eq!(r.verdict, ShiftVerdict::Nonsingular);
        assert_eq!(r.series.tail_argument, TailArgument::PowerLaw { exponent: 4.0 });
        // Term n is about (0.24/n²)²·Σ(Δ²)/(4·0.5) = 2·0.0576/n⁴.
        let n = 400u64;
        let t = c.transitions();
        let term = d_n_squared(&t.at(n), &t.at(n + 1)).unwrap();
        assert!((term * (n as f64).powi(4) / 0.1152 - 1.0).abs() < 0.01);
    }

    #[test]
    fn shift_series_matches_classification_against_shifted_chain() {
        let prefixed = chain(&[0.2, 0.8], vec![sm(&[&[0.7, 0.3], &[0.4, 0.6]])], power(0.75));
        for c in [chain(&[0.5, 0.5], vec![], power(1.0)), prefixed] {
            let own = shift_analysis(&c).series;
            let via = series_classify(&c, &c.shifted()).unwrap();
            assert_eq!(own, via);
        }
    }

    #[test]
    fn varying_support_is_not_loc_equivalent() {
        let c = chain(
            &[0.5, 0.5],
            vec![sm(&[&[0.5, 0.5], &[0.5, 0.5]]), sm(&[&[1.0, 0.0], &[0.5, 0.5]])],
            TailRule::Constant(StochasticMatrix::uniform(2)),
        );
        assert!(!subshift_support_check(&c));
        assert_eq!(shift_analysis(&c).verdict, ShiftVerdict::NotLocEquivalent);
    }

    #[test]
    fn moving_point_mass_is_not_loc_equivalent() {
        let c = chain(&[1.0, 0.0], vec![], TailRule::Constant(StochasticMatrix::permutation(&[1, 0])));
        assert!(subshift_support_check(&c));
        assert_eq!(shift_analysis(&c).verdict, ShiftVerdict::NotLocEquivalent);
    }

    #[test]
    fn stationarize_constant_and_power_tails() {
        let p = sm(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let c = chain(&[0.5, 0.5], vec![], TailRule::Constant(p.clone()));
        let r = stationarize(&c, None).unwrap();
        assert_eq!(r.verdict, StationarizationVerdict::EquivalentStationaryFound);
        assert_eq!(r.limit_matrix.as_ref(), Some(&p));
        let pi = r.initial.unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-12);

        let r = stationarize(&chain(&[0.5, 0.5], vec![], power(1.0)), None).unwrap();
        assert_eq!(r.verdict, StationarizationVerdict::EquivalentStationaryFound);
        assert_eq!(r.series.tail_argument, TailArgument::PowerLaw { exponent: 2.0 });

        let r = stationarize(&chain(&[0.5, 0.5], vec![], power(0.25)), None).unwrap();
        assert_eq!(r.verdict, StationarizationVerdict::SingularToAllStationary);
        assert!(r.stationary_spec.is_some());
    }

    #[test]
    fn stationary_round_trip_decides_equivalent() {
        let c = chain(&[0.3, 0.7], vec![sm(&[&[0.6, 0.4], &[0.4, 0.6]])], power(1.0));
        let r = stationarize(&c, None).unwrap();
        let spec = r.stationary_spec.unwrap().canonicalize();
        let report = decide(&c, &spec, &DecideOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Equivalent);
    }

    #[test]
    fn reducible_limit_needs_initial() {
        let c = chain(&[1.0, 0.0], vec![], TailRule::Constant(StochasticMatrix::identity(2)));
        let r = stationarize(&c, None).unwrap();
        assert!(!r.irreducible);
        assert!(r.stationary_spec.is_none());
        let r = stationarize(&c, Some(&[1.0, 0.0])).unwrap();
        assert_eq!(r.initial_source, Some(InitialSource::UserSupplied));
        assert_eq!(r.loc_equivalent, Some(true));
        let r = stationarize(&c, Some(&[0.5, 0.5])).unwrap();
        assert_eq!(r.verdict, StationarizationVerdict::NotLocEquivalent);
        let bad = chain(&[0.5, 0.5], vec![], TailRule::Constant(sm(&[&[0.9, 0.1], &[0.2, 0.8]])));
        assert!(stationarize(&bad, Some(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn periodic_limit_is_reported() {
        let c = chain(&[0.5, 0.5], vec![], TailRule::Constant(StochasticMatrix::permutation(&[1, 0])));
        let r = stationarize(&c, None).unwrap();
        assert_eq!(r.period, Some(2));
        assert_eq!(r.verdict, StationarizationVerdict::EquivalentStationaryFound);
        assert!(!r.notes.is_empty());
    }
}
