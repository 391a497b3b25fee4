//! Markov measure descriptions and their reduction to a one-sided chain.
//!
//! A measure is given by the law `pi0` of `X_0`, a kernel `step0` from `S`
//! to the working state space, and transition matrices `P_n` (`n ≥ 1`)
//! governing the step from level `n` to level `n + 1`. The working state
//! space is `S` for one-sided chains and `S×S` for two-sided fields, where
//! level `n ≥ 1` holds the pair `(X_{-n}, X_n)` encoded as `a·|S| + b`.

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{probability_vector, Matrix, StochasticMatrix, SupportPattern};
use crate::{Error, Result, ROW_SUM_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, T>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Symbols `"0"`, `"1"`, … up to `size - 1`.
    pub fn numbered(size: usize) -> Self {
        Alphabet {
            symbols: (0..size).map(|i| format!("{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Sidedness {
    #[cfg_attr(feature = "serde", serde(rename = "one"))]
    OneSided,
    #[cfg_attr(feature = "serde", serde(rename = "two"))]
    TwoSided,
}

impl Sidedness {
    /// Size of the working state space for an alphabet of `symbols` letters.
    pub fn state_count(self, symbols: usize) -> usize {
        match self {
            Sidedness::OneSided => symbols,
            Sidedness::TwoSided => symbols * symbols,
        }
    }
}

/// `P_n = base + c·(n + offset)^{-alpha}·delta` on the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTail {
    pub base: StochasticMatrix,
    pub delta: Matrix,
    pub c: f64,
    pub alpha: f64,
    /// Index shift; zero for user specs, nonzero for re-indexed (shifted) chains.
    pub offset: u64,
}

impl PowerTail {
    pub fn scale_at(&self, n: u64) -> f64 {
        self.c * libm::pow((n + self.offset) as f64, -self.alpha)
    }

    /// The perturbation direction `c·delta`.
    pub fn direction(&self) -> Matrix {
        self.delta.scaled(self.c)
    }

    pub fn at(&self, n: u64) -> StochasticMatrix {
        let scale = self.scale_at(n);
        let d = self.base.dim();
        let mut m = self.base.as_matrix().clone();
        for s in 0..d {
            for t in 0..d {
                let dt = self.delta.get(s, t);
                if dt != 0.0 {
                    m.set(s, t, self.base.get(s, t) + scale * dt);
                }
            }
        }
        StochasticMatrix::new_unchecked(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    Constant(StochasticMatrix),
    PowerPerturbation(PowerTail),
}

impl TailRule {
    pub fn dim(&self) -> usize {
        self.limit().dim()
    }

    /// `lim P_n`: the constant matrix or the perturbation base.
    pub fn limit(&self) -> &StochasticMatrix {
        match self {
            TailRule::Constant(p) => p,
            TailRule::PowerPerturbation(t) => &t.base,
        }
    }

    /// Support of every tail matrix.
    pub fn support(&self) -> SupportPattern {
        self.limit().support()
    }

    fn validate(&self, first_index: u64) -> Result<()> {
        let TailRule::PowerPerturbation(t) = self else {
            return Ok(());
        };
        if !(t.alpha.is_finite() && t.alpha > 0.0) {
            return Err(Error::InvalidTail(format!(
                "alpha must be a positive number, got {}",
                t.alpha
            )));
        }
        if !t.c.is_finite() {
            return Err(Error::InvalidTail("c must be finite".into()));
        }
        let d = t.base.dim();
        if t.delta.rows() != d || t.delta.cols() != d {
            return Err(Error::Shape {
                field: "transitions.tail.Delta".into(),
                expected: d,
                found: if t.delta.rows() != d {
                    t.delta.rows()
                } else {
                    t.delta.cols()
                },
            });
        }
        for s in 0..d {
            let sum: f64 = t.delta.row(s).iter().sum();
            if sum.abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidTail(format!(
                    "Delta row {s} sums to {sum}, expected 0"
                )));
            }
            for u in 0..d {
                if t.delta.get(s, u) != 0.0 && t.base.get(s, u) <= 0.0 {
                    return Err(Error::InvalidTail(format!(
                        "Delta({s},{u}) is nonzero where P({s},{u}) = 0"
                    )));
                }
            }
        }
        // |c·n^{-alpha}·Delta| is largest at the first tail index.
        let first = t.at(first_index);
        for s in 0..d {
            for u in 0..d {
                if t.delta.get(s, u) != 0.0 && !(first.get(s, u) > 0.0) {
                    return Err(Error::InvalidTail(format!(
                        "P + c·n^-alpha·Delta is not positive at ({s},{u}) for n = {first_index}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Explicit prefix `P_1..P_N` followed by a closed-form tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSequence {
    prefix: Vec<StochasticMatrix>,
    tail: TailRule,
}

impl TransitionSequence {
    pub fn new(prefix: Vec<StochasticMatrix>, tail: TailRule) -> Result<Self> {
        let d = tail.dim();
        for (i, p) in prefix.iter().enumerate() {
            if p.dim() != d {
                return Err(Error::Shape {
                    field: format!("transitions.prefix[{i}]"),
                    expected: d,
                    found: p.dim(),
                });
            }
        }
        tail.validate(prefix.len() as u64 + 1)?;
        Ok(TransitionSequence { prefix, tail })
    }

    pub fn constant(p: StochasticMatrix) -> Self {
        TransitionSequence {
            prefix: Vec::new(),
            tail: TailRule::Constant(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.tail.dim()
    }

    pub fn prefix(&self) -> &[StochasticMatrix] {
        &self.prefix
    }

    pub fn tail(&self) -> &TailRule {
        &self.tail
    }

    /// Number of explicitly stored matrices.
    pub fn explicit_len(&self) -> usize {
        self.prefix.len()
    }

    /// `P_n` for `n ≥ 1`.
    pub fn at(&self, n: u64) -> Cow<'_, StochasticMatrix> {
        assert!(n >= 1, "transition index starts at 1");
        match self.prefix.get((n - 1) as usize) {
            Some(p) => Cow::Borrowed(p),
            None => match &self.tail {
                TailRule::Constant(p) => Cow::Borrowed(p),
                TailRule::PowerPerturbation(t) => Cow::Owned(t.at(n)),
            },
        }
    }

    /// Same sequence re-indexed by `P_n → P_{n+1}`.
    pub fn shifted(&self) -> TransitionSequence {
        let prefix = self.prefix.iter().skip(1).cloned().collect();
        let tail = match &self.tail {
            TailRule::PowerPerturbation(t) => TailRule::PowerPerturbation(PowerTail {
                offset: t.offset + 1,
                ..t.clone()
            }),
            tail => tail.clone(),
        };
        TransitionSequence { prefix, tail }
    }
}

/// User-facing description of a one- or two-sided Markov measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasureSpec {
    alphabet: Alphabet,
    sidedness: Sidedness,
    pi0: Vec<f64>,
    step0: Matrix,
    transitions: TransitionSequence,
}

impl MarkovMeasureSpec {
    pub fn new(
        alphabet: Alphabet,
        sidedness: Sidedness,
        pi0: Vec<f64>,
        step0: Matrix,
        transitions: TransitionSequence,
    ) -> Result<Self> {
        let symbols = alphabet.len();
        let states = sidedness.state_count(symbols);
        if pi0.len() != symbols {
            return Err(Error::Shape {
                field: "pi0".into(),
                expected: symbols,
                found: pi0.len(),
            });
        }
        let pi0 = probability_vector("pi0", &pi0)?;
        if step0.rows() != symbols {
            return Err(Error::Shape {
                field: "step0".into(),
                expected: symbols,
                found: step0.rows(),
            });
        }
        if step0.cols() != states {
            return Err(Error::Shape {
                field: "step0[0]".into(),
                expected: states,
                found: step0.cols(),
            });
        }
        let mut rows = Vec::with_capacity(symbols);
        for s in 0..symbols {
            rows.push(probability_vector(&format!("step0[{s}]"), step0.row(s))?);
        }
        let step0 = Matrix::from_flat(symbols, states, rows.concat());
        if transitions.dim() != states {
            return Err(Error::Shape {
                field: "transitions.tail.P".into(),
                expected: states,
                found: transitions.dim(),
            });
        }
        Ok(MarkovMeasureSpec {
            alphabet,
            sidedness,
            pi0,
            step0,
            transitions,
        })
    }

    /// Spec whose first working state has law `lambda1`, independent of a
    /// uniformly distributed `X_0`.
    pub fn with_first_law(
        alphabet: Alphabet,
        sidedness: Sidedness,
        lambda1: &[f64],
        transitions: TransitionSequence,
    ) -> Result<Self> {
        let symbols = alphabet.len();
        let lambda1 = probability_vector("lambda1", lambda1)?;
        let pi0 = vec![1.0 / symbols as f64; symbols];
        let step0 = Matrix::from_flat(symbols, lambda1.len(), lambda1.repeat(symbols));
        MarkovMeasureSpec::new(alphabet, sidedness, pi0, step0, transitions)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn pi0(&self) -> &[f64] {
        &self.pi0
    }

    pub fn step0(&self) -> &Matrix {
        &self.step0
    }

    pub fn transitions(&self) -> &TransitionSequence {
        &self.transitions
    }

    pub fn state_count(&self) -> usize {
        self.sidedness.state_count(self.alphabet.len())
    }

    /// Reduces the measure to a one-sided chain on the working state space.
    pub fn canonicalize(&self) -> CanonicalChain {
        let lambda1 = self.step0.left_mul(&self.pi0);
        CanonicalChain {
            alphabet: self.alphabet.clone(),
            sidedness: self.sidedness,
            pi0: self.pi0.clone(),
            step0: self.step0.clone(),
            lambda1,
            transitions: self.transitions.clone(),
        }
    }
}

/// One-sided chain `(𝕏_n)_{n≥1}` on the working state space, together with
/// the data of `𝕏_0 = X_0` needed for conditioning on that coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalChain {
    alphabet: Alphabet,
    sidedness: Sidedness,
    pi0: Vec<f64>,
    step0: Matrix,
    lambda1: Vec<f64>,
    transitions: TransitionSequence,
}

impl CanonicalChain {
    /// Chain with law `lambda1` at level one; see [`MarkovMeasureSpec::with_first_law`].
    pub fn from_first_law(
        alphabet: Alphabet,
        sidedness: Sidedness,
        lambda1: &[f64],
        transitions: TransitionSequence,
    ) -> Result<Self> {
        Ok(MarkovMeasureSpec::with_first_law(alphabet, sidedness, lambda1, transitions)?.canonicalize())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn state_count(&self) -> usize {
        self.lambda1.len()
    }

    pub fn pi0(&self) -> &[f64] {
        &self.pi0
    }

    pub fn step0(&self) -> &Matrix {
        &self.step0
    }

    /// Law of `𝕏_1`.
    pub fn lambda1(&self) -> &[f64] {
        &self.lambda1
    }

    pub fn transitions(&self) -> &TransitionSequence {
        &self.transitions
    }

    /// `P_n`, governing `𝕏_n → 𝕏_{n+1}`.
    pub fn transition_at(&self, n: u64) -> Cow<'_, StochasticMatrix> {
        self.transitions.at(n)
    }

    pub fn support_pattern(&self, n: u64) -> SupportPattern {
        self.transitions.at(n).support()
    }

    /// Decodes a working state into `(X_{-n}, X_n)`; one-sided states have no
    /// left coordinate.
    pub fn coordinates(&self, state: usize) -> (Option<usize>, usize) {
        match self.sidedness {
            Sidedness::OneSided => (None, state),
            Sidedness::TwoSided => {
                let k = self.alphabet.len();
                (Some(state / k), state % k)
            }
        }
    }

    /// Checks that both chains live on the same space.
    pub fn ensure_compatible(&self, other: &CanonicalChain) -> Result<()> {
        if self.sidedness != other.sidedness {
            return Err(Error::Incompatible("sidedness differs".into()));
        }
        if self.alphabet != other.alphabet {
            return Err(Error::Incompatible("alphabets differ".into()));
        }
        Ok(())
    }

    /// Chain re-indexed by `P_n → P_{n+1}`, with `𝕏_1` distributed as the
    /// original `𝕏_2`. For one-sided chains this is the law of the shifted
    /// sequence; for two-sided fields only the working-state process is
    /// re-indexed.
    pub fn shifted(&self) -> CanonicalChain {
        let p1 = self.transitions.at(1);
        let lambda1 = p1.as_matrix().left_mul(&self.lambda1);
        let (pi0, step0) = match self.sidedness {
            Sidedness::OneSided => (self.lambda1.clone(), p1.as_matrix().clone()),
            Sidedness::TwoSided => (self.pi0.clone(), self.step0.mul(p1.as_matrix())),
        };
        CanonicalChain {
            alphabet: self.alphabet.clone(),
            sidedness: self.sidedness,
            pi0,
            step0,
            lambda1,
            transitions: self.transitions.shifted(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sm(rows: &[&[f64]]) -> StochasticMatrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        StochasticMatrix::from_rows("P", &rows).unwrap()
    }

    fn two_symbols() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn canonicalize_composes_pi0_with_step0() {
        let step0 = Matrix::from_rows("step0", &[vec![0.5, 0.5], vec![0.2, 0.8]], 2).unwrap();
        let spec = MarkovMeasureSpec::new(
            two_symbols(),
            Sidedness::OneSided,
            vec![0.3, 0.7],
            step0,
            TransitionSequence::constant(StochasticMatrix::uniform(2)),
        )
        .unwrap();
        let chain = spec.canonicalize();
        assert!((chain.lambda1()[0] - 0.29).abs() < 1e-15);
        assert!((chain.lambda1()[1] - 0.71).abs() < 1e-15);
    }

    #[test]
    fn point_mass_through_deterministic_step_is_point_mass() {
        let step0 = Matrix::from_rows("step0", &[vec![0.0, 1.0], vec![1.0, 0.0]], 2).unwrap();
        let spec = MarkovMeasureSpec::new(
            two_symbols(),
            Sidedness::OneSided,
            vec![1.0, 0.0],
            step0,
            TransitionSequence::constant(StochasticMatrix::uniform(2)),
        )
        .unwrap();
        assert_eq!(spec.canonicalize().lambda1(), &[0.0, 1.0]);
    }

    #[test]
    fn uniform_through_uniform_stays_uniform() {
        let chain = CanonicalChain::from_first_law(
            Alphabet::numbered(3),
            Sidedness::OneSided,
            &[1.0 / 3.0; 3],
            TransitionSequence::constant(StochasticMatrix::uniform(3)),
        )
        .unwrap();
        for &x in chain.lambda1() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_sided_state_space_is_squared() {
        let spec = MarkovMeasureSpec::with_first_law(
            two_symbols(),
            Sidedness::TwoSided,
            &[0.25; 4],
            TransitionSequence::constant(StochasticMatrix::uniform(4)),
        )
        .unwrap();
        assert_eq!(spec.state_count(), 4);
        let chain = spec.canonicalize();
        assert_eq!(chain.coordinates(2), (Some(1), 0));
    }

    #[test]
    fn wrong_transition_dimension_is_rejected() {
        let err = MarkovMeasureSpec::with_first_law(
            two_symbols(),
            Sidedness::TwoSided,
            &[0.25; 4],
            TransitionSequence::constant(StochasticMatrix::uniform(2)),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn prefix_then_constant_tail() {
        let p1 = sm(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let tail = StochasticMatrix::uniform(2);
        let seq = TransitionSequence::new(vec![p1.clone()], TailRule::Constant(tail.clone())).unwrap();
        assert_eq!(*seq.at(1), p1);
        assert_eq!(*seq.at(2), tail);
        assert_eq!(*seq.at(1000), tail);
    }

    #[test]
    fn power_perturbation_evaluates_formula() {
        let delta = Matrix::from_rows("Delta", &[vec![1.0, -1.0], vec![-1.0, 1.0]], 2).unwrap();
        let tail = TailRule::PowerPerturbation(PowerTail {
            base: StochasticMatrix::uniform(2),
            delta,
            c: 0.1,
            alpha: 1.0,
            offset: 0,
        });
        let seq = TransitionSequence::new(Vec::new(), tail).unwrap();
        let p10 = seq.at(10);
        assert!((p10.get(0, 0) - 0.51).abs() < 1e-15);
        assert!((p10.get(0, 1) - 0.49).abs() < 1e-15);
        assert!((p10.get(1, 0) - 0.49).abs() < 1e-15);
        assert_eq!(seq.at(10).support(), seq.at(11).support());
    }

    #[test]
    fn power_perturbation_must_stay_positive_at_first_index() {
        let delta = Matrix::from_rows("Delta", &[vec![1.0, -1.0], vec![0.0, 0.0]], 2).unwrap();
        let tail = TailRule::PowerPerturbation(PowerTail {
            base: StochasticMatrix::uniform(2),
            delta,
            c: 0.6,
            alpha: 1.0,
            offset: 0,
        });
        assert!(matches!(
            TransitionSequence::new(Vec::new(), tail.clone()),
            Err(Error::InvalidTail(_))
        ));
        // From index 2 on the perturbation is small enough.
        assert!(TransitionSequence::new(vec![StochasticMatrix::uniform(2)], tail).is_ok());
    }

    #[test]
    fn power_perturbation_outside_support_is_rejected() {
        let base = sm(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let delta = Matrix::from_rows("Delta", &[vec![-1.0, 1.0], vec![0.0, 0.0]], 2).unwrap();
        let tail = TailRule::PowerPerturbation(PowerTail {
            base,
            delta,
            c: 0.1,
            alpha: 1.0,
            offset: 0,
        });
        assert!(matches!(
            TransitionSequence::new(Vec::new(), tail),
            Err(Error::InvalidTail(_))
        ));
    }

    #[test]
    fn delta_rows_must_sum_to_zero() {
        let delta = Matrix::from_rows("Delta", &[vec![1.0, 0.0], vec![0.0, 0.0]], 2).unwrap();
        let tail = TailRule::PowerPerturbation(PowerTail {
            base: StochasticMatrix::uniform(2),
            delta,
            c: 0.1,
            alpha: 1.0,
            offset: 0,
        });
        assert!(TransitionSequence::new(Vec::new(), tail).is_err());
    }

    #[test]
    fn shifted_sequence_reindexes() {
        let delta = Matrix::from_rows("Delta", &[vec![1.0, -1.0], vec![-1.0, 1.0]], 2).unwrap();
        let tail = TailRule::PowerPerturbation(PowerTail {
            base: StochasticMatrix::uniform(2),
            delta,
            c: 0.2,
            alpha: 0.5,
            offset: 0,
        });
        let seq = TransitionSequence::new(vec![StochasticMatrix::identity(2)], tail).unwrap();
        let once = seq.shifted();
        let twice = once.shifted();
        for n in 1..20 {
            assert_eq!(*once.at(n), *seq.at(n + 1));
            assert_eq!(*twice.at(n), *seq.at(n + 2));
        }
    }
}
