//! Equivalence and mutual singularity of non-stationary Markov measures on
//! finite alphabets.
//!
//! A one-sided chain on `S^{Z≥0}` or a two-sided Markov field on `S^Z` is
//! reduced to a single one-sided chain over the working state space
//! (`S` or `S×S`, see [`model::CanonicalChain`]). Everything downstream
//! consumes that canonical chain:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`model`] | alphabets, stochastic matrices, transition sequences with closed-form tails |
//! | [`exact`] | marginals, window products, Hellinger integrals, cylinder conditioning |
//! | [`criteria`] | `D_n²`, series classification, local absolute continuity, class certificates, verdicts |
//! | [`oracle`] | brute-force path enumeration used to validate [`exact`] |
//! | [`montecarlo`] | seeded sampling, log-likelihood-ratio trajectories, Fatou diagnostic |
//! | [`applications`] | shift non-singularity and equivalent stationary measures |
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the command-line front end live in the `dichotomy` crate.
#![no_std]
// `!(x > 0.0)` is how NaN is rejected; index loops mirror the matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod applications;
pub mod criteria;
mod error;
pub mod exact;
mod linalg;
pub mod matrix;
pub mod model;
pub mod montecarlo;
pub mod oracle;

pub use error::{Error, Result};
pub use matrix::{Matrix, StochasticMatrix};
pub use model::{
    Alphabet, CanonicalChain, MarkovMeasureSpec, Sidedness, TailRule, TransitionSequence,
};

/// Tolerance on row sums and total masses of user-supplied probabilities.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
