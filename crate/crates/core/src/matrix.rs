//! Dense row-major matrices and row-stochastic matrices.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::{Error, Result, ROW_SUM_TOLERANCE};

/// Dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row vectors, checking that every row has `cols`
    /// finite entries.
    pub fn from_rows(field: &str, rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Shape {
                    field: format!("{field}[{i}]"),
                    expected: cols,
                    found: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite {
                        field: field.into(),
                        row: i,
                        col: j,
                    });
                }
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat data does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(|r| r.to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Row vector times matrix: `out(t) = Σ_s v(s)·M(s,t)`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "vector length does not match rows");
        let mut out = vec![0.0; self.cols];
        for (s, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(s)) {
                *o += w * m;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Square matrix with non-negative entries and unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(Matrix);

impl StochasticMatrix {
    /// Validates a square row-stochastic matrix. Rows within
    /// [`ROW_SUM_TOLERANCE`] of one are renormalized, anything further off is
    /// rejected.
    pub fn from_rows(field: &str, rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(field, rows, rows.len())?;
        Ok(StochasticMatrix(normalize_rows(field, m)?))
    }

    pub fn new(field: &str, matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape {
                field: field.into(),
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        Ok(StochasticMatrix(normalize_rows(field, matrix)?))
    }

    /// Wraps a matrix the caller guarantees to be row-stochastic.
    pub(crate) fn new_unchecked(matrix: Matrix) -> Self {
        debug_assert!(matrix.is_square());
        StochasticMatrix(matrix)
    }

    pub fn identity(dim: usize) -> Self {
        StochasticMatrix(Matrix::identity(dim))
    }

    pub fn uniform(dim: usize) -> Self {
        let p = 1.0 / dim as f64;
        StochasticMatrix(Matrix::from_flat(dim, dim, vec![p; dim * dim]))
    }

    /// Permutation matrix sending state `s` to `perm[s]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let dim = perm.len();
        let mut m = Matrix::zeros(dim, dim);
        for (s, &t) in perm.iter().enumerate() {
            m.set(s, t, 1.0);
        }
        StochasticMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.0.get(s, t)
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        self.0.row(s)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn mul(&self, other: &StochasticMatrix) -> StochasticMatrix {
        StochasticMatrix(self.0.mul(&other.0))
    }

    pub fn support(&self) -> SupportPattern {
        SupportPattern::of(&self.0)
    }

    pub fn is_positive(&self) -> bool {
        self.0.as_slice().iter().all(|&x| x > 0.0)
    }

    /// Smallest strictly positive entry.
    pub fn min_positive(&self) -> Option<f64> {
        self.0
            .as_slice()
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .reduce(f64::min)
    }
}

impl Index<(usize, usize)> for StochasticMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

fn normalize_rows(field: &str, mut m: Matrix) -> Result<Matrix> {
    for i in 0..m.rows() {
        let mut sum = 0.0;
        for j in 0..m.cols() {
            let x = m.get(i, j);
            if x < 0.0 {
                return Err(Error::Negative {
                    field: field.into(),
                    row: i,
                    col: j,
                    value: x,
                });
            }
            sum += x;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::RowSum {
                field: field.into(),
                row: i,
                sum,
            });
        }
        // Rows already within rounding of 1 are kept bit-for-bit so that
        // renormalizing twice changes nothing.
        if (sum - 1.0).abs() > 4.0 * m.cols() as f64 * f64::EPSILON {
            for j in 0..m.cols() {
                let x = m.get(i, j);
                m.set(i, j, x / sum);
            }
        }
    }
    Ok(m)
}

/// Validates a probability vector, renormalizing within tolerance.
pub fn probability_vector(field: &str, v: &[f64]) -> Result<Vec<f64>> {
    let m = Matrix::from_rows(field, &[v.to_vec()], v.len())?;
    Ok(normalize_rows(field, m)?.data)
}

/// Boolean zero/positive pattern of a square matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportPattern {
    dim: usize,
    cells: Vec<bool>,
}

impl SupportPattern {
    pub fn of(m: &Matrix) -> Self {
        SupportPattern {
            dim: m.rows(),
            cells: m.as_slice().iter().map(|&x| x > 0.0).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> bool {
        self.cells[s * self.dim + t]
    }

    pub fn row(&self, s: usize) -> &[bool] {
        &self.cells[s * self.dim..(s + 1) * self.dim]
    }

    /// Boolean product: `(s,t)` is set iff some `u` has `self(s,u) && other(u,t)`.
    pub fn compose(&self, other: &SupportPattern) -> SupportPattern {
        let d = self.dim;
        let mut cells = vec![false; d * d];
        for s in 0..d {
            for u in 0..d {
                if !self.get(s, u) {
                    continue;
                }
                for t in 0..d {
                    cells[s * d + t] |= other.get(u, t);
                }
            }
        }
        SupportPattern { dim: d, cells }
    }

    pub fn all(&self) -> bool {
        self.cells.iter().all(|&b| b)
    }

    /// Successor set of `states` in one step.
    pub fn step(&self, states: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.dim];
        for (s, _) in states.iter().enumerate().filter(|(_, &on)| on) {
            for (o, &b) in out.iter_mut().zip(self.row(s)) {
                *o |= b;
            }
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in 0..self.dim {
            for t in 0..self.dim {
                out.push(if self.get(s, t) { '+' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(feature = "serde")]
mod serde_impls {
    use super::{Matrix, StochasticMatrix};
    use serde::ser::{Serialize, SerializeSeq, Serializer};

    impl Serialize for Matrix {
        fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
            let mut seq = serializer.serialize_seq(Some(self.rows()))?;
            for row in self.row_iter() {
                seq.serialize_element(row)?;
            }
            seq.end()
        }
    }

    impl Serialize for StochasticMatrix {
        fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
            self.as_matrix().serialize(serializer)
        }
    }
}
