use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix or vector has the wrong number of rows or columns.
    Shape {
        field: String,
        expected: usize,
        found: usize,
    },
    NonFinite {
        field: String,
        row: usize,
        col: usize,
    },
    Negative {
        field: String,
        row: usize,
        col: usize,
        value: f64,
    },
    RowSum {
        field: String,
        row: usize,
        sum: f64,
    },
    EmptyAlphabet,
    DuplicateSymbol(String),
    UnknownSymbol(String),
    InvalidTail(String),
    InvalidArgument(String),
    /// Two measures do not live on the same space.
    Incompatible(String),
    /// A path that is possible under the first measure is null under the second.
    NotLocallyAbsolutelyContinuous { level: usize },
    NullEvent,
    InvalidEvent(String),
    /// Brute-force enumeration would exceed the path budget.
    GuardExceeded { paths: f64, limit: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape {
                field,
                expected,
                found,
            } => write!(f, "{field}: expected length {expected}, found {found}"),
            Error::NonFinite { field, row, col } => {
                write!(f, "{field}: entry ({row}, {col}) is not a finite number")
            }
            Error::Negative {
                field,
                row,
                col,
                value,
            } => write!(f, "{field}: entry ({row}, {col}) is negative ({value})"),
            Error::RowSum { field, row, sum } => {
                write!(f, "{field}: row {row} sums to {sum}, expected 1")
            }
            Error::EmptyAlphabet => f.write_str("alphabet: at least one symbol is required"),
            Error::DuplicateSymbol(s) => write!(f, "alphabet: duplicate symbol {s:?}"),
            Error::UnknownSymbol(s) => write!(f, "unknown symbol {s:?}"),
            Error::InvalidTail(msg) => write!(f, "transitions.tail: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Incompatible(msg) => write!(f, "incompatible measures: {msg}"),
            Error::NotLocallyAbsolutelyContinuous { level } => write!(
                f,
                "not locally absolutely continuous: a path of length {level} is null under the reference measure"
            ),
            Error::NullEvent => f.write_str("conditioning on null event"),
            Error::InvalidEvent(msg) => write!(f, "invalid cylinder event: {msg}"),
            Error::GuardExceeded { paths, limit } => write!(
                f,
                "enumeration of {paths:.3e} paths exceeds the limit of {limit}"
            ),
        }
    }
}

impl core::error::Error for Error {}
