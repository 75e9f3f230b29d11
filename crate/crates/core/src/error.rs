use alloc::string::String;
use core::fmt;

use crate::rational::{fmt_rational, Rational};
use crate::word::Word;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Entries of a distribution (or a conditional slice) do not add up to one.
    SumNotOne { total: Rational },
    BadWordLength { expected: usize, found: usize },
    LetterOutOfRange { letter: usize, size: usize },
    NegativeProbability { word: Word },
    /// Zero-length words and `n = 0` are rejected everywhere.
    ZeroLength,
    NotFactored,
    DimensionMismatch(String),
    WordTooShort { length: usize, needed: usize },
    /// An enumeration would visit more items than the configured cap.
    CapExceeded { what: &'static str, cap: u64 },
    InconsistentDescriptor(String),
    EmptyClass,
    /// More than one unbalanced vertex: no word realizes the transitions.
    NoValidEnd,
    /// Two equivalent words carry different probabilities.
    NotExchangeable { first: Word, second: Word },
    /// Two equivalent (output, input) pairs carry different conditional probabilities.
    NotConditionallyExchangeable {
        first: (Word, Word),
        second: (Word, Word),
    },
    BadParams(String),
    KernelNotStationary,
    InvariantViolated(String),
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SumNotOne { total } => {
                write!(f, "entries sum to {} instead of 1", fmt_rational(total))
            }
            Error::BadWordLength { expected, found } => {
                write!(f, "word of length {found}, expected {expected}")
            }
            Error::LetterOutOfRange { letter, size } => {
                write!(f, "letter {letter} outside alphabet of size {size}")
            }
            Error::NegativeProbability { word } => write!(f, "negative probability at {word}"),
            Error::ZeroLength => f.write_str("word length n must be at least 1"),
            Error::NotFactored => f.write_str("alphabet is not a product alphabet"),
            Error::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            Error::WordTooShort { length, needed } => {
                write!(f, "word of length {length} is too short, need at least {needed}")
            }
            Error::CapExceeded { what, cap } => {
                write!(f, "{what} exceeds the enumeration cap of {cap}")
            }
            Error::InconsistentDescriptor(why) => write!(f, "inconsistent type descriptor: {why}"),
            Error::EmptyClass => f.write_str("type descriptor has an empty class"),
            Error::NoValidEnd => f.write_str("transition counts admit no end vertex"),
            Error::NotExchangeable { first, second } => write!(
                f,
                "distribution is not exchangeable: {first} and {second} are equivalent but differ"
            ),
            Error::NotConditionallyExchangeable { first, second } => write!(
                f,
                "conditional is not exchangeable: ({}|{}) and ({}|{}) are equivalent but differ",
                first.0, first.1, second.0, second.1
            ),
            Error::BadParams(why) => write!(f, "bad parameters: {why}"),
            Error::KernelNotStationary => {
                f.write_str("transition kernel does not leave the input law invariant")
            }
            Error::InvariantViolated(why) => write!(f, "invariant violated: {why}"),
            Error::Parse(why) => write!(f, "parse error: {why}"),
        }
    }
}

impl core::error::Error for Error {}
