//! Exact combinatorics and certified de Finetti reductions for partially
//! exchangeable probability distributions on finite alphabets.
//!
//! Everything in this crate is `no_std` + `alloc`: probabilities are exact
//! rationals, class sizes are exact integers, and the few irrational
//! quantities (square roots, `e`, `pi`) are carried by [`Interval`] values
//! with outward rounding so that every verdict is rigorous.
//!
//! Module map:
//!
//! * [`word`], [`dist`], [`interval`]: alphabets, words, exact finite
//!   distributions and interval scalars.
//! * [`relations`]: the exchangeable, Markov, `l`-Markov and product
//!   relations, their type descriptors and class sizes.
//! * [`graphs`]: directed multigraphs, arborescence counting and Eulerian
//!   walks.
//! * [`reduction`]: extreme distributions, empirical comparison
//!   distributions, pre-factor bounds and the flexible reduction certificate.
//! * [`mp`]: the measure-and-prepare map and its lambda matrix.
//! * [`conditional`]: conditional distributions and the universal conditional
//!   reduction.
//! * [`games`]: two-player non-local games and repeated-game bounds.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod combinatorics;
pub mod conditional;
pub mod dist;
pub mod error;
pub mod games;
pub mod graphs;
pub mod interval;
pub mod mp;
pub mod rational;
pub mod reduction;
pub mod relations;
pub mod word;

pub use dist::{ConditionalDistribution, FiniteDistribution, Verdict};
pub use error::{Error, Result};
pub use interval::{Interval, Precision};
pub use rational::Rational;
pub use relations::{ClassIndex, Relation, TypeDescriptor};
pub use word::{Alphabet, Word};

/// Default cap on `d^n` for paths that enumerate every word.
pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000_000;
