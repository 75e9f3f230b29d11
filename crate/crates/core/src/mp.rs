//! The measure-and-prepare map on exchangeable extremes.
//!
//! `MP(Q) = (n+d-1)!/n! * integral of F(Q, pi^n)^2 pi^n dpi` over the simplex,
//! with the unnormalized Dirichlet moments
//! `integral prod pi_i^{t_i} dpi = prod t_i! / (d-1+sum t)!`. On extremes this
//! gives `MP(Q_t) = sum_s lambda_st Q_s` with
//! `lambda_st = C(2n+d-1, n)^{-1} prod_i C(s_i+t_i, s_i)`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::combinatorics::{binomial, factorial, multinomial, Compositions};
use crate::dist::FiniteDistribution;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::rational::{from_biguint, Rational};
use crate::reduction::{alpha_analytic, alpha_tight};
use crate::relations::{Relation, TypeDescriptor};
use crate::word::Alphabet;

/// `prod t_i! / (d - 1 + sum t_i)!` with `d = t.len()`.
pub fn dirichlet_moment(t: &[u64]) -> Rational {
    let d = t.len() as u64;
    let numer = t.iter().fold(num_bigint::BigUint::one(), |acc, &k| acc * factorial(k));
    let total: u64 = t.iter().sum();
    from_biguint(&numer) / from_biguint(&factorial(d.saturating_sub(1) + total))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaMatrix {
    pub n: usize,
    pub d: usize,
    /// Exchangeable types in the order of [`Compositions`].
    pub types: Vec<Vec<u64>>,
    pub entries: Vec<Vec<Rational>>,
}

impl LambdaMatrix {
    pub fn position(&self, t: &[u64]) -> Option<usize> {
        self.types.iter().position(|s| s == t)
    }

    pub fn entry(&self, s: &[u64], t: &[u64]) -> Option<&Rational> {
        Some(&self.entries[self.position(s)?][self.position(t)?])
    }

    pub fn is_symmetric(&self) -> bool {
        let k = self.types.len();
        (0..k).all(|i| (0..i).all(|j| self.entries[i][j] == self.entries[j][i]))
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        let one = Rational::one();
        let k = self.types.len();
        let rows = self.entries.iter().all(|row| row.iter().sum::<Rational>() == one);
        let cols = (0..k).all(|j| self.entries.iter().map(|row| &row[j]).sum::<Rational>() == one);
        rows && cols
    }
}

pub fn lambda_entry(s: &[u64], t: &[u64]) -> Rational {
    let n: u64 = t.iter().sum();
    let d = t.len() as u64;
    let numer = s.iter().zip(t).fold(num_bigint::BigUint::one(), |acc, (&a, &b)| acc * binomial(a + b, a));
    from_biguint(&numer) / from_biguint(&binomial(2 * n + d - 1, n))
}

/// The exact `lambda` matrix; symmetry and bistochasticity are checked.
pub fn lambda_matrix(n: usize, d: usize) -> Result<LambdaMatrix> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    if d == 0 {
        return Err(Error::BadParams("alphabet size must be at least 1".into()));
    }
    let types: Vec<Vec<u64>> = Compositions::new(n as u64, d).collect();
    let entries = types.iter().map(|s| types.iter().map(|t| lambda_entry(s, t)).collect()).collect();
    let m = LambdaMatrix { n, d, types, entries };
    if !m.is_symmetric() {
        return Err(Error::InvariantViolated("lambda matrix is not symmetric".into()));
    }
    if !m.is_doubly_stochastic() {
        return Err(Error::InvariantViolated("lambda matrix is not doubly stochastic".into()));
    }
    Ok(m)
}

/// `MP(Q_t)` at any word of type `s`, from the Dirichlet integral.
pub fn mp_point_value(t: &[u64], s: &[u64]) -> Rational {
    let n: u64 = t.iter().sum();
    let d = t.len() as u64;
    let prefactor = from_biguint(&factorial(n + d - 1)) / from_biguint(&factorial(n));
    let joint: Vec<u64> = s.iter().zip(t).map(|(a, b)| a + b).collect();
    prefactor * from_biguint(&multinomial(t)) * dirichlet_moment(&joint)
}

/// `MP(Q_t)` as a distribution on `V^n`.
pub fn mp_of_extreme(t: &[u64], n: usize, cap: u64) -> Result<FiniteDistribution> {
    if t.iter().sum::<u64>() != n as u64 || t.is_empty() {
        return Err(Error::InconsistentDescriptor("type does not describe words of length n".into()));
    }
    let d = t.len();
    let alphabet = Alphabet::new(d)?;
    let mut cache: BTreeMap<Vec<u64>, Rational> = BTreeMap::new();
    let mut entries = BTreeMap::new();
    for word in alphabet.words(n, cap)? {
        let mut s = alloc::vec![0u64; d];
        for &l in word.letters() {
            s[l] += 1;
        }
        let v = cache.entry(s.clone()).or_insert_with(|| mp_point_value(t, &s)).clone();
        if !v.is_zero() {
            entries.insert(word, v);
        }
    }
    let total: Rational = entries.values().sum();
    if !total.is_one() {
        return Err(Error::SumNotOne { total });
    }
    crate::dist::make_distribution(alphabet, n, entries)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaBound {
    pub n: usize,
    pub d: usize,
    /// `max_s 1 / lambda_ss`, over every integer type.
    pub exact: Rational,
    pub maximizers: Vec<Vec<u64>>,
    /// `C(2n+d-1, n) C(2n/d, n/d)^{-d}`, defined only when `d` divides `n`.
    pub analytic: Option<Interval>,
}

pub fn beta_bound(n: usize, d: usize, bits: u32) -> Result<BetaBound> {
    let m = lambda_matrix(n, d)?;
    let inverses: Vec<Rational> = (0..m.types.len()).map(|i| m.entries[i][i].recip()).collect();
    let exact = inverses.iter().max().cloned().unwrap_or_else(Rational::one);
    let maximizers = m
        .types
        .iter()
        .zip(&inverses)
        .filter(|(_, v)| **v == exact)
        .map(|(t, _)| t.clone())
        .collect();
    let analytic = (n % d == 0).then(|| {
        let (n, d) = (n as u64, d as u64);
        let flat = binomial(2 * n / d, n / d);
        let denom = (0..d).fold(num_bigint::BigUint::one(), |acc, _| acc * &flat);
        Interval::from_rational(&(from_biguint(&binomial(2 * n + d - 1, n)) / from_biguint(&denom)), bits)
    });
    Ok(BetaBound { n, d, exact, maximizers, analytic })
}

/// Which constant puts `Q_t` in the cone of i.i.d. mixtures more cheaply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeRoute {
    MeasureAndPrepare,
    Alpha,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeComparison {
    /// `Q_t <= lambda_tt^{-1} MP(Q_t)`.
    pub lambda_inverse: Rational,
    /// `Q_t <= alpha_tight pi_t^n`.
    pub alpha_tight: Rational,
    /// `Q_t <= alpha(n) pi_t^n` by the closed formula.
    pub alpha_analytic: Interval,
    pub smaller: ConeRoute,
}

pub fn cone_comparison(t: &[u64], bits: u32) -> Result<ConeComparison> {
    let n = t.iter().sum::<u64>() as usize;
    let descriptor = TypeDescriptor::Exchangeable { counts: t.to_vec() };
    let lambda_inverse = lambda_entry(t, t).recip();
    let tight = alpha_tight(&descriptor, n)?;
    let alpha = alpha_analytic(&Relation::Exchangeable, &Alphabet::new(t.len())?, n, bits)?.value;
    let smaller = match alpha.cmp_rational(&lambda_inverse) {
        Some(core::cmp::Ordering::Less) => ConeRoute::Alpha,
        Some(_) => ConeRoute::MeasureAndPrepare,
        None => ConeRoute::Undecided,
    };
    Ok(ConeComparison { lambda_inverse, alpha_tight: tight, alpha_analytic: alpha, smaller })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::reduction::{fidelity_squared, uniform_class_dist};

    #[test]
    fn moments() {
        assert_eq!(dirichlet_moment(&[1, 1]), rat(1, 6));
        assert_eq!(dirichlet_moment(&[0, 0]), rat(1, 1));
        assert_eq!(dirichlet_moment(&[4, 0, 0]), rat(24, 720));
    }

    #[test]
    fn small_lambda_matrices() {
        let m = lambda_matrix(1, 2).unwrap();
        assert_eq!(m.types, alloc::vec![alloc::vec![1, 0], alloc::vec![0, 1]]);
        assert_eq!(m.entries[0], alloc::vec![rat(2, 3), rat(1, 3)]);
        assert_eq!(lambda_matrix(5, 1).unwrap().entries, alloc::vec![alloc::vec![rat(1, 1)]]);
        assert!(lambda_matrix(3, 3).unwrap().is_doubly_stochastic());
    }

    #[test]
    fn mp_matches_lambda_route() {
        let mp = mp_of_extreme(&[1, 0], 1, 100).unwrap();
        assert_eq!(mp.prob(&crate::Word(alloc::vec![0])), rat(2, 3));
        for n in 1..=4usize {
            let m = lambda_matrix(n, 2).unwrap();
            for t in &m.types {
                let mp = mp_of_extreme(t, n, 1000).unwrap();
                for s in &m.types {
                    let q = uniform_class_dist(&TypeDescriptor::Exchangeable { counts: s.clone() }, n, 1000).unwrap();
                    let f = fidelity_squared(&q, &mp, 128).unwrap();
                    assert!(f.is_exact(), "{f} {s:?} {t:?} {n}");
                    assert_eq!(&f.lo(), m.entry(s, t).unwrap());
                }
            }
        }
        let single = mp_of_extreme(&[3], 3, 100).unwrap();
        assert_eq!(single.support_len(), 1);
    }

    #[test]
    fn beta_values() {
        let b = beta_bound(2, 2, 128).unwrap();
        assert_eq!(b.exact, rat(5, 2));
        assert_eq!(b.maximizers, alloc::vec![alloc::vec![1, 1]]);
        assert!(b.analytic.unwrap().lo() >= b.exact);
        assert_eq!(beta_bound(3, 1, 128).unwrap().exact, rat(1, 1));
        assert!(beta_bound(3, 2, 128).unwrap().analytic.is_none());
    }

    #[test]
    fn cone_routes() {
        let c = cone_comparison(&[2, 2], 128).unwrap();
        assert_eq!(c.lambda_inverse, lambda_entry(&[2, 2], &[2, 2]).recip());
        assert_eq!(c.alpha_tight, rat(8, 3));
        assert_ne!(c.smaller, ConeRoute::Undecided);
    }
}
