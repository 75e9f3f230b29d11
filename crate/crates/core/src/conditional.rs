//! Conditional distributions `P_{A^n|X^n}` and universal conditional reductions.
//!
//! Joint letters live on the product alphabet `A x X` with the output factor
//! first: the pair `(a, x)` is the letter `a * |X| + x`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::dist::{make_distribution, ConditionalDistribution, FiniteDistribution, Verdict};
use crate::error::{Error, Result};
use crate::interval::{Interval, Precision};
use crate::rational::{from_biguint, from_u64, Rational};
use crate::reduction::{alpha_analytic, alpha_tight, decompose, empirical_pi, uniform_class_dist, AlphaBound};
use crate::relations::{class_members, class_size, enumerate_types, representative, type_of, Relation, TypeDescriptor};
use crate::word::{Alphabet, Word};

pub fn joint_alphabet(d_a: usize, d_x: usize) -> Result<Alphabet> {
    Alphabet::product(&[d_a, d_x])
}

fn split_joint(alphabet: &Alphabet) -> Result<(usize, usize)> {
    match alphabet.factors() {
        Some([d_a, d_x]) => Ok((*d_a, *d_x)),
        Some(_) => Err(Error::DimensionMismatch("joint alphabet must have two factors".into())),
        None => Err(Error::NotFactored),
    }
}

/// `P(a|x) = P(a, x) / P_X(x)` for every `x` with `P_X(x) > 0`.
pub fn condition(p: &FiniteDistribution) -> Result<ConditionalDistribution> {
    let alphabet = p.alphabet();
    let (d_a, d_x) = split_joint(alphabet)?;
    let n = p.n();
    let mut joint: BTreeMap<Word, Vec<(Word, Rational)>> = BTreeMap::new();
    let mut marginal: BTreeMap<Word, Rational> = BTreeMap::new();
    for (w, pv) in p.iter() {
        let a = w.project(alphabet, 0)?;
        let x = w.project(alphabet, 1)?;
        *marginal.entry(x.clone()).or_insert_with(Rational::zero) += pv;
        joint.entry(x).or_default().push((a, pv.clone()));
    }
    let outputs = Alphabet::new(d_a)?;
    let mut slices = BTreeMap::new();
    for (x, entries) in joint {
        let px = &marginal[&x];
        let slice = make_distribution(outputs.clone(), n, entries.into_iter().map(|(a, v)| (a, v / px)))?;
        slices.insert(x, slice);
    }
    ConditionalDistribution::new(Alphabet::new(d_x)?, outputs, n, slices)
}

/// `P' = Q_X P_{A|X}` with `Q_X` uniform on the inputs that carry a slice.
///
/// The conditional must be constant on joint classes, and the inputs with a
/// slice must be a union of input classes.
pub fn lift_conditional(pc: &ConditionalDistribution, relation: &Relation, cap: u64) -> Result<FiniteDistribution> {
    if matches!(relation, Relation::Product(_)) {
        return Err(Error::BadParams("conditional lifting takes a single relation on A x X".into()));
    }
    let n = pc.n();
    let d_a = pc.outputs().size();
    let d_x = pc.inputs().size();
    let joint = joint_alphabet(d_a, d_x)?;
    let mut seen: BTreeMap<TypeDescriptor, (Word, Word, Option<Rational>)> = BTreeMap::new();
    for w in joint.words(n, cap)? {
        let a = w.project(&joint, 0)?;
        let x = w.project(&joint, 1)?;
        let value = pc.prob(&a, &x);
        let t = type_of(&w, relation, &joint)?;
        match seen.get(&t) {
            None => {
                seen.insert(t, (a, x, value));
            }
            Some((a0, x0, v0)) => match (v0, &value) {
                (Some(v0), Some(v)) if v0 != v => {
                    return Err(Error::NotConditionallyExchangeable {
                        first: (a0.clone(), x0.clone()),
                        second: (a, x),
                    })
                }
                (Some(_), None) | (None, Some(_)) => {
                    let (have, missing) = if value.is_some() { (&x, x0) } else { (x0, &x) };
                    return Err(Error::BadParams(format!(
                        "input {have} has a conditional but the equivalent input {missing} does not"
                    )));
                }
                _ => {}
            },
        }
    }
    let present = pc.slices().count();
    if present == 0 {
        return Err(Error::EmptyClass);
    }
    let weight = Rational::one() / from_u64(present as u64);
    let mut entries = Vec::new();
    for (x, slice) in pc.slices() {
        for (a, v) in slice.iter() {
            entries.push((Word::zip(&joint, &[a, x])?, v * &weight));
        }
    }
    make_distribution(joint, n, entries)
}

/// The input type whose class carries the `X`-marginal of the exchangeable
/// extreme `Q_joint`.
pub fn marginal_type(joint: &TypeDescriptor, d_a: usize, d_x: usize) -> Result<TypeDescriptor> {
    let TypeDescriptor::Exchangeable { counts } = joint else {
        return Err(Error::InconsistentDescriptor("marginal types are defined for exchangeable joints".into()));
    };
    if counts.len() != d_a * d_x {
        return Err(Error::DimensionMismatch(format!("{} counts for |A||X| = {}", counts.len(), d_a * d_x)));
    }
    let mut out = vec![0u64; d_x];
    for (letter, &c) in counts.iter().enumerate() {
        out[letter % d_x] += c;
    }
    Ok(TypeDescriptor::Exchangeable { counts: out })
}

/// Whether the `X`-marginal of `Q_joint` is the extreme on `marginal_type`.
pub fn marginal_is_extreme(joint: &TypeDescriptor, d_a: usize, d_x: usize, n: usize, cap: u64) -> Result<bool> {
    let marginal = uniform_joint(joint, d_a, d_x, n, cap)?.marginal(1)?;
    let expected = uniform_class_dist(&marginal_type(joint, d_a, d_x)?, n, cap)?;
    Ok(marginal == expected)
}

/// Joint descriptors carry a flat alphabet; marginals need the factored one.
fn on_joint(flat: &FiniteDistribution, d_a: usize, d_x: usize) -> Result<FiniteDistribution> {
    let n = flat.n();
    make_distribution(joint_alphabet(d_a, d_x)?, n, flat.iter().map(|(w, p)| (w.clone(), p.clone())))
}

fn uniform_joint(joint: &TypeDescriptor, d_a: usize, d_x: usize, n: usize, cap: u64) -> Result<FiniteDistribution> {
    on_joint(&uniform_class_dist(joint, n, cap)?, d_a, d_x)
}

/// Why Markov marginals of extremes need not be extreme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleReport {
    /// The joint sequence `((1,1),(1,2),(2,1),(2,1))`, as `A x X` letters.
    pub joint: Word,
    pub joint_class_size: BigUint,
    /// `X`-marginal support: `(1,2,1,1)`.
    pub marginal: Word,
    /// The other member of its Markov class: `(1,1,2,1)`.
    pub partner: Word,
    pub markov_class: Vec<Word>,
    /// Marginal mass at `marginal` and at `partner`.
    pub masses: (Rational, Rational),
    pub marginal_is_markov_exchangeable: bool,
    /// The exchangeable extreme through the same sequence has an extreme marginal.
    pub exchangeable_marginal_is_extreme: bool,
}

pub fn markov_marginal_counterexample(cap: u64) -> Result<CounterexampleReport> {
    let joint_ab = joint_alphabet(2, 2)?;
    let a = Word(vec![0, 0, 1, 1]);
    let x = Word(vec![0, 1, 0, 0]);
    let joint = Word::zip(&joint_ab, &[&a, &x])?;
    let tau = type_of(&joint, &Relation::Markov, &joint_ab)?;
    let marginal = uniform_joint(&tau, 2, 2, 4, cap)?.marginal(1)?;
    let x_ab = Alphabet::new(2)?;
    let x_type = type_of(&x, &Relation::Markov, &x_ab)?;
    let markov_class = class_members(&x_type, 4, cap)?;
    let partner = markov_class.iter().find(|w| **w != x).cloned().ok_or(Error::EmptyClass)?;
    let marginal_is_markov_exchangeable = decompose(&marginal, &Relation::Markov, cap).is_ok();
    let exch = type_of(&joint, &Relation::Exchangeable, &joint_ab)?;
    Ok(CounterexampleReport {
        joint_class_size: class_size(&tau, 4)?,
        masses: (marginal.prob(&x), marginal.prob(&partner)),
        marginal: x,
        partner,
        markov_class,
        joint,
        marginal_is_markov_exchangeable,
        exchangeable_marginal_is_extreme: marginal_is_extreme(&exch, 2, 2, 4, cap)?,
    })
}

/// `max pi_{k,X} / Q_{k,X}` over the support of `Q_{k,X}`, by enumeration.
/// Works for any single relation on the joint alphabet.
pub fn alpha_prime_tight(joint: &TypeDescriptor, d_a: usize, d_x: usize, n: usize, cap: u64) -> Result<Rational> {
    let q_x = uniform_joint(joint, d_a, d_x, n, cap)?.marginal(1)?;
    let pi_x = on_joint(&empirical_pi(joint, n)?.materialize(cap)?, d_a, d_x)?.marginal(1)?;
    let mut best = Rational::zero();
    for (x, qv) in q_x.iter() {
        let ratio = pi_x.prob(x) / qv;
        if ratio > best {
            best = ratio;
        }
    }
    Ok(best)
}

/// Closed form for exchangeable joints: `|C_X| pi_X^n(x)` on the marginal class.
pub fn alpha_prime_exchangeable(joint: &TypeDescriptor, d_a: usize, d_x: usize) -> Result<Rational> {
    let x_type = marginal_type(joint, d_a, d_x)?;
    let TypeDescriptor::Exchangeable { counts } = &x_type else { unreachable!() };
    let n: u64 = counts.iter().sum();
    let mut pi = Rational::one();
    for &c in counts {
        for _ in 0..c {
            pi *= Rational::new(c.into(), n.into());
        }
    }
    Ok(from_biguint(&class_size(&x_type, n as usize)?) * pi)
}

/// `sum_k pi_{k,A|X}(a|x)` over all exchangeable joint types `k`, a term being
/// zero when `pi_{k,X}(x) = 0`.
fn conditional_mixture(types: &[Vec<u64>], a: &Word, x: &Word, d_x: usize) -> Rational {
    let mut total = Rational::zero();
    for counts in types {
        let mut p = Rational::one();
        for (&ai, &xi) in a.letters().iter().zip(x.letters()) {
            let tx: u64 = counts.iter().skip(xi).step_by(d_x).sum();
            let t = counts[ai * d_x + xi];
            if t == 0 {
                p = Rational::zero();
                break;
            }
            p *= Rational::new(t.into(), tx.into());
        }
        total += p;
    }
    total
}

/// One joint class of the universal right-hand side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhsEntry {
    pub descriptor: TypeDescriptor,
    pub a: Word,
    pub x: Word,
    /// `sum_k pi_{k,A|X}(a|x)`.
    pub mixture: Rational,
}

/// The `P`-independent part of the conditional bound, per joint class.
pub fn conditional_rhs_table(d_a: usize, d_x: usize, n: usize) -> Result<Vec<RhsEntry>> {
    let joint = joint_alphabet(d_a, d_x)?;
    let flat = Alphabet::new(d_a * d_x)?;
    let index = enumerate_types(&Relation::Exchangeable, &flat, n)?;
    let types: Vec<Vec<u64>> = index
        .classes
        .iter()
        .map(|c| match &c.descriptor {
            TypeDescriptor::Exchangeable { counts } => counts.clone(),
            _ => unreachable!(),
        })
        .collect();
    index
        .classes
        .iter()
        .map(|c| {
            let rep = representative(&c.descriptor, n)?;
            let a = rep.project(&joint, 0)?;
            let x = rep.project(&joint, 1)?;
            let mixture = conditional_mixture(&types, &a, &x, d_x);
            Ok(RhsEntry { descriptor: c.descriptor.clone(), a, x, mixture })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConditionalVerdict {
    Holds,
    Fails { margin: Rational },
    Inconclusive,
    /// `P_X(x) = 0`: no conditional to bound.
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalClassRecord {
    pub descriptor: TypeDescriptor,
    pub a: Word,
    pub x: Word,
    /// `P(a|x)`, absent when `P_X(x) = 0`.
    pub conditional: Option<Rational>,
    pub mixture: Rational,
    /// `alpha_effective * alpha' * mixture`.
    pub rhs: Interval,
    pub verdict: ConditionalVerdict,
    pub analytic_verdict: ConditionalVerdict,
    /// Tight `alpha'_k` of this joint class.
    pub alpha_prime_tight: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalCertificate {
    pub d_a: usize,
    pub d_x: usize,
    pub n: usize,
    pub classes: Vec<ConditionalClassRecord>,
    pub alpha: AlphaBound,
    pub alpha_tight_max: Rational,
    pub alpha_effective: Interval,
    /// The constant used for the marginal ratio.
    pub alpha_prime: Rational,
    pub alpha_prime_tight_max: Rational,
    /// `N * alpha_effective * alpha'`.
    pub prefactor: Interval,
    /// `N * alpha(n) * alpha'`.
    pub analytic_prefactor: Interval,
    pub verdict: Verdict,
    pub analytic_verdict: Verdict,
    /// The right-hand side does not depend on `P`.
    pub universal: bool,
    pub bits: u32,
}

impl ConditionalCertificate {
    /// The `P`-independent right-hand side, one entry per joint class.
    pub fn rhs(&self) -> Vec<(TypeDescriptor, Interval)> {
        self.classes.iter().map(|c| (c.descriptor.clone(), c.rhs.clone())).collect()
    }
}

fn conditional_compare(value: &Option<Rational>, bound: &Interval) -> ConditionalVerdict {
    match value {
        None => ConditionalVerdict::Unsupported,
        Some(v) if v.is_zero() || v <= &bound.lo() => ConditionalVerdict::Holds,
        Some(v) if v > &bound.hi() => ConditionalVerdict::Fails { margin: v - bound.hi() },
        Some(_) => ConditionalVerdict::Inconclusive,
    }
}

fn fold_verdict(acc: Verdict, v: &ConditionalVerdict, word: &Word) -> Verdict {
    acc.and(match v {
        ConditionalVerdict::Fails { margin } => Verdict::Fails { word: word.clone(), margin: margin.clone() },
        ConditionalVerdict::Inconclusive => Verdict::Inconclusive { word: word.clone() },
        _ => Verdict::Holds,
    })
}

/// Checks `P(a|x) <= N alpha alpha' sum_k (1/N) pi_{k,A|X}(a|x)` for an
/// exchangeable joint `P` on `(A x X)^n`, one representative per joint class.
///
/// `alpha' = 1`. The constant `alpha` is `max(alpha(n), max_k alpha_tight_k)`;
/// the closed-form `alpha(n)` alone is checked in `analytic_verdict`.
pub fn verify_conditional_reduction(p: &FiniteDistribution, precision: Precision, cap: u64) -> Result<ConditionalCertificate> {
    let (d_a, d_x) = split_joint(p.alphabet())?;
    let n = p.n();
    let flat = Alphabet::new(d_a * d_x)?;
    let flat_p = make_distribution(flat.clone(), n, p.iter().map(|(w, v)| (w.clone(), v.clone())))?;
    let dec = decompose(&flat_p, &Relation::Exchangeable, cap)?;
    let table = conditional_rhs_table(d_a, d_x, n)?;
    let pc = condition(p)?;
    let tights = dec
        .index
        .classes
        .iter()
        .map(|c| alpha_tight(&c.descriptor, n))
        .collect::<Result<Vec<_>>>()?;
    let alpha_tight_max = tights.iter().max().cloned().unwrap_or_else(Rational::one);
    let primes = table
        .iter()
        .map(|e| alpha_prime_exchangeable(&e.descriptor, d_a, d_x))
        .collect::<Result<Vec<_>>>()?;
    let alpha_prime_tight_max = primes.iter().max().cloned().unwrap_or_else(Rational::one);
    let alpha_prime = Rational::one();

    let mut prec = precision;
    loop {
        let bits = prec.bits;
        let alpha = alpha_analytic(&Relation::Exchangeable, &flat, n, bits)?;
        let alpha_effective = alpha.value.max(&Interval::from_rational(&alpha_tight_max, bits));
        let mut verdict = Verdict::Holds;
        let mut analytic_verdict = Verdict::Holds;
        let mut classes = Vec::with_capacity(table.len());
        for (entry, prime) in table.iter().zip(&primes) {
            let conditional = pc.prob(&entry.a, &entry.x);
            let rhs = alpha_effective.mul_rational(&(&alpha_prime * &entry.mixture));
            let analytic_rhs = alpha.value.mul_rational(&(&alpha_prime * &entry.mixture));
            let v = conditional_compare(&conditional, &rhs);
            let av = conditional_compare(&conditional, &analytic_rhs);
            let word = Word::zip(p.alphabet(), &[&entry.a, &entry.x])?;
            verdict = fold_verdict(verdict, &v, &word);
            analytic_verdict = fold_verdict(analytic_verdict, &av, &word);
            classes.push(ConditionalClassRecord {
                descriptor: entry.descriptor.clone(),
                a: entry.a.clone(),
                x: entry.x.clone(),
                conditional,
                mixture: entry.mixture.clone(),
                rhs,
                verdict: v,
                analytic_verdict: av,
                alpha_prime_tight: prime.clone(),
            });
        }
        let undecided = matches!(verdict, Verdict::Inconclusive { .. })
            || matches!(analytic_verdict, Verdict::Inconclusive { .. });
        if let (true, Some(next)) = (undecided, prec.doubled()) {
            prec = next;
            continue;
        }
        let big_n = Interval::from_rational(&from_u64(table.len() as u64), bits);
        return Ok(ConditionalCertificate {
            d_a,
            d_x,
            n,
            classes,
            prefactor: (&big_n * &alpha_effective).mul_rational(&alpha_prime),
            analytic_prefactor: (&big_n * &alpha.value).mul_rational(&alpha_prime),
            alpha,
            alpha_tight_max,
            alpha_effective,
            alpha_prime,
            alpha_prime_tight_max,
            verdict,
            analytic_verdict,
            universal: true,
            bits,
        });
    }
}

/// Lifts a conditional with uniform input weights, then certifies it.
pub fn verify_conditional_reduction_from(
    pc: &ConditionalDistribution,
    precision: Precision,
    cap: u64,
) -> Result<ConditionalCertificate> {
    let joint = lift_conditional(pc, &Relation::Exchangeable, cap)?;
    verify_conditional_reduction(&joint, precision, cap)
}
