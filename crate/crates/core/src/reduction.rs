//! Extreme distributions, empirical comparison distributions, pre-factors and
//! the flexible de Finetti reduction certificate.
//!
//! For a `~`-exchangeable `P` with class weights `mu_k` and comparison
//! distributions `pi_k` satisfying `Q_k <= alpha * pi_k`,
//!
//! ```text
//! P <= N * alpha^2 * sum_k (1/N) F(P, pi_k)^2 pi_k
//! ```
//!
//! Both sides are constant on classes, so the certificate evaluates them on
//! one representative per class.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::dist::{FiniteDistribution, Verdict};
use crate::error::{Error, Result};
use crate::interval::{Interval, Precision};
use crate::rational::{exact_sqrt, from_biguint, from_u64, Rational};
use crate::relations::{
    class_members, class_size, enumerate_types, is_nonempty, representative, type_of, ClassIndex,
    Relation, TypeDescriptor,
};
use crate::word::{Alphabet, Word};

/// `Q_tau`: uniform on the class of `descriptor`.
pub fn uniform_class_dist(descriptor: &TypeDescriptor, n: usize, cap: u64) -> Result<FiniteDistribution> {
    if !is_nonempty(descriptor, n)? {
        return Err(Error::EmptyClass);
    }
    let members = class_members(descriptor, n, cap)?;
    FiniteDistribution::uniform_on(descriptor.alphabet()?, n, members)
}

/// The i.i.d., Markov, `l`-Markov or product law with empirical frequencies
/// read off a type.
///
/// Chain states that the type never leaves get the uniform row; such a state
/// can only be the last one visited by a class member, so the row never enters
/// a class-member probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmpiricalPi {
    Iid { alphabet: Alphabet, n: usize, freqs: Vec<Rational> },
    /// Starts at `initial` and draws each next letter from `kernel[state]`,
    /// the state being the last `ell` letters in mixed radix.
    Chain {
        alphabet: Alphabet,
        n: usize,
        ell: usize,
        initial: Vec<usize>,
        kernel: Vec<Vec<Rational>>,
        filled_rows: Vec<usize>,
    },
    Product { alphabet: Alphabet, n: usize, parts: Vec<EmpiricalPi> },
}

pub fn empirical_pi(descriptor: &TypeDescriptor, n: usize) -> Result<EmpiricalPi> {
    if !is_nonempty(descriptor, n)? {
        return Err(Error::EmptyClass);
    }
    let alphabet = descriptor.alphabet()?;
    Ok(match descriptor {
        TypeDescriptor::Exchangeable { counts } => EmpiricalPi::Iid {
            alphabet,
            n,
            freqs: counts.iter().map(|&c| Rational::new(c.into(), (n as u64).into())).collect(),
        },
        TypeDescriptor::Markov { start, transitions } => {
            let (kernel, filled_rows) = normalize_rows(transitions);
            EmpiricalPi::Chain { alphabet, n, ell: 1, initial: vec![*start], kernel, filled_rows }
        }
        TypeDescriptor::LMarkov { ell, d, initial, counts } => {
            let rows: Vec<Vec<u64>> = counts.chunks(*d).map(<[u64]>::to_vec).collect();
            let (kernel, filled_rows) = normalize_rows(&rows);
            EmpiricalPi::Chain { alphabet, n, ell: *ell, initial: initial.clone(), kernel, filled_rows }
        }
        TypeDescriptor::Product(parts) => EmpiricalPi::Product {
            alphabet,
            n,
            parts: parts.iter().map(|p| empirical_pi(p, n)).collect::<Result<_>>()?,
        },
    })
}

fn normalize_rows(rows: &[Vec<u64>]) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut filled = Vec::new();
    let kernel = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                filled.push(i);
                let p = Rational::new(BigUint::one().into(), (row.len() as u64).into());
                vec![p; row.len()]
            } else {
                row.iter().map(|&c| Rational::new(c.into(), total.into())).collect()
            }
        })
        .collect();
    (kernel, filled)
}

impl EmpiricalPi {
    pub fn alphabet(&self) -> &Alphabet {
        match self {
            EmpiricalPi::Iid { alphabet, .. }
            | EmpiricalPi::Chain { alphabet, .. }
            | EmpiricalPi::Product { alphabet, .. } => alphabet,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            EmpiricalPi::Iid { n, .. } | EmpiricalPi::Chain { n, .. } | EmpiricalPi::Product { n, .. } => *n,
        }
    }

    /// Exact probability of a word.
    pub fn probability(&self, word: &Word) -> Result<Rational> {
        self.alphabet().check_word(word, self.n())?;
        Ok(self.probability_unchecked(word))
    }

    fn probability_unchecked(&self, word: &Word) -> Rational {
        match self {
            EmpiricalPi::Iid { freqs, .. } => {
                let mut p = Rational::one();
                for &l in word.letters() {
                    p *= &freqs[l];
                    if p.is_zero() {
                        break;
                    }
                }
                p
            }
            EmpiricalPi::Chain { alphabet, ell, initial, kernel, .. } => {
                let letters = word.letters();
                if letters[..*ell] != initial[..] {
                    return Rational::zero();
                }
                let d = alphabet.size();
                let nodes = kernel.len();
                let mut state = initial.iter().fold(0, |acc, &l| acc * d + l);
                let mut p = Rational::one();
                for &l in &letters[*ell..] {
                    p *= &kernel[state][l];
                    if p.is_zero() {
                        break;
                    }
                    state = (state * d + l) % nodes;
                }
                p
            }
            EmpiricalPi::Product { alphabet, parts, .. } => {
                let mut p = Rational::one();
                for (i, part) in parts.iter().enumerate() {
                    let component = word.project(alphabet, i).expect("validated product word");
                    p *= part.probability_unchecked(&component);
                }
                p
            }
        }
    }

    pub fn materialize(&self, cap: u64) -> Result<FiniteDistribution> {
        let alphabet = self.alphabet().clone();
        let n = self.n();
        let mut entries = BTreeMap::new();
        for word in alphabet.words(n, cap)? {
            let p = self.probability_unchecked(&word);
            if !p.is_zero() {
                entries.insert(word, p);
            }
        }
        Ok(FiniteDistribution::from_parts(alphabet, n, entries))
    }
}

/// `alpha(n)` from the closed formulas together with the degree of the
/// resulting polynomial pre-factor `N * alpha(n)^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaBound {
    pub relation: Relation,
    pub n: usize,
    pub d: usize,
    pub value: Interval,
    pub degree: u64,
}

pub fn alpha_analytic(relation: &Relation, alphabet: &Alphabet, n: usize, bits: u32) -> Result<AlphaBound> {
    relation.validate(alphabet)?;
    let (value, degree) = alpha_value(relation, alphabet, n, bits)?;
    Ok(AlphaBound { relation: relation.clone(), n, d: alphabet.size(), value, degree })
}

fn alpha_value(relation: &Relation, alphabet: &Alphabet, n: usize, bits: u32) -> Result<(Interval, u64)> {
    let d = alphabet.size() as u64;
    let too_short = |needed: usize| Error::BadParams(alloc::format!("n = {n} but the bound needs n >= {needed}"));
    match relation {
        Relation::Exchangeable => {
            if n == 0 {
                return Err(too_short(1));
            }
            let e = Interval::e(bits).powi(d);
            let grow = Interval::from_integer(n as i64, bits).pow_half(d - 1);
            let two_pi = Interval::pi(bits) * Interval::from_integer(2, bits);
            let norm = (two_pi * Interval::from_integer(d as i64, bits).powi(d)).sqrt();
            Ok((e * grow / norm, 2 * (d - 1)))
        }
        Relation::Markov => chain_alpha(d, 1, n, bits).ok_or_else(|| too_short(2)),
        Relation::LMarkov(ell) => chain_alpha(d, *ell as u64, n, bits).ok_or_else(|| too_short(ell + 1)),
        Relation::Product(parts) => {
            let mut value = Interval::one(bits);
            let mut degree = 0;
            for (i, part) in parts.iter().enumerate() {
                let (v, k) = alpha_value(part, &alphabet.factor(i)?, n, bits)?;
                value = value * v;
                degree += k;
            }
            Ok((value, degree))
        }
    }
}

/// `(e^d / (sqrt(2 pi) d^(((l+1)d+l)/2)))^K (n-l)^(K(d+1)/2)` with `K = d^l`.
fn chain_alpha(d: u64, ell: u64, n: usize, bits: u32) -> Option<(Interval, u64)> {
    let n = n as u64;
    if ell == 0 || n < ell + 1 {
        return None;
    }
    let k = d.checked_pow(u32::try_from(ell).ok()?)?;
    let e = Interval::e(bits).powi(d * k);
    let grow = Interval::from_integer((n - ell) as i64, bits).pow_half(k * (d + 1));
    let two_pi = Interval::pi(bits) * Interval::from_integer(2, bits);
    let norm = (two_pi.powi(k) * Interval::from_integer(d as i64, bits).powi(((ell + 1) * d + ell) * k)).sqrt();
    Some((e * grow / norm, k * (2 * d + 1) - 1))
}

/// `max_v Q_tau(v) / pi_tau(v) = 1 / (|C| pi_tau(v))` for any member `v`.
pub fn alpha_tight(descriptor: &TypeDescriptor, n: usize) -> Result<Rational> {
    let size = class_size(descriptor, n)?;
    if size.is_zero() {
        return Err(Error::EmptyClass);
    }
    let rep = representative(descriptor, n)?;
    let pi = empirical_pi(descriptor, n)?.probability(&rep)?;
    Ok(Rational::one() / (from_biguint(&size) * pi))
}

/// `(sum_i c_i sqrt(r_i))^2` for nonnegative `c_i`, `r_i`.
///
/// Exact whenever every radicand is a rational square, or all non-square
/// terms share one radicand and there is no square part.
pub fn square_of_root_sum<I>(terms: I, bits: u32) -> Interval
where
    I: IntoIterator<Item = (Rational, Rational)>,
{
    let mut rational_part = Rational::zero();
    let mut groups: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (c, r) in terms {
        if c.is_zero() || r.is_zero() {
            continue;
        }
        match exact_sqrt(&r) {
            Some(root) => rational_part += c * root,
            None => *groups.entry(r).or_insert_with(Rational::zero) += c,
        }
    }
    if groups.is_empty() {
        return Interval::from_rational(&(&rational_part * &rational_part), bits);
    }
    if rational_part.is_zero() && groups.len() == 1 {
        let (r, c) = groups.into_iter().next().expect("one group");
        return Interval::from_rational(&(&c * &c * r), bits);
    }
    let mut sum = Interval::from_rational(&rational_part, bits);
    for (r, c) in groups {
        sum = sum + Interval::from_rational(&r, bits).sqrt().mul_rational(&c);
    }
    &sum * &sum
}

/// `F(P, Q)^2 = (sum_z sqrt(P(z) Q(z)))^2`.
pub fn fidelity_squared(p: &FiniteDistribution, q: &FiniteDistribution, bits: u32) -> Result<Interval> {
    p.same_space(q)?;
    let terms = p.iter().filter_map(|(w, pv)| {
        let qv = q.prob(w);
        (!qv.is_zero()).then(|| (Rational::one(), pv * qv))
    });
    Ok(square_of_root_sum(terms, bits))
}

/// Class weights `mu_k = |C_k| P(v_k)` of a `~`-exchangeable `P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub index: ClassIndex,
    /// `mu_k`, aligned with `index.classes`.
    pub weights: Vec<Rational>,
    /// The common value of `P` on each class.
    pub values: Vec<Rational>,
}

pub fn decompose(p: &FiniteDistribution, relation: &Relation, cap: u64) -> Result<Decomposition> {
    let alphabet = p.alphabet().clone();
    let n = p.n();
    let index = enumerate_types(relation, &alphabet, n)?;
    let mut seen: Vec<Option<(Word, Rational)>> = vec![None; index.len()];
    for word in alphabet.words(n, cap)? {
        let t = type_of(&word, relation, &alphabet)?;
        let k = index
            .position(&t)
            .ok_or_else(|| Error::InvariantViolated(alloc::format!("type of {word} missing from the index")))?;
        let value = p.prob(&word);
        match &seen[k] {
            None => seen[k] = Some((word, value)),
            Some((first, v)) if *v != value => {
                return Err(Error::NotExchangeable { first: first.clone(), second: word });
            }
            Some(_) => {}
        }
    }
    let values: Vec<Rational> = seen.into_iter().map(|s| s.map(|(_, v)| v).unwrap_or_default()).collect();
    let weights = index
        .classes
        .iter()
        .zip(&values)
        .map(|(c, v)| from_biguint(&c.size) * v)
        .collect();
    Ok(Decomposition { index, weights, values })
}

impl Decomposition {
    /// `sum_k mu_k Q_k`.
    pub fn recompose(&self, cap: u64) -> Result<FiniteDistribution> {
        let n = self.index.n;
        let extremes = self
            .index
            .classes
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| !w.is_zero())
            .map(|(c, w)| Ok((w.clone(), uniform_class_dist(&c.descriptor, n, cap)?)))
            .collect::<Result<Vec<_>>>()?;
        let parts: Vec<(Rational, &FiniteDistribution)> = extremes.iter().map(|(w, d)| (w.clone(), d)).collect();
        FiniteDistribution::mixture(&parts)
    }
}

/// Per-class evidence in a [`ReductionCertificate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassRecord {
    pub descriptor: TypeDescriptor,
    pub representative: Word,
    pub size: BigUint,
    /// `mu_k`.
    pub weight: Rational,
    /// `P` at every member of the class.
    pub value: Rational,
    /// `max_v Q_k(v) / pi_k(v)`.
    pub alpha_tight: Rational,
    /// `F(P, pi_k)^2`.
    pub fidelity_squared: Interval,
    /// Right-hand side at the representative with the certified constant.
    pub rhs: Interval,
    pub verdict: Verdict,
    /// Right-hand side with the closed-form `alpha(n)` only.
    pub analytic_rhs: Interval,
    pub analytic_verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionCertificate {
    pub relation: Relation,
    pub alphabet: Alphabet,
    pub n: usize,
    pub classes: Vec<ClassRecord>,
    pub alpha: AlphaBound,
    pub alpha_tight_max: Rational,
    /// Every `alpha_tight` is certifiably below the closed-form `alpha(n)`.
    pub analytic_alpha_valid: bool,
    /// `max(alpha(n), alpha_tight_max)`: a valid constant in every case.
    pub alpha_effective: Interval,
    /// `N * alpha_effective^2`.
    pub prefactor: Interval,
    /// `N * alpha(n)^2`.
    pub analytic_prefactor: Interval,
    pub verdict: Verdict,
    pub analytic_verdict: Verdict,
    pub bits: u32,
}

fn compare_le(value: &Rational, bound: &Interval, word: &Word) -> Verdict {
    if value.is_zero() || value <= &bound.lo() {
        Verdict::Holds
    } else if value > &bound.hi() {
        Verdict::Fails { word: word.clone(), margin: value - bound.hi() }
    } else {
        Verdict::Inconclusive { word: word.clone() }
    }
}

struct ClassData {
    descriptor: TypeDescriptor,
    representative: Word,
    size: BigUint,
    alpha_tight: Rational,
}

/// Checks `P <= N alpha^2 sum_k (1/N) F(P, pi_k)^2 pi_k` class by class.
///
/// The constant used is `max(alpha(n), max_k alpha_tight_k)`, which makes the
/// inequality hold whenever the arithmetic is right. The closed-form constant
/// is checked alongside and reported in `analytic_verdict`.
pub fn verify_flexible_reduction(
    p: &FiniteDistribution,
    relation: &Relation,
    precision: Precision,
    cap: u64,
) -> Result<ReductionCertificate> {
    let dec = decompose(p, relation, cap)?;
    let n = p.n();
    let data = dec
        .index
        .classes
        .iter()
        .map(|c| {
            Ok(ClassData {
                descriptor: c.descriptor.clone(),
                representative: representative(&c.descriptor, n)?,
                size: c.size.clone(),
                alpha_tight: alpha_tight(&c.descriptor, n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pis = data.iter().map(|c| empirical_pi(&c.descriptor, n)).collect::<Result<Vec<_>>>()?;
    // q[k][j] = pi_k at the representative of class j.
    let q: Vec<Vec<Rational>> = pis
        .iter()
        .map(|pi| data.iter().map(|c| pi.probability(&c.representative)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let alpha_tight_max = data.iter().map(|c| c.alpha_tight.clone()).max().unwrap_or_else(Rational::one);

    let mut prec = precision;
    loop {
        let cert = certify_at(p, relation, &dec, &data, &q, &alpha_tight_max, prec.bits)?;
        let undecided = matches!(cert.verdict, Verdict::Inconclusive { .. })
            || matches!(cert.analytic_verdict, Verdict::Inconclusive { .. });
        match (undecided, prec.doubled()) {
            (true, Some(next)) => prec = next,
            _ => return Ok(cert),
        }
    }
}

fn certify_at(
    p: &FiniteDistribution,
    relation: &Relation,
    dec: &Decomposition,
    data: &[ClassData],
    q: &[Vec<Rational>],
    alpha_tight_max: &Rational,
    bits: u32,
) -> Result<ReductionCertificate> {
    let n = p.n();
    let alpha = alpha_analytic(relation, p.alphabet(), n, bits)?;
    let analytic_alpha_valid = data.iter().all(|c| c.alpha_tight <= alpha.value.lo());
    let alpha_effective = alpha.value.max(&Interval::from_rational(alpha_tight_max, bits));
    let fidelities: Vec<Interval> = q
        .iter()
        .map(|row| {
            square_of_root_sum(
                data.iter()
                    .zip(&dec.values)
                    .zip(row)
                    .map(|((c, v), qv)| (from_biguint(&c.size), v * qv)),
                bits,
            )
        })
        .collect();
    let eff_sq = &alpha_effective * &alpha_effective;
    let alpha_sq = &alpha.value * &alpha.value;
    let mut verdict = Verdict::Holds;
    let mut analytic_verdict = Verdict::Holds;
    let mut classes = Vec::with_capacity(data.len());
    for (j, c) in data.iter().enumerate() {
        let mut mix = Interval::zero(bits);
        for (k, f) in fidelities.iter().enumerate() {
            if !q[k][j].is_zero() {
                mix = mix + f.mul_rational(&q[k][j]);
            }
        }
        let rhs = &eff_sq * &mix;
        let analytic_rhs = &alpha_sq * &mix;
        let value = dec.values[j].clone();
        let v = compare_le(&value, &rhs, &c.representative);
        let av = compare_le(&value, &analytic_rhs, &c.representative);
        verdict = verdict.and(v.clone());
        analytic_verdict = analytic_verdict.and(av.clone());
        classes.push(ClassRecord {
            descriptor: c.descriptor.clone(),
            representative: c.representative.clone(),
            size: c.size.clone(),
            weight: dec.weights[j].clone(),
            value,
            alpha_tight: c.alpha_tight.clone(),
            fidelity_squared: fidelities[j].clone(),
            rhs,
            verdict: v,
            analytic_rhs,
            analytic_verdict: av,
        });
    }
    let big_n = Interval::from_rational(&from_u64(data.len() as u64), bits);
    Ok(ReductionCertificate {
        relation: relation.clone(),
        alphabet: p.alphabet().clone(),
        n,
        classes,
        prefactor: &big_n * &eff_sq,
        analytic_prefactor: &big_n * &alpha_sq,
        alpha,
        alpha_tight_max: alpha_tight_max.clone(),
        analytic_alpha_valid,
        alpha_effective,
        verdict,
        analytic_verdict,
        bits,
    })
}

/// Enclosures of `sqrt(2 pi) p^(p+1/2) e^(-p)` and `p^(p+1/2) e^(-(p-1))`,
/// which sandwich `p!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StirlingBounds {
    pub p: u64,
    pub lower: Interval,
    pub upper: Interval,
    pub factorial: BigUint,
}

impl StirlingBounds {
    /// `lower <= p! <= upper`, decided by the enclosures.
    pub fn certified(&self) -> bool {
        let f = from_biguint(&self.factorial);
        self.lower.hi() <= f && f <= self.upper.lo()
    }
}

pub fn stirling_bounds(p: u64, bits: u32) -> Result<StirlingBounds> {
    if p == 0 {
        return Err(Error::BadParams("Stirling bounds need p >= 1".into()));
    }
    let power = Interval::from_integer(p as i64, bits).pow_half(2 * p + 1);
    let e = Interval::e(bits);
    let two_pi = Interval::pi(bits) * Interval::from_integer(2, bits);
    let lower = two_pi.sqrt() * &power / e.powi(p);
    let upper = power / e.powi(p - 1);
    Ok(StirlingBounds { p, lower, upper, factorial: crate::combinatorics::factorial(p) })
}
