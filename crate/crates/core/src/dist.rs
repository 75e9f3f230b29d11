//! Exact finite distributions on `V^n` and conditionals `P_{A^n|X^n}`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval::{Interval, Precision};
use crate::rational::{from_u64, Rational};
use crate::word::{Alphabet, Word};

/// A probability distribution on words of length `n`, stored sparsely.
///
/// Zero entries are never stored, so two distributions are equal exactly when
/// they assign the same probability to every word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDistribution {
    alphabet: Alphabet,
    n: usize,
    entries: BTreeMap<Word, Rational>,
}

/// Outcome of a certified pointwise comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// `margin = P(word) - C.hi * Q(word) > 0`.
    Fails { word: Word, margin: Rational },
    /// The enclosure of the constant was too wide to decide at `word`.
    Inconclusive { word: Word },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }

    /// Combines per-item verdicts: any failure wins, then any inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (f @ Verdict::Fails { .. }, _) | (_, f @ Verdict::Fails { .. }) => f,
            (i @ Verdict::Inconclusive { .. }, _) | (_, i @ Verdict::Inconclusive { .. }) => i,
            _ => Verdict::Holds,
        }
    }
}

/// Validates entries and builds a distribution; duplicate words accumulate.
pub fn make_distribution<I>(alphabet: Alphabet, n: usize, entries: I) -> Result<FiniteDistribution>
where
    I: IntoIterator<Item = (Word, Rational)>,
{
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let mut map: BTreeMap<Word, Rational> = BTreeMap::new();
    let mut total = Rational::zero();
    for (word, p) in entries {
        alphabet.check_word(&word, n)?;
        if p.is_negative() {
            return Err(Error::NegativeProbability { word });
        }
        total += &p;
        if !p.is_zero() {
            *map.entry(word).or_insert_with(Rational::zero) += p;
        }
    }
    if !total.is_one() {
        return Err(Error::SumNotOne { total });
    }
    Ok(FiniteDistribution { alphabet, n, entries: map })
}

/// `D^{⊗n}` for a distribution `D` on single letters.
pub fn tensor_power(single: &FiniteDistribution, n: usize) -> Result<FiniteDistribution> {
    if single.n != 1 {
        return Err(Error::BadWordLength { expected: 1, found: single.n });
    }
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let letters: Vec<(usize, &Rational)> =
        single.entries.iter().map(|(w, p)| (w.0[0], p)).collect();
    let mut layer: Vec<(Vec<usize>, Rational)> = alloc::vec![(Vec::new(), Rational::one())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for (prefix, p) in &layer {
            for &(l, q) in &letters {
                let mut w = prefix.clone();
                w.push(l);
                next.push((w, p * q));
            }
        }
        layer = next;
    }
    let entries = layer.into_iter().map(|(w, p)| (Word(w), p)).collect();
    Ok(FiniteDistribution { alphabet: single.alphabet.clone(), n, entries })
}

impl FiniteDistribution {
    /// Builds a distribution whose entries are known to be valid and sum to 1.
    pub(crate) fn from_parts(
        alphabet: Alphabet,
        n: usize,
        entries: BTreeMap<Word, Rational>,
    ) -> FiniteDistribution {
        debug_assert!(entries.values().fold(Rational::zero(), |a, p| a + p).is_one());
        let entries = entries.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        FiniteDistribution { alphabet, n, entries }
    }

    pub fn dirac(alphabet: Alphabet, word: Word) -> Result<FiniteDistribution> {
        let n = word.len();
        make_distribution(alphabet, n, [(word, Rational::one())])
    }

    /// Uniform distribution on a nonempty set of distinct words.
    pub fn uniform_on(alphabet: Alphabet, n: usize, words: Vec<Word>) -> Result<FiniteDistribution> {
        if words.is_empty() {
            return Err(Error::EmptyClass);
        }
        let p = Rational::one() / from_u64(words.len() as u64);
        make_distribution(alphabet, n, words.into_iter().map(|w| (w, p.clone())))
    }

    /// Uniform distribution on all of `V^n`.
    pub fn uniform(alphabet: Alphabet, n: usize, cap: u64) -> Result<FiniteDistribution> {
        let words: Vec<Word> = alphabet.words(n, cap)?.collect();
        FiniteDistribution::uniform_on(alphabet, n, words)
    }

    /// Convex combination `sum_k w_k D_k`; the weights must sum to 1.
    pub fn mixture(parts: &[(Rational, &FiniteDistribution)]) -> Result<FiniteDistribution> {
        let (_, first) = parts.first().ok_or(Error::EmptyClass)?;
        let mut acc: BTreeMap<Word, Rational> = BTreeMap::new();
        for (w, d) in parts {
            if d.alphabet != first.alphabet || d.n != first.n {
                return Err(Error::DimensionMismatch("mixture components differ".into()));
            }
            if w.is_negative() {
                return Err(Error::BadParams("negative mixture weight".into()));
            }
            for (word, p) in &d.entries {
                *acc.entry(word.clone()).or_insert_with(Rational::zero) += w * p;
            }
        }
        make_distribution(first.alphabet.clone(), first.n, acc)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prob(&self, word: &Word) -> Rational {
        self.entries.get(word).cloned().unwrap_or_else(Rational::zero)
    }

    /// Support entries in lexicographic word order.
    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.entries.iter()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn same_space(&self, other: &FiniteDistribution) -> Result<()> {
        if self.alphabet.size() != other.alphabet.size() || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "d={}, n={} vs d={}, n={}",
                self.alphabet.size(),
                self.n,
                other.alphabet.size(),
                other.n
            )));
        }
        Ok(())
    }

    /// Marginal on the factor `keep` of a product alphabet, coordinate-wise.
    pub fn marginal(&self, keep: usize) -> Result<FiniteDistribution> {
        let target = self.alphabet.factor(keep)?;
        let mut acc: BTreeMap<Word, Rational> = BTreeMap::new();
        for (word, p) in &self.entries {
            let projected = word.project(&self.alphabet, keep)?;
            *acc.entry(projected).or_insert_with(Rational::zero) += p;
        }
        Ok(FiniteDistribution::from_parts(target, self.n, acc))
    }
}

/// Certifies `P <= C * Q` pointwise for a fixed enclosure of `C`.
///
/// Words outside the support of `P` hold trivially. The first failing word in
/// lexicographic order is reported; `Inconclusive` only when nothing fails.
pub fn pointwise_dominates(
    c: &Interval,
    q: &FiniteDistribution,
    p: &FiniteDistribution,
) -> Result<Verdict> {
    p.same_space(q)?;
    let lo = c.lo();
    let hi = c.hi();
    let mut verdict = Verdict::Holds;
    for (word, pv) in p.iter() {
        let qv = q.prob(word);
        if pv <= &(&lo * &qv) {
            continue;
        }
        if pv > &(&hi * &qv) {
            return Ok(Verdict::Fails { word: word.clone(), margin: pv - &hi * &qv });
        }
        if verdict.holds() {
            verdict = Verdict::Inconclusive { word: word.clone() };
        }
    }
    Ok(verdict)
}

/// [`pointwise_dominates`] with the constant recomputed at doubling
/// precision while the verdict stays inconclusive.
pub fn pointwise_dominates_refined<F>(
    constant: F,
    precision: Precision,
    q: &FiniteDistribution,
    p: &FiniteDistribution,
) -> Result<Verdict>
where
    F: Fn(u32) -> Interval,
{
    let mut prec = precision;
    loop {
        let verdict = pointwise_dominates(&constant(prec.bits), q, p)?;
        match (&verdict, prec.doubled()) {
            (Verdict::Inconclusive { .. }, Some(next)) => prec = next,
            _ => return Ok(verdict),
        }
    }
}

/// `P_{A^n|X^n}`: for each input word with positive weight, a distribution on `A^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalDistribution {
    inputs: Alphabet,
    outputs: Alphabet,
    n: usize,
    slices: BTreeMap<Word, FiniteDistribution>,
}

impl ConditionalDistribution {
    pub fn new(
        inputs: Alphabet,
        outputs: Alphabet,
        n: usize,
        slices: BTreeMap<Word, FiniteDistribution>,
    ) -> Result<ConditionalDistribution> {
        if n == 0 {
            return Err(Error::ZeroLength);
        }
        for (x, slice) in &slices {
            inputs.check_word(x, n)?;
            if slice.alphabet.size() != outputs.size() || slice.n != n {
                return Err(Error::DimensionMismatch(format!("slice for input {x}")));
            }
        }
        Ok(ConditionalDistribution { inputs, outputs, n, slices })
    }

    pub fn inputs(&self) -> &Alphabet {
        &self.inputs
    }

    pub fn outputs(&self) -> &Alphabet {
        &self.outputs
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `P(a|x)`, or `None` when `x` has no slice.
    pub fn prob(&self, a: &Word, x: &Word) -> Option<Rational> {
        self.slices.get(x).map(|s| s.prob(a))
    }

    pub fn slice(&self, x: &Word) -> Option<&FiniteDistribution> {
        self.slices.get(x)
    }

    pub fn slices(&self) -> impl Iterator<Item = (&Word, &FiniteDistribution)> {
        self.slices.iter()
    }
}
