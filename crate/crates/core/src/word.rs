//! Alphabets, words and mixed-radix letter encodings.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A finite alphabet `{0, ..., size-1}`, optionally a product `V_1 x V_2 x ...`.
///
/// Product letters use mixed radix with the first factor most significant, so
/// for factors `(d_1, d_2)` the pair `(a, x)` is the letter `a * d_2 + x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alphabet {
    size: usize,
    factors: Option<Vec<usize>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Alphabet> {
        if size == 0 {
            return Err(Error::BadParams("alphabet size must be at least 1".into()));
        }
        Ok(Alphabet { size, factors: None })
    }

    pub fn product(factors: &[usize]) -> Result<Alphabet> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::BadParams("factor sizes must be positive".into()));
        }
        let size = factors
            .iter()
            .try_fold(1usize, |acc, &f| acc.checked_mul(f))
            .ok_or_else(|| Error::BadParams("alphabet size overflows".into()))?;
        Ok(Alphabet { size, factors: Some(factors.to_vec()) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn factors(&self) -> Option<&[usize]> {
        self.factors.as_deref()
    }

    pub fn is_factored(&self) -> bool {
        self.factors.is_some()
    }

    pub fn factor(&self, index: usize) -> Result<Alphabet> {
        let factors = self.factors.as_ref().ok_or(Error::NotFactored)?;
        let size = *factors.get(index).ok_or_else(|| {
            Error::DimensionMismatch(format!("factor {index} of {}", factors.len()))
        })?;
        Alphabet::new(size)
    }

    /// Splits a product letter into its components.
    pub fn split(&self, letter: usize) -> Result<Vec<usize>> {
        let factors = self.factors.as_ref().ok_or(Error::NotFactored)?;
        let mut parts = vec![0; factors.len()];
        let mut rest = letter;
        for (slot, &f) in parts.iter_mut().zip(factors).rev() {
            *slot = rest % f;
            rest /= f;
        }
        Ok(parts)
    }

    /// Inverse of [`Alphabet::split`].
    pub fn join(&self, parts: &[usize]) -> Result<usize> {
        let factors = self.factors.as_ref().ok_or(Error::NotFactored)?;
        if parts.len() != factors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} components for {} factors",
                parts.len(),
                factors.len()
            )));
        }
        let mut letter = 0;
        for (&p, &f) in parts.iter().zip(factors) {
            if p >= f {
                return Err(Error::LetterOutOfRange { letter: p, size: f });
            }
            letter = letter * f + p;
        }
        Ok(letter)
    }

    /// `size^n`, or `None` on overflow.
    pub fn word_count(&self, n: usize) -> Option<u64> {
        (self.size as u64).checked_pow(u32::try_from(n).ok()?)
    }

    /// All words of length `n` in lexicographic order, refusing more than `cap`.
    pub fn words(&self, n: usize, cap: u64) -> Result<Words> {
        if n == 0 {
            return Err(Error::ZeroLength);
        }
        match self.word_count(n) {
            Some(count) if count <= cap => Ok(Words::new(self.size, n)),
            _ => Err(Error::CapExceeded { what: "word enumeration", cap }),
        }
    }

    pub fn check_word(&self, word: &Word, n: usize) -> Result<()> {
        if word.len() != n {
            return Err(Error::BadWordLength { expected: n, found: word.len() });
        }
        match word.0.iter().find(|&&l| l >= self.size) {
            Some(&letter) => Err(Error::LetterOutOfRange { letter, size: self.size }),
            None => Ok(()),
        }
    }
}

/// A word `v_1 ... v_n` of 0-indexed letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Word {
        Word(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Component `index` of every letter of a word over a product alphabet.
    pub fn project(&self, alphabet: &Alphabet, index: usize) -> Result<Word> {
        self.0
            .iter()
            .map(|&l| alphabet.split(l).map(|parts| parts[index]))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Zips per-factor words into a word over the product alphabet.
    pub fn zip(alphabet: &Alphabet, components: &[&Word]) -> Result<Word> {
        let n = components.first().map_or(0, |w| w.len());
        if components.iter().any(|w| w.len() != n) {
            return Err(Error::DimensionMismatch("component words differ in length".into()));
        }
        (0..n)
            .map(|i| {
                let parts: Vec<usize> = components.iter().map(|w| w.0[i]).collect();
                alphabet.join(&parts)
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Parses 0-indexed letters: one base-36 digit per letter, or a
    /// comma-separated list of decimal indices.
    pub fn parse(text: &str) -> Result<Word> {
        Word::parse_with_offset(text, 0)
    }

    /// Parses 1-indexed letters (`"11323122"`) into 0-indexed ones.
    pub fn parse_one_indexed(text: &str) -> Result<Word> {
        Word::parse_with_offset(text, 1)
    }

    fn parse_with_offset(text: &str, offset: usize) -> Result<Word> {
        let text = text.trim();
        let bad = || Error::Parse(format!("not a word: {text:?}"));
        let raw: Vec<usize> = if text.contains(',') {
            text.split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        } else {
            text.chars()
                .map(|c| c.to_digit(36).map(|v| v as usize).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        if raw.is_empty() {
            return Err(bad());
        }
        raw.into_iter()
            .map(|v| v.checked_sub(offset).ok_or_else(bad))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Text form with letters shifted by `offset` (1 for the human convention).
    pub fn to_text(&self, offset: usize) -> String {
        let shifted: Vec<usize> = self.0.iter().map(|&l| l + offset).collect();
        if shifted.iter().all(|&l| l < 36) {
            shifted
                .iter()
                .map(|&l| char::from_digit(l as u32, 36).expect("digit below 36"))
                .collect()
        } else {
            let parts: Vec<String> = shifted.iter().map(|l| format!("{l}")).collect();
            parts.join(",")
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(0))
    }
}

impl From<Vec<usize>> for Word {
    fn from(letters: Vec<usize>) -> Word {
        Word(letters)
    }
}

/// Lexicographic iterator over `{0..d}^n`.
#[derive(Debug, Clone)]
pub struct Words {
    d: usize,
    current: Option<Vec<usize>>,
}

impl Words {
    pub fn new(d: usize, n: usize) -> Words {
        Words { d, current: (d > 0).then(|| vec![0; n]) }
    }
}

impl Iterator for Words {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let out = self.current.take()?;
        let mut next = out.clone();
        for i in (0..next.len()).rev() {
            if next[i] + 1 < self.d {
                next[i] += 1;
                self.current = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(Word(out))
    }
}
