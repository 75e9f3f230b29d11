//! JSON file formats.
//!
//! Every letter, input and answer that crosses this boundary is 1-indexed;
//! rationals are `"p/q"` strings and interval endpoints are decimal strings
//! rounded outward.

use std::collections::BTreeMap;

use exkit_core::games::{Game, SequentialKernel, Strategy};
use exkit_core::graphs::DirectedMultigraph;
use exkit_core::interval::parse_decimal;
use exkit_core::rational::{fmt_rational, parse_rational};
use exkit_core::reduction::EmpiricalPi;
use exkit_core::{Alphabet, ConditionalDistribution, FiniteDistribution, Interval, Rational, TypeDescriptor, Verdict, Word};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::CliError;

pub fn rational(value: &Rational) -> Value {
    Value::String(fmt_rational(value))
}

pub fn parse_rat(text: &str) -> Result<Rational, CliError> {
    Ok(parse_rational(text)?)
}

pub fn word_text(word: &Word) -> String {
    word.to_text(1)
}

pub fn parse_word(text: &str) -> Result<Word, CliError> {
    Ok(Word::parse_one_indexed(text)?)
}

/// Enough significant digits to show `bits` of precision.
fn digits_for(bits: u32) -> u32 {
    bits * 30103 / 100_000 + 2
}

pub fn interval(value: &Interval) -> Value {
    let digits = digits_for(value.bits());
    json!({ "lo": value.lo_decimal(digits), "hi": value.hi_decimal(digits), "bits": value.bits() })
}

/// Reads an interval back as exact rational endpoints.
pub fn parse_interval(value: &Value) -> Result<(Rational, Rational, u32), CliError> {
    let field = |k: &str| value.get(k).ok_or_else(|| CliError::Input(format!("interval without {k:?}")));
    let lo = parse_decimal(field("lo")?.as_str().unwrap_or_default())?;
    let hi = parse_decimal(field("hi")?.as_str().unwrap_or_default())?;
    let bits = field("bits")?.as_u64().ok_or_else(|| CliError::Input("interval bits".into()))?;
    if lo > hi {
        return Err(CliError::Input("interval with lo > hi".into()));
    }
    Ok((lo, hi, bits as u32))
}

pub fn verdict(v: &Verdict) -> Value {
    match v {
        Verdict::Holds => json!({ "status": "holds" }),
        Verdict::Fails { word, margin } => {
            json!({ "status": "fails", "word": word_text(word), "margin": rational(margin) })
        }
        Verdict::Inconclusive { word } => json!({ "status": "inconclusive", "word": word_text(word) }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<usize>>,
    pub n: usize,
    pub entries: BTreeMap<String, String>,
}

pub fn alphabet(d: usize, factors: Option<&[usize]>) -> Result<Alphabet, CliError> {
    match factors {
        Some(f) => {
            let a = Alphabet::product(f)?;
            if a.size() != d {
                return Err(CliError::Input(format!("factors {f:?} do not multiply to d = {d}")));
            }
            Ok(a)
        }
        None => Ok(Alphabet::new(d)?),
    }
}

impl DistributionFile {
    pub fn from_distribution(p: &FiniteDistribution) -> DistributionFile {
        DistributionFile {
            d: p.alphabet().size(),
            factors: p.alphabet().factors().map(<[usize]>::to_vec),
            n: p.n(),
            entries: p.iter().map(|(w, q)| (word_text(w), fmt_rational(q))).collect(),
        }
    }

    pub fn to_distribution(&self) -> Result<FiniteDistribution, CliError> {
        let alphabet = alphabet(self.d, self.factors.as_deref())?;
        let entries = self
            .entries
            .iter()
            .map(|(w, q)| Ok((parse_word(w)?, parse_rat(q)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(exkit_core::dist::make_distribution(alphabet, self.n, entries)?)
    }
}

/// `P_{A^n|X^n}` keyed by input word, each slice keyed by output word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalFile {
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "X")]
    pub x: usize,
    pub n: usize,
    pub slices: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConditionalFile {
    pub fn from_conditional(pc: &ConditionalDistribution) -> ConditionalFile {
        ConditionalFile {
            a: pc.outputs().size(),
            x: pc.inputs().size(),
            n: pc.n(),
            slices: pc
                .slices()
                .map(|(x, s)| (word_text(x), s.iter().map(|(a, q)| (word_text(a), fmt_rational(q))).collect()))
                .collect(),
        }
    }

    pub fn to_conditional(&self) -> Result<ConditionalDistribution, CliError> {
        let outputs = Alphabet::new(self.a)?;
        let mut slices = BTreeMap::new();
        for (x, slice) in &self.slices {
            let entries = slice
                .iter()
                .map(|(a, q)| Ok((parse_word(a)?, parse_rat(q)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let dist = exkit_core::dist::make_distribution(outputs.clone(), self.n, entries)?;
            if slices.insert(parse_word(x)?, dist).is_some() {
                return Err(CliError::Input(format!("duplicate input word {x:?}")));
            }
        }
        Ok(ConditionalDistribution::new(Alphabet::new(self.x)?, outputs, self.n, slices)?)
    }
}

/// Type descriptors; `l`-Markov counts are flat in mixed radix over the
/// `(l+1)`-grams, first letter most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TypeFile {
    Exchangeable { t: Vec<u64> },
    Markov { start: usize, t: Vec<Vec<u64>> },
    Lmarkov { ell: usize, d: usize, start: String, t: Vec<u64> },
    Product { parts: Vec<TypeFile> },
}

impl TypeFile {
    pub fn from_descriptor(descriptor: &TypeDescriptor) -> TypeFile {
        match descriptor {
            TypeDescriptor::Exchangeable { counts } => TypeFile::Exchangeable { t: counts.clone() },
            TypeDescriptor::Markov { start, transitions } => {
                TypeFile::Markov { start: start + 1, t: transitions.clone() }
            }
            TypeDescriptor::LMarkov { ell, d, initial, counts } => TypeFile::Lmarkov {
                ell: *ell,
                d: *d,
                start: word_text(&Word(initial.clone())),
                t: counts.clone(),
            },
            TypeDescriptor::Product(parts) => {
                TypeFile::Product { parts: parts.iter().map(TypeFile::from_descriptor).collect() }
            }
        }
    }

    pub fn to_descriptor(&self) -> Result<TypeDescriptor, CliError> {
        Ok(match self {
            TypeFile::Exchangeable { t } => TypeDescriptor::Exchangeable { counts: t.clone() },
            TypeFile::Markov { start, t } => TypeDescriptor::Markov {
                start: start.checked_sub(1).ok_or_else(|| CliError::Input("start letters are 1-indexed".into()))?,
                transitions: t.clone(),
            },
            TypeFile::Lmarkov { ell, d, start, t } => TypeDescriptor::LMarkov {
                ell: *ell,
                d: *d,
                initial: parse_word(start)?.0,
                counts: t.clone(),
            },
            TypeFile::Product { parts } => {
                TypeDescriptor::Product(parts.iter().map(TypeFile::to_descriptor).collect::<Result<_, _>>()?)
            }
        })
    }
}

pub fn descriptor(d: &TypeDescriptor) -> Value {
    serde_json::to_value(TypeFile::from_descriptor(d)).expect("type serializes")
}

pub fn multigraph(g: &DirectedMultigraph) -> Value {
    json!({ "m": g.m(), "M": g.matrix() })
}

pub fn parse_multigraph(value: &Value) -> Result<DirectedMultigraph, CliError> {
    #[derive(Deserialize)]
    struct Raw {
        m: usize,
        #[serde(rename = "M")]
        mult: Vec<Vec<u64>>,
    }
    let raw: Raw = serde_json::from_value(value.clone()).map_err(|e| CliError::Input(e.to_string()))?;
    if raw.mult.len() != raw.m {
        return Err(CliError::Input(format!("multigraph with m = {} but {} rows", raw.m, raw.mult.len())));
    }
    Ok(DirectedMultigraph::from_matrix(raw.mult)?)
}

/// The comparison law of a class, as frequencies or a transition kernel.
pub fn empirical(pi: &EmpiricalPi) -> Value {
    let row = |r: &[Rational]| r.iter().map(rational).collect::<Vec<_>>();
    match pi {
        EmpiricalPi::Iid { freqs, .. } => json!({ "kind": "iid", "freqs": row(freqs) }),
        EmpiricalPi::Chain { ell, initial, kernel, .. } => json!({
            "kind": "chain",
            "ell": ell,
            "initial": word_text(&Word(initial.clone())),
            "kernel": kernel.iter().map(|r| row(r)).collect::<Vec<_>>(),
        }),
        EmpiricalPi::Product { parts, .. } => {
            json!({ "kind": "product", "parts": parts.iter().map(empirical).collect::<Vec<_>>() })
        }
    }
}

fn pair_key(text: &str, what: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .and_then(|v| v.checked_sub(1))
                .ok_or_else(|| CliError::Input(format!("bad {what} key {text:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameFile {
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "B")]
    pub b: usize,
    /// Input weights keyed `"x,y"`; missing pairs have weight zero.
    #[serde(rename = "T")]
    pub t: BTreeMap<String, String>,
    /// Accepted `[x, y, a, b]` tuples.
    #[serde(rename = "V")]
    pub v: Vec<[usize; 4]>,
}

impl GameFile {
    pub fn from_game(game: &Game) -> GameFile {
        let mut t = BTreeMap::new();
        let mut v = Vec::new();
        for x in 0..game.x {
            for y in 0..game.y {
                let p = game.input_prob(x, y);
                if !p.is_zero() {
                    t.insert(format!("{},{}", x + 1, y + 1), fmt_rational(p));
                }
                for a in 0..game.a {
                    for b in 0..game.b {
                        if game.accepts(x, y, a, b) {
                            v.push([x + 1, y + 1, a + 1, b + 1]);
                        }
                    }
                }
            }
        }
        GameFile { x: game.x, y: game.y, a: game.a, b: game.b, t, v }
    }

    pub fn to_game(&self) -> Result<Game, CliError> {
        let (nx, ny, na, nb) = (self.x, self.y, self.a, self.b);
        let mut t = vec![Rational::zero(); nx * ny];
        for (key, p) in &self.t {
            match pair_key(key, "input")?[..] {
                [x, y] if x < nx && y < ny => t[x * ny + y] = parse_rat(p)?,
                _ => return Err(CliError::Input(format!("input pair {key:?} out of range"))),
            }
        }
        let mut v = vec![false; nx * ny * na * nb];
        for &[x, y, a, b] in &self.v {
            let ok = (1..=nx).contains(&x) && (1..=ny).contains(&y) && (1..=na).contains(&a) && (1..=nb).contains(&b);
            if !ok {
                return Err(CliError::Input(format!("accepted tuple {:?} out of range", [x, y, a, b])));
            }
            v[(((x - 1) * ny + y - 1) * na + a - 1) * nb + b - 1] = true;
        }
        Ok(Game::new(nx, ny, na, nb, t, v)?)
    }
}

/// `tau(prev -> next)` keyed `"x,y"` then `"x',y'"`; missing entries are zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelFile {
    pub tau: BTreeMap<String, BTreeMap<String, String>>,
}

impl KernelFile {
    pub fn to_kernel(&self, game: &Game) -> Result<SequentialKernel, CliError> {
        let pairs = game.x * game.y;
        let index = |key: &str| -> Result<usize, CliError> {
            match pair_key(key, "kernel")?[..] {
                [x, y] if x < game.x && y < game.y => Ok(x * game.y + y),
                _ => Err(CliError::Input(format!("kernel pair {key:?} out of range"))),
            }
        };
        let mut tau = vec![vec![Rational::zero(); pairs]; pairs];
        for (prev, row) in &self.tau {
            let i = index(prev)?;
            for (next, p) in row {
                tau[i][index(next)?] = parse_rat(p)?;
            }
        }
        Ok(SequentialKernel::new(game, tau)?)
    }

    pub fn from_kernel(game: &Game, kernel: &SequentialKernel) -> KernelFile {
        let key = |i: usize| format!("{},{}", i / game.y + 1, i % game.y + 1);
        let tau = kernel
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let row = row
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(j, p)| (key(j), fmt_rational(p)))
                    .collect();
                (key(i), row)
            })
            .collect();
        KernelFile { tau }
    }
}

/// A strategy for the `n`-round game: `P(a, b | x, y)` keyed by the words
/// `"x,y"` then `"a,b"`; missing entries are zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyFile {
    pub n: usize,
    #[serde(rename = "P")]
    pub p: BTreeMap<String, BTreeMap<String, String>>,
}

fn word_pair(key: &str, n: usize, sizes: (usize, usize)) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("bad strategy key {key:?}"));
    let (l, r) = key.split_once(',').ok_or_else(bad)?;
    let encode = |text: &str, base: usize| -> Result<usize, CliError> {
        let w = parse_word(text)?;
        if w.len() != n || w.letters().iter().any(|&l| l >= base) {
            return Err(bad());
        }
        Ok(w.letters().iter().fold(0, |acc, &l| acc * base + l))
    };
    Ok((encode(l, sizes.0)?, encode(r, sizes.1)?))
}

impl StrategyFile {
    /// Reads the strategy against the base game, checking its round count.
    pub fn to_strategy(&self, base: &Game, n: usize) -> Result<Strategy, CliError> {
        if self.n != n {
            return Err(CliError::Input(format!("strategy is for {} rounds, not {n}", self.n)));
        }
        let pow = |b: usize| b.checked_pow(n as u32).ok_or_else(|| CliError::Input("strategy too large".into()));
        let (x, y, a, b) = (pow(base.x)?, pow(base.y)?, pow(base.a)?, pow(base.b)?);
        let mut p = vec![Rational::zero(); x * y * a * b];
        for (inputs, row) in &self.p {
            let (xi, yi) = word_pair(inputs, n, (base.x, base.y))?;
            for (answers, q) in row {
                let (ai, bi) = word_pair(answers, n, (base.a, base.b))?;
                p[((xi * y + yi) * a + ai) * b + bi] = parse_rat(q)?;
            }
        }
        Ok(Strategy::new(x, y, a, b, p)?)
    }
}

pub fn strategy(base: &Game, n: usize, s: &Strategy) -> Value {
    let text = |index: usize, size: usize| -> String {
        word_text(&Word(exkit_core::games::digits(index, size, n)))
    };
    let mut p = BTreeMap::new();
    for xi in 0..s.x {
        for yi in 0..s.y {
            let mut row = BTreeMap::new();
            for ai in 0..s.a {
                for bi in 0..s.b {
                    let q = s.prob(xi, yi, ai, bi);
                    if !q.is_zero() {
                        row.insert(format!("{},{}", text(ai, base.a), text(bi, base.b)), fmt_rational(q));
                    }
                }
            }
            p.insert(format!("{},{}", text(xi, base.x), text(yi, base.y)), row);
        }
    }
    serde_json::to_value(StrategyFile { n, p }).expect("strategy serializes")
}
