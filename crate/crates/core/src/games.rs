//! Two-player non-local games with classical strategies.
//!
//! Inputs `(x, y)` are indexed `x * |Y| + y`; a full tuple `(x, y, a, b)` is
//! indexed `((x * |Y| + y) * |A| + a) * |B| + b`. Repeated games encode words
//! over `X` as base-`|X|` numbers with the first round most significant.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::dist::{make_distribution, FiniteDistribution};
use crate::error::{Error, Result};
use crate::interval::{Interval, Precision};
use crate::rational::{from_biguint, from_u64, Rational};
use crate::reduction::{alpha_analytic, alpha_tight, decompose, empirical_pi, square_of_root_sum};
use crate::relations::{class_size, enumerate_types, representative, type_of, Relation, TypeDescriptor};
use crate::word::{Alphabet, Word};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
    t: Vec<Rational>,
    v: Vec<bool>,
}

impl Game {
    pub fn new(x: usize, y: usize, a: usize, b: usize, t: Vec<Rational>, v: Vec<bool>) -> Result<Game> {
        if [x, y, a, b].contains(&0) {
            return Err(Error::BadParams("game alphabets must be nonempty".into()));
        }
        if t.len() != x * y {
            return Err(Error::DimensionMismatch(format!("{} input weights for |X||Y| = {}", t.len(), x * y)));
        }
        if v.len() != x * y * a * b {
            return Err(Error::DimensionMismatch(format!(
                "{} predicate entries for |X||Y||A||B| = {}",
                v.len(),
                x * y * a * b
            )));
        }
        if t.iter().any(|p| p < &Rational::zero()) {
            return Err(Error::BadParams("negative input probability".into()));
        }
        let total: Rational = t.iter().sum();
        if !total.is_one() {
            return Err(Error::SumNotOne { total });
        }
        Ok(Game { x, y, a, b, t, v })
    }

    /// Builds the predicate from a closure.
    pub fn from_fn<F>(x: usize, y: usize, a: usize, b: usize, t: Vec<Rational>, pred: F) -> Result<Game>
    where
        F: Fn(usize, usize, usize, usize) -> bool,
    {
        let mut v = Vec::with_capacity(x * y * a * b);
        for xi in 0..x {
            for yi in 0..y {
                for ai in 0..a {
                    for bi in 0..b {
                        v.push(pred(xi, yi, ai, bi));
                    }
                }
            }
        }
        Game::new(x, y, a, b, t, v)
    }

    /// Uniform inputs, win iff `a xor b = x and y`.
    pub fn chsh() -> Game {
        let t = vec![Rational::new(1.into(), 4.into()); 4];
        Game::from_fn(2, 2, 2, 2, t, |x, y, a, b| (a ^ b) == (x & y)).expect("valid game")
    }

    pub fn trivial() -> Game {
        Game::new(1, 1, 1, 1, vec![Rational::one()], vec![true]).expect("valid game")
    }

    pub fn input_prob(&self, x: usize, y: usize) -> &Rational {
        &self.t[x * self.y + y]
    }

    pub fn accepts(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.v[self.index(x, y, a, b)]
    }

    pub fn inputs(&self) -> &[Rational] {
        &self.t
    }

    pub fn predicate(&self) -> &[bool] {
        &self.v
    }

    /// `|X| |Y| |A| |B|`.
    pub fn letter_count(&self) -> usize {
        self.x * self.y * self.a * self.b
    }

    fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.y + y) * self.a + a) * self.b + b
    }
}

/// `P(ab|xy)`, one distribution over `A x B` per input pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
    p: Vec<Rational>,
}

impl Strategy {
    pub fn new(x: usize, y: usize, a: usize, b: usize, p: Vec<Rational>) -> Result<Strategy> {
        if p.len() != x * y * a * b {
            return Err(Error::DimensionMismatch(format!("{} strategy entries for {}", p.len(), x * y * a * b)));
        }
        if p.iter().any(|v| v < &Rational::zero()) {
            return Err(Error::BadParams("negative strategy probability".into()));
        }
        for slice in p.chunks(a * b) {
            let total: Rational = slice.iter().sum();
            if !total.is_one() {
                return Err(Error::SumNotOne { total });
            }
        }
        Ok(Strategy { x, y, a, b, p })
    }

    pub fn for_game(game: &Game, p: Vec<Rational>) -> Result<Strategy> {
        Strategy::new(game.x, game.y, game.a, game.b, p)
    }

    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> &Rational {
        &self.p[((x * self.y + y) * self.a + a) * self.b + b]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.p
    }

    /// `P^{(x)n}` on the `n`-fold repeated alphabets.
    pub fn tensor_power(&self, n: usize) -> Result<Strategy> {
        if n == 0 {
            return Err(Error::ZeroLength);
        }
        let (xn, yn, an, bn) = (pow(self.x, n)?, pow(self.y, n)?, pow(self.a, n)?, pow(self.b, n)?);
        let mut p = Vec::with_capacity(xn * yn * an * bn);
        for xi in 0..xn {
            let xs = digits(xi, self.x, n);
            for yi in 0..yn {
                let ys = digits(yi, self.y, n);
                for ai in 0..an {
                    let as_ = digits(ai, self.a, n);
                    for bi in 0..bn {
                        let bs = digits(bi, self.b, n);
                        let mut v = Rational::one();
                        for i in 0..n {
                            v *= self.prob(xs[i], ys[i], as_[i], bs[i]);
                        }
                        p.push(v);
                    }
                }
            }
        }
        Strategy::new(xn, yn, an, bn, p)
    }
}

/// Alice answers `alice[x]`, Bob answers `bob[y]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn to_strategy(&self, game: &Game) -> Result<Strategy> {
        if self.alice.len() != game.x || self.bob.len() != game.y {
            return Err(Error::DimensionMismatch("deterministic strategy tables".into()));
        }
        if self.alice.iter().any(|&a| a >= game.a) || self.bob.iter().any(|&b| b >= game.b) {
            return Err(Error::BadParams("answer outside the output alphabet".into()));
        }
        let mut p = vec![Rational::zero(); game.letter_count()];
        for x in 0..game.x {
            for y in 0..game.y {
                p[game.index(x, y, self.alice[x], self.bob[y])] = Rational::one();
            }
        }
        Strategy::for_game(game, p)
    }

    pub fn winning_probability(&self, game: &Game) -> Rational {
        let mut total = Rational::zero();
        for x in 0..game.x {
            for y in 0..game.y {
                if game.accepts(x, y, self.alice[x], self.bob[y]) {
                    total += game.input_prob(x, y);
                }
            }
        }
        total
    }
}

fn pow(base: usize, n: usize) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|n| base.checked_pow(n))
        .ok_or(Error::CapExceeded { what: "repeated alphabet", cap: usize::MAX as u64 })
}

/// Base-`base` digits of `index`, most significant first.
pub fn digits(mut index: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    out
}

fn undigits(ds: &[usize], base: usize) -> usize {
    ds.iter().fold(0, |acc, &d| acc * base + d)
}

/// `sum_xy T(xy) sum_ab V(xyab) P(ab|xy)`.
pub fn winning_probability(game: &Game, strategy: &Strategy) -> Result<Rational> {
    if (strategy.x, strategy.y, strategy.a, strategy.b) != (game.x, game.y, game.a, game.b) {
        return Err(Error::DimensionMismatch("strategy alphabets do not match the game".into()));
    }
    let mut total = Rational::zero();
    for (i, (&win, p)) in game.v.iter().zip(&strategy.p).enumerate() {
        if win && !p.is_zero() {
            total += &game.t[i / (game.a * game.b)] * p;
        }
    }
    Ok(total)
}

/// Best response value for a fixed table of the enumerated player.
///
/// With `swapped = false` the table is Alice's and Bob responds per `y`.
pub fn best_response(game: &Game, table: &[usize], swapped: bool) -> (Rational, Vec<usize>) {
    let (outer, inner, answers) = if swapped { (game.x, game.y, game.a) } else { (game.y, game.x, game.b) };
    let mut total = Rational::zero();
    let mut response = Vec::with_capacity(outer);
    for o in 0..outer {
        let mut best: Option<(Rational, usize)> = None;
        for ans in 0..answers {
            let mut v = Rational::zero();
            for i in 0..inner {
                let (x, y, a, b) = if swapped { (o, i, ans, table[i]) } else { (i, o, table[i], ans) };
                if game.accepts(x, y, a, b) {
                    v += game.input_prob(x, y);
                }
            }
            if best.as_ref().map_or(true, |(bv, _)| &v > bv) {
                best = Some((v, ans));
            }
        }
        let (v, ans) = best.expect("nonempty output alphabet");
        total += v;
        response.push(ans);
    }
    (total, response)
}

/// Which player's tables are enumerated, and how many there are.
pub fn enumeration_plan(game: &Game) -> (bool, Option<u64>) {
    let count = |base: usize, exp: usize| (base as u64).checked_pow(u32::try_from(exp).ok()?);
    let alice = count(game.a, game.x);
    let bob = count(game.b, game.y);
    match (alice, bob) {
        (Some(a), Some(b)) if b < a => (true, Some(b)),
        (None, Some(b)) => (true, Some(b)),
        (a, _) => (false, a),
    }
}

/// The `index`-th table in mixed radix over `answers`.
pub fn table_at(index: u64, answers: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = (rest % answers as u64) as usize;
        rest /= answers as u64;
    }
    out
}

pub fn assemble(swapped: bool, table: Vec<usize>, response: Vec<usize>) -> DeterministicStrategy {
    if swapped {
        DeterministicStrategy { alice: response, bob: table }
    } else {
        DeterministicStrategy { alice: table, bob: response }
    }
}

/// Exact maximum over deterministic strategies, with a witness.
///
/// Shared randomness cannot beat the best deterministic strategy, so this is
/// the classical value.
pub fn classical_value(game: &Game, cap: u64) -> Result<(Rational, DeterministicStrategy)> {
    let (swapped, count) = enumeration_plan(game);
    let count = count.filter(|&c| c <= cap).ok_or(Error::CapExceeded { what: "deterministic strategies", cap })?;
    let (answers, len) = if swapped { (game.b, game.y) } else { (game.a, game.x) };
    let mut best: Option<(Rational, Vec<usize>, Vec<usize>)> = None;
    for i in 0..count {
        let table = table_at(i, answers, len);
        let (v, response) = best_response(game, &table, swapped);
        if best.as_ref().map_or(true, |(bv, _, _)| &v > bv) {
            best = Some((v, table, response));
        }
    }
    let (v, table, response) = best.expect("at least one table");
    Ok((v, assemble(swapped, table, response)))
}

/// `G^n_par`: independent inputs from `T`, won iff every round is won.
pub fn parallel_game(game: &Game, n: usize, cap: u64) -> Result<Game> {
    let kernel = SequentialKernel::iid(game);
    sequential_game(game, &kernel, n, cap)
}

/// `tau(prev -> next)` on input pairs, leaving `T` invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialKernel {
    pairs: usize,
    tau: Vec<Vec<Rational>>,
}

impl SequentialKernel {
    /// Rows are indexed by the previous pair; each row must sum to 1 and
    /// `sum_prev T(prev) tau(prev -> next) = T(next)`.
    pub fn new(game: &Game, tau: Vec<Vec<Rational>>) -> Result<SequentialKernel> {
        let pairs = game.x * game.y;
        if tau.len() != pairs || tau.iter().any(|row| row.len() != pairs) {
            return Err(Error::DimensionMismatch(format!("kernel must be {pairs} x {pairs}")));
        }
        for row in &tau {
            if row.iter().any(|p| p < &Rational::zero()) {
                return Err(Error::BadParams("negative transition probability".into()));
            }
            let total: Rational = row.iter().sum();
            if !total.is_one() {
                return Err(Error::SumNotOne { total });
            }
        }
        for next in 0..pairs {
            let mass: Rational = (0..pairs).map(|prev| &game.t[prev] * &tau[prev][next]).sum();
            if mass != game.t[next] {
                return Err(Error::KernelNotStationary);
            }
        }
        Ok(SequentialKernel { pairs, tau })
    }

    /// `tau(prev -> next) = T(next)`.
    pub fn iid(game: &Game) -> SequentialKernel {
        let pairs = game.x * game.y;
        SequentialKernel { pairs, tau: vec![game.t.clone(); pairs] }
    }

    /// Deterministic successor map, `tau(p -> next[p]) = 1`.
    pub fn deterministic(game: &Game, next: &[usize]) -> Result<SequentialKernel> {
        let pairs = game.x * game.y;
        if next.len() != pairs || next.iter().any(|&s| s >= pairs) {
            return Err(Error::DimensionMismatch("successor map".into()));
        }
        let tau = next
            .iter()
            .map(|&s| (0..pairs).map(|j| if j == s { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        SequentialKernel::new(game, tau)
    }

    pub fn prob(&self, prev: usize, next: usize) -> &Rational {
        &self.tau[prev][next]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.tau
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }
}

/// `G^n_seq`: first inputs from `T`, then Markov steps with `tau`.
pub fn sequential_game(game: &Game, kernel: &SequentialKernel, n: usize, cap: u64) -> Result<Game> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    if kernel.pairs != game.x * game.y {
        return Err(Error::DimensionMismatch("kernel does not match the game inputs".into()));
    }
    let too_big = Error::CapExceeded { what: "repeated game", cap };
    let within = u32::try_from(n)
        .ok()
        .and_then(|k| (game.letter_count() as u64).checked_pow(k))
        .is_some_and(|c| c <= cap);
    if !within {
        return Err(too_big);
    }
    let (xn, yn, an, bn) = (pow(game.x, n)?, pow(game.y, n)?, pow(game.a, n)?, pow(game.b, n)?);
    let mut t = Vec::with_capacity(xn * yn);
    for xi in 0..xn {
        let xs = digits(xi, game.x, n);
        for yi in 0..yn {
            let ys = digits(yi, game.y, n);
            let first = xs[0] * game.y + ys[0];
            let mut p = game.t[first].clone();
            let mut prev = first;
            for i in 1..n {
                let next = xs[i] * game.y + ys[i];
                p *= kernel.prob(prev, next);
                prev = next;
            }
            t.push(p);
        }
    }
    let mut v = Vec::with_capacity(xn * yn * an * bn);
    for xi in 0..xn {
        let xs = digits(xi, game.x, n);
        for yi in 0..yn {
            let ys = digits(yi, game.y, n);
            for ai in 0..an {
                let as_ = digits(ai, game.a, n);
                for bi in 0..bn {
                    let bs = digits(bi, game.b, n);
                    v.push((0..n).all(|i| game.accepts(xs[i], ys[i], as_[i], bs[i])));
                }
            }
        }
    }
    Game::new(xn, yn, an, bn, t, v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Repetition {
    Parallel,
    Sequential(SequentialKernel),
}

/// A base game, its `n`-fold repetition and the matching symmetry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepeatedGame {
    pub base: Game,
    pub n: usize,
    pub repetition: Repetition,
    pub game: Game,
}

impl RepeatedGame {
    pub fn new(base: &Game, n: usize, repetition: Repetition, cap: u64) -> Result<RepeatedGame> {
        let game = match &repetition {
            Repetition::Parallel => parallel_game(base, n, cap)?,
            Repetition::Sequential(k) => sequential_game(base, k, n, cap)?,
        };
        Ok(RepeatedGame { base: base.clone(), n, repetition, game })
    }

    /// Exchangeable for parallel play, Markov exchangeable for sequential play.
    pub fn relation(&self) -> Relation {
        match self.repetition {
            Repetition::Parallel => Relation::Exchangeable,
            Repetition::Sequential(_) => Relation::Markov,
        }
    }

    /// `V = X x Y x A x B`, factored in that order.
    pub fn letter_alphabet(&self) -> Result<Alphabet> {
        Alphabet::product(&[self.base.x, self.base.y, self.base.a, self.base.b])
    }

    fn word(&self, xi: usize, yi: usize, ai: usize, bi: usize) -> Word {
        let g = &self.base;
        let (xs, ys, as_, bs) = (digits(xi, g.x, self.n), digits(yi, g.y, self.n), digits(ai, g.a, self.n), digits(bi, g.b, self.n));
        Word((0..self.n).map(|i| g.index(xs[i], ys[i], as_[i], bs[i])).collect())
    }

    fn unword(&self, w: &Word) -> (usize, usize, usize, usize) {
        let g = &self.base;
        let mut parts = [vec![], vec![], vec![], vec![]];
        for &l in w.letters() {
            let b = l % g.b;
            let a = (l / g.b) % g.a;
            let y = (l / (g.a * g.b)) % g.y;
            let x = l / (g.y * g.a * g.b);
            for (slot, v) in parts.iter_mut().zip([x, y, a, b]) {
                slot.push(v);
            }
        }
        (undigits(&parts[0], g.x), undigits(&parts[1], g.y), undigits(&parts[2], g.a), undigits(&parts[3], g.b))
    }

    /// `T_n(xy) P(ab|xy)` as a distribution on `V^n`.
    pub fn joint(&self, strategy: &Strategy) -> Result<FiniteDistribution> {
        let g = &self.game;
        if (strategy.x, strategy.y, strategy.a, strategy.b) != (g.x, g.y, g.a, g.b) {
            return Err(Error::DimensionMismatch("strategy alphabets do not match the repeated game".into()));
        }
        let mut entries = Vec::new();
        for xi in 0..g.x {
            for yi in 0..g.y {
                let t = g.input_prob(xi, yi);
                if t.is_zero() {
                    continue;
                }
                for ai in 0..g.a {
                    for bi in 0..g.b {
                        let p = strategy.prob(xi, yi, ai, bi);
                        if !p.is_zero() {
                            entries.push((self.word(xi, yi, ai, bi), t * p));
                        }
                    }
                }
            }
        }
        make_distribution(self.letter_alphabet()?, self.n, entries)
    }

    /// `V^n` at a word of `V^n`.
    pub fn accepts_word(&self, w: &Word) -> bool {
        let g = &self.base;
        w.letters().iter().all(|&l| g.v[l])
    }

    /// Whether `T_n V^n` is constant on every class of [`RepeatedGame::relation`].
    pub fn weight_is_invariant(&self, cap: u64) -> Result<bool> {
        let alphabet = self.letter_alphabet()?;
        let flat = Alphabet::new(alphabet.size())?;
        let relation = self.relation();
        let mut seen: BTreeMap<TypeDescriptor, Rational> = BTreeMap::new();
        for w in alphabet.words(self.n, cap)? {
            let (xi, yi, _, _) = self.unword(&w);
            let weight = if self.accepts_word(&w) { self.game.input_prob(xi, yi).clone() } else { Rational::zero() };
            let t = type_of(&w, &relation, &flat)?;
            match seen.get(&t) {
                Some(prev) if *prev != weight => return Ok(false),
                Some(_) => {}
                None => {
                    seen.insert(t, weight);
                }
            }
        }
        Ok(true)
    }
}

/// A strategy averaged over the classes of the repeated game's relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symmetrized {
    pub strategy: Strategy,
    /// The class-averaged joint weight.
    pub joint: FiniteDistribution,
    /// Averaging kept the input law; always true for exchangeable averaging.
    pub marginal_preserved: bool,
}

/// Averages `T_n P` over classes of `relation` on `V^n`, then conditions on
/// the inputs again. Inputs of zero weight get the uniform answer.
pub fn symmetrize_strategy(rg: &RepeatedGame, strategy: &Strategy, relation: &Relation, cap: u64) -> Result<Symmetrized> {
    if !matches!(relation, Relation::Exchangeable | Relation::Markov) {
        return Err(Error::BadParams("symmetrization supports exchangeable and Markov relations".into()));
    }
    let joint = rg.joint(strategy)?;
    let alphabet = rg.letter_alphabet()?;
    let flat = Alphabet::new(alphabet.size())?;
    let mut sums: BTreeMap<TypeDescriptor, Rational> = BTreeMap::new();
    for (w, p) in joint.iter() {
        *sums.entry(type_of(w, relation, &flat)?).or_insert_with(Rational::zero) += p;
    }
    let mut averaged = Vec::new();
    for (t, mass) in &sums {
        let size = from_biguint(&class_size(t, rg.n)?);
        let each = mass / size;
        for w in crate::relations::class_members(t, rg.n, cap)? {
            averaged.push((w, each.clone()));
        }
    }
    let joint = make_distribution(alphabet, rg.n, averaged)?;
    let g = &rg.game;
    let mut p = vec![Rational::zero(); g.letter_count()];
    let mut marginal = vec![Rational::zero(); g.x * g.y];
    for (w, v) in joint.iter() {
        let (xi, yi, ai, bi) = rg.unword(w);
        p[g.index(xi, yi, ai, bi)] = v.clone();
        marginal[xi * g.y + yi] += v;
    }
    let marginal_preserved = marginal.iter().zip(g.inputs()).all(|(m, t)| m == t);
    let uniform = Rational::new(1.into(), ((g.a * g.b) as u64).into());
    for (slice, m) in p.chunks_mut(g.a * g.b).zip(&marginal) {
        for v in slice.iter_mut() {
            *v = if m.is_zero() { uniform.clone() } else { &*v / m };
        }
    }
    Ok(Symmetrized { strategy: Strategy::new(g.x, g.y, g.a, g.b, p)?, joint, marginal_preserved })
}

/// One extreme `k` in the bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundTerm {
    pub descriptor: TypeDescriptor,
    /// `F(T_n P, pi_k)^2`.
    pub fidelity_squared: Interval,
    /// `<V^n, pi_k>`.
    pub win: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinettiBound {
    pub relation: Relation,
    pub n: usize,
    /// `|X||Y||A||B|`.
    pub d: usize,
    /// Number of classes `N`.
    pub classes: usize,
    pub terms: Vec<BoundTerm>,
    pub alpha: Interval,
    pub alpha_tight_max: Rational,
    /// Degree of `N alpha(n)^2` in `n`.
    pub degree: u64,
    /// `N * max(alpha(n), alpha_tight_max)^2`.
    pub prefactor: Interval,
    /// `N * alpha(n)^2`.
    pub analytic_prefactor: Interval,
    /// `prefactor * sum_k (1/N) F_k^2 <V^n, pi_k>`.
    pub bound: Interval,
    /// The same with the closed-form `alpha(n)` only.
    pub analytic_bound: Interval,
    /// Winning probability of the supplied strategy.
    pub achieved: Rational,
    pub bits: u32,
}

impl DefinettiBound {
    pub fn certifies_achieved(&self) -> bool {
        self.achieved <= self.bound.lo()
    }
}

/// `N alpha^2 sum_k (1/N) F(T_n P, pi_k)^2 <V^n, pi_k>` for a strategy whose
/// joint weight is exchangeable (parallel) or Markov exchangeable (sequential).
pub fn definetti_upper_bound(rg: &RepeatedGame, strategy: &Strategy, precision: Precision, cap: u64) -> Result<DefinettiBound> {
    let joint = rg.joint(strategy)?;
    let relation = rg.relation();
    let flat = Alphabet::new(joint.alphabet().size())?;
    let n = rg.n;
    let flat_joint = make_distribution(flat.clone(), n, joint.iter().map(|(w, p)| (w.clone(), p.clone())))?;
    let dec = decompose(&flat_joint, &relation, cap)?;
    let achieved = winning_probability(&rg.game, strategy)?;

    // Classes carrying weight, with member count and value.
    let carried: Vec<(Word, Rational, Rational)> = dec
        .index
        .classes
        .iter()
        .zip(&dec.values)
        .filter(|(_, v)| !v.is_zero())
        .map(|(c, v)| Ok((representative(&c.descriptor, n)?, from_biguint(&c.size), v.clone())))
        .collect::<Result<_>>()?;
    let all = enumerate_types(&relation, &flat, n)?;
    let mut pis = Vec::with_capacity(all.len());
    let mut alpha_tight_max = Rational::one();
    for c in &all.classes {
        let tight = alpha_tight(&c.descriptor, n)?;
        if tight > alpha_tight_max {
            alpha_tight_max = tight;
        }
        let pi = empirical_pi(&c.descriptor, n)?;
        let at_carried = carried.iter().map(|(w, _, _)| pi.probability(w)).collect::<Result<Vec<_>>>()?;
        let materialized = pi.materialize(cap)?;
        let win: Rational = materialized.iter().filter(|(w, _)| rg.accepts_word(w)).map(|(_, p)| p).sum();
        pis.push((c.descriptor.clone(), at_carried, win));
    }

    let mut prec = precision;
    loop {
        let bits = prec.bits;
        let alpha_bound = alpha_analytic(&relation, &flat, n, bits)?;
        let alpha = alpha_bound.value.clone();
        let effective = alpha.max(&Interval::from_rational(&alpha_tight_max, bits));
        let mut sum = Interval::zero(bits);
        let mut terms = Vec::with_capacity(pis.len());
        for (descriptor, at_carried, win) in &pis {
            let f = square_of_root_sum(
                carried.iter().zip(at_carried).map(|((_, size, v), q)| (size.clone(), v * q)),
                bits,
            );
            if !win.is_zero() {
                sum = sum + f.mul_rational(win);
            }
            terms.push(BoundTerm { descriptor: descriptor.clone(), fidelity_squared: f, win: win.clone() });
        }
        let classes = pis.len();
        let big_n = Interval::from_rational(&from_u64(classes as u64), bits);
        let prefactor = &big_n * &effective.square();
        let mean = sum.mul_rational(&Rational::new(1.into(), (classes as u64).into()));
        let bound = &prefactor * &mean;
        let analytic_prefactor = &big_n * &alpha.square();
        let analytic_bound = &analytic_prefactor * &mean;
        let undecided = !(achieved <= bound.lo() || achieved > bound.hi());
        if let (true, Some(next)) = (undecided, prec.doubled()) {
            prec = next;
            continue;
        }
        return Ok(DefinettiBound {
            relation,
            n,
            d: flat.size(),
            classes,
            terms,
            alpha,
            alpha_tight_max,
            degree: alpha_bound.degree,
            prefactor,
            analytic_prefactor,
            bound,
            analytic_bound,
            achieved,
            bits,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn chsh_values() {
        let g = Game::chsh();
        let zero = DeterministicStrategy { alice: vec![0, 0], bob: vec![0, 0] };
        assert_eq!(winning_probability(&g, &zero.to_strategy(&g).unwrap()).unwrap(), rat(3, 4));
        // Deterministic CHSH strategies win on 3 or 1 of the 4 input pairs.
        let copy = DeterministicStrategy { alice: vec![0, 1], bob: vec![0, 0] };
        assert_eq!(copy.winning_probability(&g), rat(3, 4));
        let bad = DeterministicStrategy { alice: vec![1, 0], bob: vec![0, 0] };
        assert_eq!(bad.winning_probability(&g), rat(1, 4));
        let (v, w) = classical_value(&g, 100).unwrap();
        assert_eq!(v, rat(3, 4));
        assert_eq!(w.winning_probability(&g), v);
    }

    #[test]
    fn trivial_and_losing_games() {
        assert_eq!(classical_value(&Game::trivial(), 10).unwrap().0, rat(1, 1));
        let t = vec![rat(1, 2), rat(1, 2)];
        let lose = Game::from_fn(2, 1, 2, 2, t, |_, _, _, _| false).unwrap();
        assert_eq!(classical_value(&lose, 10).unwrap().0, rat(0, 1));
        let par = parallel_game(&Game::trivial(), 3, 100).unwrap();
        assert_eq!(classical_value(&par, 10).unwrap().0, rat(1, 1));
    }

    #[test]
    fn swapped_enumeration() {
        // Bob has fewer tables than Alice.
        let t = vec![rat(1, 3); 3];
        let g = Game::from_fn(3, 1, 3, 2, t, |x, _, a, b| a == x && b == 1).unwrap();
        assert!(enumeration_plan(&g).0);
        let (v, w) = classical_value(&g, 100).unwrap();
        assert_eq!(v, rat(1, 1));
        assert_eq!(w, DeterministicStrategy { alice: vec![0, 1, 2], bob: vec![1] });
    }

    #[test]
    fn repetition() {
        let g = Game::chsh();
        assert_eq!(parallel_game(&g, 1, 100).unwrap(), g);
        let g2 = parallel_game(&g, 2, 1000).unwrap();
        assert_eq!(classical_value(&g2, 1000).unwrap().0, rat(5, 8));
        let kernel = SequentialKernel::new(&g, vec![g.inputs().to_vec(); 4]).unwrap();
        assert_eq!(sequential_game(&g, &kernel, 2, 1000).unwrap(), g2);
        let cycle = SequentialKernel::deterministic(&g, &[1, 2, 3, 0]).unwrap();
        assert_eq!(sequential_game(&g, &cycle, 1, 100).unwrap(), g);
        let seq = sequential_game(&g, &cycle, 2, 1000).unwrap();
        assert_eq!(seq.inputs().iter().filter(|p| !p.is_zero()).count(), 4);
        assert_eq!(classical_value(&seq, 1000).unwrap().0, rat(1, 1));
    }

    #[test]
    fn kernels_must_be_stationary() {
        let g = Game::chsh();
        let stuck = vec![vec![rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]; 4];
        assert_eq!(SequentialKernel::new(&g, stuck), Err(Error::KernelNotStationary));
    }

    #[test]
    fn symmetrization_keeps_the_value() {
        let g = Game::chsh();
        let rg = RepeatedGame::new(&g, 2, Repetition::Parallel, 1000).unwrap();
        assert!(rg.weight_is_invariant(1000).unwrap());
        // Alice answers with her first input on both rounds; Bob with 0.
        let alice: Vec<usize> = (0..4).map(|x| if x >= 2 { 3 } else { 0 }).collect();
        let s = DeterministicStrategy { alice, bob: vec![0; 4] }.to_strategy(&rg.game).unwrap();
        let sym = symmetrize_strategy(&rg, &s, &Relation::Exchangeable, 1000).unwrap();
        assert!(sym.marginal_preserved);
        assert_ne!(sym.strategy, s);
        assert_eq!(
            winning_probability(&rg.game, &sym.strategy).unwrap(),
            winning_probability(&rg.game, &s).unwrap()
        );
        let single = DeterministicStrategy { alice: vec![0, 0], bob: vec![0, 0] }.to_strategy(&g).unwrap();
        let tensor = single.tensor_power(2).unwrap();
        assert_eq!(symmetrize_strategy(&rg, &tensor, &Relation::Exchangeable, 1000).unwrap().strategy, tensor);
    }

    #[test]
    fn bound_on_trivial_and_chsh() {
        let rg = RepeatedGame::new(&Game::trivial(), 2, Repetition::Parallel, 100).unwrap();
        let s = Strategy::new(1, 1, 1, 1, vec![rat(1, 1)]).unwrap();
        let b = definetti_upper_bound(&rg, &s, Precision::default(), 1000).unwrap();
        assert_eq!(b.achieved, rat(1, 1));
        assert!(b.certifies_achieved());

        let g = Game::chsh();
        let rg = RepeatedGame::new(&g, 2, Repetition::Parallel, 1000).unwrap();
        let (_, w) = classical_value(&g, 100).unwrap();
        let s = w.to_strategy(&g).unwrap().tensor_power(2).unwrap();
        let s = symmetrize_strategy(&rg, &s, &Relation::Exchangeable, 1000).unwrap().strategy;
        let b = definetti_upper_bound(&rg, &s, Precision::default(), 1 << 20).unwrap();
        assert_eq!(b.achieved, rat(9, 16));
        assert_eq!(b.d, 16);
        assert_eq!(b.degree, 30);
        assert!(b.certifies_achieved());
    }
}
