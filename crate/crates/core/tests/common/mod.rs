//! Independent oracles: brute-force grouping by hand-built keys, spanning
//! in-tree enumeration, and exhaustive strategy search.
#![allow(dead_code)]

use std::collections::BTreeMap;

use exkit_core::games::Game;
use exkit_core::{Alphabet, FiniteDistribution, Rational, Relation, Word};
use num_bigint::BigInt;
use rand::Rng;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Mixed-radix digits of `letter`, first factor most significant.
pub fn split(letter: usize, factors: &[usize]) -> Vec<usize> {
    let mut out = vec![0; factors.len()];
    let mut rest = letter;
    for (slot, &f) in out.iter_mut().zip(factors).rev() {
        *slot = rest % f;
        rest /= f;
    }
    out
}

fn simple_key(word: &[usize], relation: &Relation) -> Vec<Vec<usize>> {
    match relation {
        Relation::Exchangeable => {
            let mut s = word.to_vec();
            s.sort_unstable();
            vec![s]
        }
        Relation::Markov => simple_key(word, &Relation::LMarkov(1)),
        Relation::LMarkov(ell) => {
            let mut grams: Vec<Vec<usize>> = word.windows(ell + 1).map(<[usize]>::to_vec).collect();
            grams.sort();
            let mut key = vec![word[..*ell].to_vec()];
            key.extend(grams);
            key
        }
        Relation::Product(_) => unreachable!("products are split first"),
    }
}

/// Two words are equivalent iff their keys agree.
pub fn key(word: &[usize], relation: &Relation, factors: &[usize]) -> Vec<Vec<usize>> {
    match relation {
        Relation::Product(parts) => {
            let mut key = Vec::new();
            for (i, part) in parts.iter().enumerate() {
                let component: Vec<usize> = word.iter().map(|&l| split(l, factors)[i]).collect();
                key.push(vec![usize::MAX]);
                key.extend(simple_key(&component, part));
            }
            key
        }
        r => simple_key(word, r),
    }
}

pub fn all_words(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..d).map(move |l| {
                    let mut w = w.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out
}

/// Classes of `V^n` by brute force: key -> members.
pub fn brute_classes(relation: &Relation, factors: &[usize], n: usize) -> BTreeMap<Vec<Vec<usize>>, Vec<Vec<usize>>> {
    let d = factors.iter().product();
    let mut classes: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for w in all_words(d, n) {
        classes.entry(key(&w, relation, factors)).or_default().push(w);
    }
    classes
}

pub fn alphabet_for(factors: &[usize]) -> Alphabet {
    if factors.len() == 1 {
        Alphabet::new(factors[0]).unwrap()
    } else {
        Alphabet::product(factors).unwrap()
    }
}

/// Spanning trees oriented towards `root`: every other vertex picks one
/// outgoing edge and all parent chains end at the root.
pub fn in_tree_count(mult: &[Vec<u64>], root: usize) -> u128 {
    let m = mult.len();
    let others: Vec<usize> = (0..m).filter(|&v| v != root).collect();
    let mut parent = vec![usize::MAX; m];
    fn go(i: usize, others: &[usize], mult: &[Vec<u64>], root: usize, parent: &mut Vec<usize>) -> u128 {
        if i == others.len() {
            for &v in others {
                let mut cur = v;
                let mut steps = 0;
                while cur != root {
                    cur = parent[cur];
                    steps += 1;
                    if steps > parent.len() {
                        return 0;
                    }
                }
            }
            return 1;
        }
        let v = others[i];
        let mut total = 0;
        for p in 0..mult.len() {
            if p != v && mult[v][p] > 0 {
                parent[v] = p;
                total += mult[v][p] as u128 * go(i + 1, others, mult, root, parent);
            }
        }
        total
    }
    go(0, &others, mult, root, &mut parent)
}

/// Random multigraph with at most `max_v` vertices and `max_e` edges.
pub fn random_multigraph<R: Rng>(rng: &mut R, max_v: usize, max_e: usize) -> Vec<Vec<u64>> {
    let m = rng.gen_range(1..=max_v);
    let mut mult = vec![vec![0u64; m]; m];
    for _ in 0..rng.gen_range(0..=max_e) {
        mult[rng.gen_range(0..m)][rng.gen_range(0..m)] += 1;
    }
    mult
}

/// Union of random closed walks through vertex 0, then relabelled onto the
/// vertices it touches: Eulerian and connected.
pub fn random_eulerian<R: Rng>(rng: &mut R, max_v: usize, max_e: usize) -> Vec<Vec<u64>> {
    let m = rng.gen_range(1..=max_v);
    let mut mult = vec![vec![0u64; m]; m];
    let mut edges = 0;
    while edges == 0 || (edges < max_e && rng.gen_bool(0.5)) {
        let len = rng.gen_range(1..=(max_e - edges).max(1));
        let mut cur = 0;
        for step in 0..len {
            let next = if step + 1 == len { 0 } else { rng.gen_range(0..m) };
            mult[cur][next] += 1;
            cur = next;
        }
        edges += len;
    }
    let used: Vec<usize> = (0..m).filter(|&v| mult[v].iter().any(|&k| k > 0) || mult.iter().any(|r| r[v] > 0)).collect();
    used.iter().map(|&i| used.iter().map(|&j| mult[i][j]).collect()).collect()
}

/// A `~`-exchangeable distribution with random integer weights per class.
pub fn random_invariant<R: Rng>(rng: &mut R, relation: &Relation, factors: &[usize], n: usize) -> FiniteDistribution {
    let classes = brute_classes(relation, factors, n);
    let weights: Vec<u64> = loop {
        let w: Vec<u64> = classes.keys().map(|_| if rng.gen_bool(0.6) { rng.gen_range(1..=9) } else { 0 }).collect();
        if w.iter().any(|&x| x > 0) {
            break w;
        }
    };
    let total: u64 = weights.iter().sum();
    let mut entries = Vec::new();
    for ((_, members), &w) in classes.iter().zip(&weights) {
        if w == 0 {
            continue;
        }
        let each = rat(w as i64, (total * members.len() as u64) as i64);
        for m in members {
            entries.push((Word(m.clone()), each.clone()));
        }
    }
    exkit_core::dist::make_distribution(alphabet_for(factors), n, entries).unwrap()
}

/// Exhaustive maximum over every pair of deterministic answer tables.
pub fn brute_classical_value(game: &Game) -> Rational {
    let tables = |answers: usize, len: usize| -> Vec<Vec<usize>> { all_words(answers, len) };
    let mut best = rat(0, 1);
    for alice in tables(game.a, game.x) {
        for bob in tables(game.b, game.y) {
            let mut v = rat(0, 1);
            for x in 0..game.x {
                for y in 0..game.y {
                    if game.accepts(x, y, alice[x], bob[y]) {
                        v += game.input_prob(x, y);
                    }
                }
            }
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// A random rational distribution on `k` outcomes.
pub fn random_simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<Rational> {
    let w: Vec<i64> = loop {
        let w: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=6)).collect();
        if w.iter().any(|&x| x > 0) {
            break w;
        }
    };
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| rat(x, total)).collect()
}
