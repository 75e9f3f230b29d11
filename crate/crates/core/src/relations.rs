//! Partial-exchangeability relations, their types and class sizes.
//!
//! Class sizes come from closed formulas:
//!
//! * exchangeable: the multinomial `n! / prod t_i!`;
//! * Markov and `l`-Markov: the BEST theorem on the class multigraph `G`
//!   augmented by one edge from the end vertex back to the start, `G_0`:
//!   `|C| = T(G_0) * prod_i (outdeg_{G_0}(i) - 1)! / prod_ij t_ij!`, the
//!   product running over the vertices that carry edges;
//! * products: the product of the factor sizes.
//!
//! [`class_members`] instead enumerates `V^n` and serves as the oracle.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::combinatorics::{factorial, multinomial, Compositions};
use crate::error::{Error, Result};
use crate::graphs::{arborescence_count, eulerian_walk, is_eulerian, transition_graph};
use crate::word::{Alphabet, Word};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Exchangeable,
    Markov,
    /// Equal initial `l`-word and equal `(l+1)`-gram counts.
    LMarkov(usize),
    /// One relation per alphabet factor; components may not be products.
    Product(Vec<Relation>),
}

impl Relation {
    pub fn name(&self) -> String {
        match self {
            Relation::Exchangeable => "exchangeable".into(),
            Relation::Markov => "markov".into(),
            Relation::LMarkov(ell) => format!("lmarkov({ell})"),
            Relation::Product(parts) => {
                let names: Vec<String> = parts.iter().map(Relation::name).collect();
                format!("product({})", names.join(","))
            }
        }
    }

    /// Shortest word length the relation is defined on.
    pub fn min_length(&self) -> usize {
        match self {
            Relation::Exchangeable | Relation::Markov => 1,
            Relation::LMarkov(ell) => ell + 1,
            Relation::Product(parts) => parts.iter().map(Relation::min_length).max().unwrap_or(1),
        }
    }

    pub fn validate(&self, alphabet: &Alphabet) -> Result<()> {
        match self {
            Relation::LMarkov(0) => Err(Error::BadParams("l-Markov order must be at least 1".into())),
            Relation::Product(parts) => {
                let factors = alphabet.factors().ok_or(Error::NotFactored)?;
                if parts.len() != factors.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} component relations for {} factors",
                        parts.len(),
                        factors.len()
                    )));
                }
                for (part, &f) in parts.iter().zip(factors) {
                    if matches!(part, Relation::Product(_)) {
                        return Err(Error::BadParams("nested product relations".into()));
                    }
                    part.validate(&Alphabet::new(f)?)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn check_length(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::ZeroLength);
        }
        let needed = self.min_length();
        if n < needed {
            return Err(Error::WordTooShort { length: n, needed });
        }
        Ok(())
    }
}

/// The invariant data of an equivalence class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeDescriptor {
    /// Letter counts `t_i`.
    Exchangeable { counts: Vec<u64> },
    /// First letter and transition counts `t_ij`.
    Markov { start: usize, transitions: Vec<Vec<u64>> },
    /// Initial `l`-word and `(l+1)`-gram counts, indexed in mixed radix base `d`.
    LMarkov { ell: usize, d: usize, initial: Vec<usize>, counts: Vec<u64> },
    Product(Vec<TypeDescriptor>),
}

impl TypeDescriptor {
    pub fn relation(&self) -> Relation {
        match self {
            TypeDescriptor::Exchangeable { .. } => Relation::Exchangeable,
            TypeDescriptor::Markov { .. } => Relation::Markov,
            TypeDescriptor::LMarkov { ell, .. } => Relation::LMarkov(*ell),
            TypeDescriptor::Product(parts) => {
                Relation::Product(parts.iter().map(TypeDescriptor::relation).collect())
            }
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            TypeDescriptor::Exchangeable { counts } => counts.len(),
            TypeDescriptor::Markov { transitions, .. } => transitions.len(),
            TypeDescriptor::LMarkov { d, .. } => *d,
            TypeDescriptor::Product(parts) => parts.iter().map(TypeDescriptor::alphabet_size).product(),
        }
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        match self {
            TypeDescriptor::Product(parts) => {
                let sizes: Vec<usize> = parts.iter().map(TypeDescriptor::alphabet_size).collect();
                Alphabet::product(&sizes)
            }
            other => Alphabet::new(other.alphabet_size()),
        }
    }

    /// Word length implied by the counts.
    pub fn length(&self) -> usize {
        match self {
            TypeDescriptor::Exchangeable { counts } => counts.iter().sum::<u64>() as usize,
            TypeDescriptor::Markov { transitions, .. } => {
                transitions.iter().flatten().sum::<u64>() as usize + 1
            }
            TypeDescriptor::LMarkov { ell, counts, .. } => counts.iter().sum::<u64>() as usize + ell,
            TypeDescriptor::Product(parts) => parts.first().map_or(0, TypeDescriptor::length),
        }
    }

    /// Row sums `t_i` of a Markov type.
    pub fn row_sums(&self) -> Option<Vec<u64>> {
        match self {
            TypeDescriptor::Markov { transitions, .. } => {
                Some(transitions.iter().map(|row| row.iter().sum()).collect())
            }
            _ => None,
        }
    }

    /// Shape checks, and that the counts describe words of length `n`.
    pub fn check_consistent(&self, n: usize) -> Result<()> {
        let bad = |why: String| Err(Error::InconsistentDescriptor(why));
        if n == 0 {
            return Err(Error::ZeroLength);
        }
        match self {
            TypeDescriptor::Exchangeable { counts } if counts.is_empty() => {
                return bad("empty count vector".into())
            }
            TypeDescriptor::Markov { start, transitions } => {
                let d = transitions.len();
                if d == 0 || transitions.iter().any(|r| r.len() != d) {
                    return bad("transition matrix is not square".into());
                }
                if *start >= d {
                    return bad(format!("start letter {start} outside alphabet of size {d}"));
                }
            }
            TypeDescriptor::LMarkov { ell, d, initial, counts } => {
                if *ell == 0 || *d == 0 {
                    return bad("l-Markov order and alphabet must be positive".into());
                }
                if initial.len() != *ell || initial.iter().any(|&l| l >= *d) {
                    return bad("initial word has the wrong length or letters".into());
                }
                let grams = d.checked_pow(*ell as u32 + 1);
                if grams != Some(counts.len()) {
                    return bad("gram count tensor has the wrong size".into());
                }
            }
            TypeDescriptor::Product(parts) => {
                if parts.is_empty() {
                    return bad("empty product".into());
                }
                for part in parts {
                    if matches!(part, TypeDescriptor::Product(_)) {
                        return bad("nested product".into());
                    }
                    part.check_consistent(n)?;
                }
                return Ok(());
            }
            _ => {}
        }
        if self.length() != n {
            return bad(format!("counts describe words of length {}, not {n}", self.length()));
        }
        Ok(())
    }
}

pub fn type_of(word: &Word, relation: &Relation, alphabet: &Alphabet) -> Result<TypeDescriptor> {
    let n = word.len();
    relation.check_length(n)?;
    alphabet.check_word(word, n)?;
    let d = alphabet.size();
    let letters = word.letters();
    Ok(match relation {
        Relation::Exchangeable => {
            let mut counts = vec![0; d];
            for &l in letters {
                counts[l] += 1;
            }
            TypeDescriptor::Exchangeable { counts }
        }
        Relation::Markov => {
            let mut transitions = vec![vec![0; d]; d];
            for pair in letters.windows(2) {
                transitions[pair[0]][pair[1]] += 1;
            }
            TypeDescriptor::Markov { start: letters[0], transitions }
        }
        Relation::LMarkov(ell) => {
            let ell = *ell;
            if ell == 0 {
                return Err(Error::BadParams("l-Markov order must be at least 1".into()));
            }
            let grams = d
                .checked_pow(ell as u32 + 1)
                .ok_or_else(|| Error::BadParams("gram tensor too large".into()))?;
            let mut counts = vec![0; grams];
            for window in letters.windows(ell + 1) {
                counts[window.iter().fold(0, |acc, &l| acc * d + l)] += 1;
            }
            TypeDescriptor::LMarkov { ell, d, initial: letters[..ell].to_vec(), counts }
        }
        Relation::Product(parts) => {
            relation.validate(alphabet)?;
            let mut out = Vec::with_capacity(parts.len());
            for (i, part) in parts.iter().enumerate() {
                let component = word.project(alphabet, i)?;
                out.push(type_of(&component, part, &alphabet.factor(i)?)?);
            }
            TypeDescriptor::Product(out)
        }
    })
}

/// True iff some word of length `n` has this type.
pub fn is_nonempty(descriptor: &TypeDescriptor, n: usize) -> Result<bool> {
    descriptor.check_consistent(n)?;
    match descriptor {
        TypeDescriptor::Exchangeable { .. } => Ok(true),
        TypeDescriptor::Markov { .. } | TypeDescriptor::LMarkov { .. } => {
            match transition_graph(descriptor, n) {
                Ok(tg) => Ok(is_eulerian(&tg.augmented)),
                Err(Error::NoValidEnd) => Ok(false),
                Err(e) => Err(e),
            }
        }
        TypeDescriptor::Product(parts) => {
            for part in parts {
                if !is_nonempty(part, n)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Exact class size from the closed formulas; 0 for empty classes.
pub fn class_size(descriptor: &TypeDescriptor, n: usize) -> Result<BigUint> {
    if !is_nonempty(descriptor, n)? {
        return Ok(BigUint::zero());
    }
    match descriptor {
        TypeDescriptor::Exchangeable { counts } => Ok(multinomial(counts)),
        TypeDescriptor::Markov { .. } | TypeDescriptor::LMarkov { .. } => {
            let tg = transition_graph(descriptor, n)?;
            let support = tg.augmented.support();
            let g0 = tg.augmented.induced(&support);
            let root = support.iter().position(|&v| v == tg.start).expect("start carries the extra edge");
            let trees = arborescence_count(&g0, root);
            let deg = g0.degree_profile();
            let numer = deg.outdeg.iter().fold(trees, |acc, &k| acc * factorial(k - 1));
            let denom = tg.graph.matrix().iter().flatten().fold(BigUint::one(), |acc, &k| acc * factorial(k));
            Ok(numer / denom)
        }
        TypeDescriptor::Product(parts) => {
            let mut size = BigUint::one();
            for part in parts {
                size *= class_size(part, n)?;
            }
            Ok(size)
        }
    }
}

/// The BEST evaluation for a Markov type written as
/// `t_w * T(G_0) * prod (t_i - 1)! / prod t_ij!`, `w` the end vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestBreakdown {
    pub end: usize,
    pub t_end: u64,
    pub arborescences: BigUint,
    /// `prod_i (t_i - 1)!` over letters that are left at least once.
    pub factorial_product: BigUint,
    /// `prod_ij t_ij!`.
    pub multiplicity_product: BigUint,
    pub size: BigUint,
}

/// Term-by-term BEST evaluation of a Markov type. `None` when some vertex that
/// carries edges is never left (`t_i = 0` makes `(t_i - 1)!` undefined).
pub fn best_breakdown(descriptor: &TypeDescriptor, n: usize) -> Result<Option<BestBreakdown>> {
    let TypeDescriptor::Markov { transitions, .. } = descriptor else {
        return Err(Error::InconsistentDescriptor("BEST breakdown needs a Markov type".into()));
    };
    if !is_nonempty(descriptor, n)? {
        return Err(Error::EmptyClass);
    }
    let tg = transition_graph(descriptor, n)?;
    let rows = descriptor.row_sums().expect("Markov type");
    let support = tg.augmented.support();
    if support.iter().any(|&i| rows[i] == 0) {
        return Ok(None);
    }
    let root = support.iter().position(|&v| v == tg.start).expect("start in support");
    let arborescences = arborescence_count(&tg.augmented.induced(&support), root);
    let factorial_product = support.iter().fold(BigUint::one(), |acc, &i| acc * factorial(rows[i] - 1));
    let multiplicity_product =
        transitions.iter().flatten().fold(BigUint::one(), |acc, &k| acc * factorial(k));
    let t_end = rows[tg.end];
    let size = BigUint::from(t_end) * &arborescences * &factorial_product / &multiplicity_product;
    Ok(Some(BestBreakdown {
        end: tg.end,
        t_end,
        arborescences,
        factorial_product,
        multiplicity_product,
        size,
    }))
}

/// A canonical member of a nonempty class.
pub fn representative(descriptor: &TypeDescriptor, n: usize) -> Result<Word> {
    if !is_nonempty(descriptor, n)? {
        return Err(Error::EmptyClass);
    }
    match descriptor {
        TypeDescriptor::Exchangeable { counts } => Ok(Word(
            counts.iter().enumerate().flat_map(|(i, &c)| core::iter::repeat(i).take(c as usize)).collect(),
        )),
        TypeDescriptor::Markov { .. } => {
            let tg = transition_graph(descriptor, n)?;
            eulerian_walk(&tg.graph, tg.start).map(Word).ok_or(Error::EmptyClass)
        }
        TypeDescriptor::LMarkov { d, initial, .. } => {
            let tg = transition_graph(descriptor, n)?;
            let nodes = eulerian_walk(&tg.graph, tg.start).ok_or(Error::EmptyClass)?;
            let mut letters = initial.clone();
            letters.extend(nodes[1..].iter().map(|&node| node % d));
            debug_assert_eq!(letters.len(), n);
            Ok(Word(letters))
        }
        TypeDescriptor::Product(parts) => {
            let reps = parts.iter().map(|p| representative(p, n)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Word> = reps.iter().collect();
            Word::zip(&descriptor.alphabet()?, &refs)
        }
    }
}

/// Every word of the class, by enumerating `V^n` (capped).
pub fn class_members(descriptor: &TypeDescriptor, n: usize, cap: u64) -> Result<Vec<Word>> {
    descriptor.check_consistent(n)?;
    let alphabet = descriptor.alphabet()?;
    let relation = descriptor.relation();
    let mut out = Vec::new();
    for word in alphabet.words(n, cap)? {
        if &type_of(&word, &relation, &alphabet)? == descriptor {
            out.push(word);
        }
    }
    Ok(out)
}

/// One nonempty class of a [`ClassIndex`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassEntry {
    pub descriptor: TypeDescriptor,
    pub size: BigUint,
}

/// All nonempty classes of a relation on `V^n`, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassIndex {
    pub relation: Relation,
    pub alphabet: Alphabet,
    pub n: usize,
    pub classes: Vec<ClassEntry>,
}

impl ClassIndex {
    /// `N`, the number of nonempty classes.
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// `sum |C_k|`, which equals `d^n`.
    pub fn total(&self) -> BigUint {
        self.classes.iter().map(|c| &c.size).sum()
    }

    pub fn position(&self, descriptor: &TypeDescriptor) -> Option<usize> {
        self.classes.binary_search_by(|c| c.descriptor.cmp(descriptor)).ok()
    }
}

/// Enumerates nonempty types from their counts, without visiting `V^n`.
pub fn enumerate_types(relation: &Relation, alphabet: &Alphabet, n: usize) -> Result<ClassIndex> {
    relation.validate(alphabet)?;
    relation.check_length(n)?;
    let descriptors = enumerate_descriptors(relation, alphabet, n)?;
    let mut classes = descriptors
        .into_iter()
        .map(|descriptor| {
            let size = class_size(&descriptor, n)?;
            Ok(ClassEntry { descriptor, size })
        })
        .collect::<Result<Vec<_>>>()?;
    classes.sort_by(|a, b| a.descriptor.cmp(&b.descriptor));
    Ok(ClassIndex { relation: relation.clone(), alphabet: alphabet.clone(), n, classes })
}

fn enumerate_descriptors(relation: &Relation, alphabet: &Alphabet, n: usize) -> Result<Vec<TypeDescriptor>> {
    let d = alphabet.size();
    let mut out = Vec::new();
    match relation {
        Relation::Exchangeable => {
            out.extend(Compositions::new(n as u64, d).map(|counts| TypeDescriptor::Exchangeable { counts }));
        }
        Relation::Markov => {
            for start in 0..d {
                for flat in Compositions::new(n as u64 - 1, d * d) {
                    let transitions: Vec<Vec<u64>> = flat.chunks(d).map(<[u64]>::to_vec).collect();
                    let t = TypeDescriptor::Markov { start, transitions };
                    if is_nonempty(&t, n)? {
                        out.push(t);
                    }
                }
            }
        }
        Relation::LMarkov(ell) => {
            let ell = *ell;
            let grams = d
                .checked_pow(ell as u32 + 1)
                .ok_or_else(|| Error::BadParams("gram tensor too large".into()))?;
            for initial in crate::word::Words::new(d, ell) {
                for counts in Compositions::new((n - ell) as u64, grams) {
                    let t = TypeDescriptor::LMarkov { ell, d, initial: initial.0.clone(), counts };
                    if is_nonempty(&t, n)? {
                        out.push(t);
                    }
                }
            }
        }
        Relation::Product(parts) => {
            let mut combos: Vec<Vec<TypeDescriptor>> = vec![Vec::new()];
            for (i, part) in parts.iter().enumerate() {
                let factor = alphabet.factor(i)?;
                let options = enumerate_descriptors(part, &factor, n)?;
                combos = combos
                    .into_iter()
                    .flat_map(|prefix| {
                        options.iter().map(move |o| {
                            let mut next = prefix.clone();
                            next.push(o.clone());
                            next
                        })
                    })
                    .collect();
            }
            out.extend(combos.into_iter().map(TypeDescriptor::Product));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    fn ab(d: usize) -> Alphabet {
        Alphabet::new(d).unwrap()
    }

    #[test]
    fn worked_markov_type() {
        let w = Word::parse_one_indexed("11323122").unwrap();
        let t = type_of(&w, &Relation::Markov, &ab(3)).unwrap();
        assert_eq!(
            t,
            TypeDescriptor::Markov { start: 0, transitions: vec![vec![1, 1, 1], vec![0, 1, 1], vec![1, 1, 0]] }
        );
        assert_eq!(class_size(&t, 8).unwrap(), BigUint::from(12u32));
        let best = best_breakdown(&t, 8).unwrap().unwrap();
        assert_eq!((best.end, best.t_end), (1, 2));
        assert_eq!(best.arborescences, BigUint::from(3u32));
        assert_eq!(best.factorial_product, BigUint::from(2u32));
        assert_eq!(best.size, BigUint::from(12u32));
        let e = type_of(&w, &Relation::Exchangeable, &ab(3)).unwrap();
        assert_eq!(e, TypeDescriptor::Exchangeable { counts: vec![3, 3, 2] });
        assert_eq!(class_size(&e, 8).unwrap(), BigUint::from(560u32));
    }

    #[test]
    fn nonempty_examples() {
        let m = |start, t: Vec<Vec<u64>>| TypeDescriptor::Markov { start, transitions: t };
        assert!(is_nonempty(&m(0, vec![vec![0, 1], vec![0, 0]]), 2).unwrap());
        assert!(!is_nonempty(&m(0, vec![vec![0, 0], vec![1, 0]]), 2).unwrap());
        let split = m(0, vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]);
        assert!(!is_nonempty(&split, 4).unwrap());
        assert_eq!(class_size(&split, 4).unwrap(), BigUint::zero());
        assert!(matches!(is_nonempty(&split, 5), Err(Error::InconsistentDescriptor(_))));
        assert!(is_nonempty(&m(1, vec![vec![0, 0], vec![0, 0]]), 1).unwrap());
    }

    #[test]
    fn lmarkov_worked_type() {
        let w = Word::parse("00101100").unwrap();
        let t = type_of(&w, &Relation::LMarkov(2), &ab(2)).unwrap();
        assert_eq!(class_size(&t, 8).unwrap(), BigUint::from(2u32));
        let members = class_members(&t, 8, 1 << 20).unwrap();
        let expected: Vec<Word> = ["00101100", "00110100"].iter().map(|s| Word::parse(s).unwrap()).collect();
        assert_eq!(members, expected);
        let rep = representative(&t, 8).unwrap();
        assert!(members.contains(&rep));
    }

    #[test]
    fn product_types() {
        let pair = Alphabet::product(&[2, 2]).unwrap();
        let rel = Relation::Product(vec![Relation::Exchangeable, Relation::Exchangeable]);
        // ((1,1),(2,1),(2,2)) and ((1,2),(2,1),(2,1))
        let a = Word(vec![0, 2, 3]);
        let b = Word(vec![1, 2, 2]);
        let ta = type_of(&a, &rel, &pair).unwrap();
        assert_eq!(ta, type_of(&b, &rel, &pair).unwrap());
        assert_eq!(
            ta,
            TypeDescriptor::Product(vec![
                TypeDescriptor::Exchangeable { counts: vec![1, 2] },
                TypeDescriptor::Exchangeable { counts: vec![2, 1] },
            ])
        );
        assert_eq!(class_size(&ta, 3).unwrap(), BigUint::from(9u32));
        assert!(type_of(&a, &rel, &ab(4)).is_err());
    }

    #[test]
    fn small_indices() {
        let idx = enumerate_types(&Relation::Exchangeable, &ab(2), 3).unwrap();
        let sizes: Vec<u32> = idx.classes.iter().map(|c| c.size.clone().try_into().unwrap()).collect();
        assert_eq!(idx.len(), 4);
        assert_eq!(sizes.iter().sum::<u32>(), 8);
        let markov = enumerate_types(&Relation::Markov, &ab(2), 3).unwrap();
        assert_eq!(markov.len(), 8);
        assert!(markov.classes.iter().all(|c| c.size == BigUint::one()));
        assert_eq!(enumerate_types(&Relation::Exchangeable, &ab(3), 8).unwrap().len(), 45);
    }

    #[test]
    fn partition_matches_bruteforce_grouping() {
        for relation in [Relation::Markov, Relation::LMarkov(2), Relation::LMarkov(1)] {
            for n in relation.min_length()..=6 {
                let alphabet = ab(2);
                let mut groups: BTreeMap<TypeDescriptor, u32> = BTreeMap::new();
                for w in alphabet.words(n, 1 << 20).unwrap() {
                    *groups.entry(type_of(&w, &relation, &alphabet).unwrap()).or_default() += 1;
                }
                let idx = enumerate_types(&relation, &alphabet, n).unwrap();
                let from_index: BTreeMap<TypeDescriptor, u32> = idx
                    .classes
                    .iter()
                    .map(|c| (c.descriptor.clone(), c.size.clone().try_into().unwrap()))
                    .collect();
                assert_eq!(groups, from_index, "{relation:?} n={n}");
            }
        }
    }

    #[test]
    fn length_guards() {
        let w = Word::parse("01").unwrap();
        assert!(matches!(
            type_of(&w, &Relation::LMarkov(2), &ab(2)),
            Err(Error::WordTooShort { length: 2, needed: 3 })
        ));
        assert!(enumerate_types(&Relation::Markov, &ab(2), 0).is_err());
        assert!(Relation::LMarkov(0).validate(&ab(2)).is_err());
    }
}
