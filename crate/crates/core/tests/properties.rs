mod common;

use exkit_core::dist::make_distribution;
use exkit_core::games::{symmetrize_strategy, winning_probability, Game, RepeatedGame, Repetition, Strategy as GameStrategy};
use exkit_core::graphs::{arborescence_count, DirectedMultigraph};
use exkit_core::mp::lambda_matrix;
use exkit_core::reduction::{decompose, fidelity_squared};
use exkit_core::relations::{class_members, class_size, type_of};
use exkit_core::{Interval, Rational, Relation, Word};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![
        Just(Relation::Exchangeable),
        Just(Relation::Markov),
        Just(Relation::LMarkov(2)),
    ]
}

fn rational() -> impl Strategy<Value = Rational> {
    (-1000i64..1000, 1i64..500).prop_map(|(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn class_of_a_word_is_closed(rel in relation(), d in 1usize..=3, letters in proptest::collection::vec(0usize..3, 3..=6)) {
        let word = Word(letters.into_iter().map(|l| l % d).collect());
        let alphabet = common::alphabet_for(&[d]);
        let t = type_of(&word, &rel, &alphabet).unwrap();
        let members = class_members(&t, word.len(), 1 << 20).unwrap();
        prop_assert!(members.contains(&word));
        prop_assert_eq!(BigUint::from(members.len()), class_size(&t, word.len()).unwrap());
        let key = common::key(word.letters(), &rel, &[d]);
        for m in &members {
            prop_assert_eq!(&type_of(m, &rel, &alphabet).unwrap(), &t);
            prop_assert_eq!(common::key(m.letters(), &rel, &[d]), key.clone());
        }
    }

    #[test]
    fn interval_arithmetic_encloses(a in rational(), b in rational(), bits in 64u32..200) {
        let (ia, ib) = (Interval::from_rational(&a, bits), Interval::from_rational(&b, bits));
        prop_assert!((&ia + &ib).contains(&(&a + &b)));
        prop_assert!((&ia - &ib).contains(&(&a - &b)));
        prop_assert!((&ia * &ib).contains(&(&a * &b)));
        if !b.is_zero() {
            prop_assert!(ia.checked_div(&ib).unwrap().contains(&(&a / &b)));
        }
        let sq = &a * &a;
        let root = Interval::from_rational(&sq, bits).sqrt();
        prop_assert!(root.contains(&a.abs()));
    }

    #[test]
    fn square_root_brackets(num in 1u64..10_000, den in 1u64..10_000) {
        let r = Rational::new(BigInt::from(num), BigInt::from(den));
        let s = Interval::from_rational(&r, 96).sqrt();
        prop_assert!(&s.lo() * &s.lo() <= r);
        prop_assert!(&s.hi() * &s.hi() >= r);
    }

    #[test]
    fn decomposition_round_trips(rel in relation(), n in 3usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_invariant(&mut rng, &rel, &[2], n);
        let dec = decompose(&p, &rel, 1 << 20).unwrap();
        prop_assert!(dec.weights.iter().sum::<Rational>().is_one());
        prop_assert_eq!(dec.recompose(1 << 20).unwrap(), p);
    }

    #[test]
    fn fidelity_is_at_most_one(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_invariant(&mut rng, &Relation::Exchangeable, &[2], n);
        let q = common::random_invariant(&mut rng, &Relation::Markov, &[2], n);
        let f = fidelity_squared(&p, &q, 128).unwrap();
        prop_assert!(f.lo() <= Rational::one());
        let same = fidelity_squared(&p, &p, 128).unwrap();
        prop_assert!(same.contains(&Rational::one()));
    }

    #[test]
    fn arborescences_match_in_trees(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mult = common::random_multigraph(&mut rng, 4, 7);
        let g = DirectedMultigraph::from_matrix(mult.clone()).unwrap();
        for root in 0..mult.len() {
            prop_assert_eq!(arborescence_count(&g, root), BigUint::from(common::in_tree_count(&mult, root)));
        }
    }

    #[test]
    fn symmetrization_keeps_parallel_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Game::chsh();
        let rg = RepeatedGame::new(&g, 2, Repetition::Parallel, 1 << 16).unwrap();
        let mut p = Vec::new();
        for _ in 0..16 {
            p.extend(common::random_simplex(&mut rng, 16));
        }
        let s = GameStrategy::for_game(&rg.game, p).unwrap();
        let sym = symmetrize_strategy(&rg, &s, &Relation::Exchangeable, 1 << 16).unwrap();
        prop_assert!(sym.marginal_preserved);
        prop_assert_eq!(winning_probability(&rg.game, &sym.strategy).unwrap(), winning_probability(&rg.game, &s).unwrap());
        let twice = symmetrize_strategy(&rg, &sym.strategy, &Relation::Exchangeable, 1 << 16).unwrap();
        prop_assert_eq!(twice.strategy, sym.strategy);
    }
}

#[test]
fn lambda_matrices_are_bistochastic() {
    for d in 1..=3 {
        for n in 1..=6 {
            let m = lambda_matrix(n, d).unwrap();
            assert!(m.is_symmetric() && m.is_doubly_stochastic(), "d={d} n={n}");
        }
    }
}

#[test]
fn non_exchangeable_input_has_a_witness() {
    let alphabet = common::alphabet_for(&[2]);
    let p = make_distribution(
        alphabet,
        2,
        [(Word(vec![0, 1]), common::rat(3, 4)), (Word(vec![1, 0]), common::rat(1, 4))],
    )
    .unwrap();
    let err = decompose(&p, &Relation::Exchangeable, 100).unwrap_err();
    assert_eq!(
        err,
        exkit_core::Error::NotExchangeable { first: Word(vec![0, 1]), second: Word(vec![1, 0]) }
    );
    assert!(decompose(&p, &Relation::Markov, 100).is_ok());
}
