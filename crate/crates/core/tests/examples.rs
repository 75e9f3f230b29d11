mod common;

use common::rat;
use exkit_core::conditional::{condition, lift_conditional};
use exkit_core::dist::tensor_power;
use exkit_core::games::{
    classical_value, definetti_upper_bound, sequential_game, symmetrize_strategy, DeterministicStrategy, Game,
    RepeatedGame, Repetition, SequentialKernel,
};
use exkit_core::graphs::{eulerian_trajectory_count_bruteforce, DirectedMultigraph};
use exkit_core::reduction::{alpha_analytic, alpha_tight, empirical_pi, verify_flexible_reduction};
use exkit_core::relations::{class_size, enumerate_types, type_of};
use exkit_core::{Alphabet, FiniteDistribution, Interval, Precision, Relation, Word};
use num_bigint::BigUint;

#[test]
fn markov_class_of_the_worked_example() {
    let w = Word::parse_one_indexed("11323122").unwrap();
    let ab = Alphabet::new(3).unwrap();
    let t = type_of(&w, &Relation::Markov, &ab).unwrap();
    assert_eq!(class_size(&t, 8).unwrap(), BigUint::from(12u32));
    assert_eq!(alpha_tight(&t, 8).unwrap(), rat(36, 1));
    let pi = empirical_pi(&t, 8).unwrap();
    assert_eq!(pi.probability(&w).unwrap(), rat(1, 432));
}

#[test]
fn lmarkov_and_exchangeable_counts() {
    let ab = Alphabet::new(2).unwrap();
    let w = Word::parse("00101100").unwrap();
    let t = type_of(&w, &Relation::LMarkov(2), &ab).unwrap();
    assert_eq!(class_size(&t, 8).unwrap(), BigUint::from(2u32));
    assert_eq!(enumerate_types(&Relation::Exchangeable, &ab, 3).unwrap().len(), 4);
}

#[test]
fn trajectory_counts_from_small_graphs() {
    // Vertices 0 and 1: two edges 0 -> 1, one edge 1 -> 0.
    let g = DirectedMultigraph::from_matrix(vec![vec![0, 2], vec![1, 0]]).unwrap();
    assert_eq!(eulerian_trajectory_count_bruteforce(&g, 0, 16).unwrap(), BigUint::from(1u32));
    assert_eq!(eulerian_trajectory_count_bruteforce(&g, 1, 16).unwrap(), BigUint::from(0u32));
}

#[test]
fn tensor_powers_certify() {
    let ab = Alphabet::new(2).unwrap();
    let single = exkit_core::dist::make_distribution(ab, 1, [(Word(vec![0]), rat(1, 3)), (Word(vec![1]), rat(2, 3))])
        .unwrap();
    for n in 2..=5 {
        let p = tensor_power(&single, n).unwrap();
        for relation in [Relation::Exchangeable, Relation::Markov] {
            let cert = verify_flexible_reduction(&p, &relation, Precision::default(), 1 << 16).unwrap();
            assert!(cert.verdict.holds(), "{relation:?} n={n}");
        }
    }
}

#[test]
fn alpha_degrees() {
    let two = Alphabet::new(2).unwrap();
    assert_eq!(alpha_analytic(&Relation::Exchangeable, &two, 5, 128).unwrap().degree, 2);
    assert_eq!(alpha_analytic(&Relation::Markov, &two, 5, 128).unwrap().degree, 9);
    assert_eq!(alpha_analytic(&Relation::LMarkov(2), &two, 5, 128).unwrap().degree, 19);
    let prod = Alphabet::product(&[2, 3]).unwrap();
    let both = Relation::Product(vec![Relation::Exchangeable, Relation::Exchangeable]);
    assert_eq!(alpha_analytic(&both, &prod, 5, 128).unwrap().degree, 2 + 4);
}

#[test]
fn conditional_round_trip_through_lifting() {
    let ab = Alphabet::product(&[2, 2]).unwrap();
    let single = FiniteDistribution::uniform(ab, 1, 10).unwrap();
    let p = tensor_power(&single, 2).unwrap();
    let pc = condition(&p).unwrap();
    let lifted = lift_conditional(&pc, &Relation::Exchangeable, 1000).unwrap();
    assert_eq!(lifted, p);
}

#[test]
fn sequential_cycle_game() {
    let g = Game::chsh();
    let cycle = SequentialKernel::deterministic(&g, &[1, 2, 3, 0]).unwrap();
    let seq = sequential_game(&g, &cycle, 2, 1 << 16).unwrap();
    assert_eq!(seq.inputs().iter().filter(|p| **p != rat(0, 1)).count(), 4);
    assert_eq!(classical_value(&seq, 1 << 16).unwrap().0, common::brute_classical_value(&seq));
}

#[test]
fn chsh_bound_prefactor() {
    let g = Game::chsh();
    let rg = RepeatedGame::new(&g, 2, Repetition::Parallel, 1 << 16).unwrap();
    let single = DeterministicStrategy { alice: vec![0, 0], bob: vec![0, 0] }.to_strategy(&g).unwrap();
    let s = symmetrize_strategy(&rg, &single.tensor_power(2).unwrap(), &Relation::Exchangeable, 1 << 16)
        .unwrap()
        .strategy;
    let b = definetti_upper_bound(&rg, &s, Precision::default(), 1 << 20).unwrap();
    assert_eq!(b.achieved, rat(9, 16));
    assert!(b.certifies_achieved());
    assert_eq!((b.d, b.degree, b.classes), (16, 30, 136));
    let n_alpha_sq = Interval::from_integer(136, b.bits) * b.alpha.square();
    assert_eq!(b.analytic_prefactor, n_alpha_sq);
    // alpha(2) ~ 0.149 is below the tight ratio 2 of a two-letter class.
    assert_eq!(b.alpha_tight_max, rat(2, 1));
    assert!(b.alpha.hi() < b.alpha_tight_max);
    assert_eq!(b.prefactor.exact_value(), Some(&rat(136 * 4, 1)));
}
