use super::*;
use crate::game::Energy::{Finite, Infinite};
use crate::game::Owner::{Max, Min};
use crate::game::{Energy, EnergyVector};
use crate::oracle::{oracle_lwub, OracleBudget};
use proptest::prelude::*;

fn energies(xs: &[Energy]) -> EnergyVector {
    EnergyVector(xs.to_vec())
}

/// Reconstructed 4-vertex example (v1..v4 = 0..3); v3 is Min's only vertex.
fn example1() -> GameGraph {
    GameGraph::from_triples(
        vec![Max, Max, Min, Max],
        [(0, 0, 0), (1, 0, -12), (1, 2, 0), (2, 0, -14), (2, 3, 6), (3, 2, -6)],
    )
    .unwrap()
}

fn pi_to(g: &GameGraph, target: u32) -> PositionalStrategy {
    let mut pi = PositionalStrategy::lowest_successor(g, Min);
    pi.set(VertexId(2), VertexId(target));
    pi
}

#[test]
fn nonnegative_weights_need_nothing() {
    let g = GameGraph::from_triples(vec![Max, Min, Min], [(0, 1, 0), (1, 2, 3), (2, 0, 1), (1, 1, 0)]).unwrap();
    for b in [0, 1, 10] {
        let r = solve_lwub_with(&g, b, &SolveOptions::audited()).unwrap();
        assert_eq!(r.lwub, energies(&[Finite(0); 3]));
        assert_eq!(r.iterations, 1);
    }
}

#[test]
fn example1_values() {
    let g = example1();
    let r = solve_lwub_with(&g, 15, &SolveOptions::audited()).unwrap();
    assert_eq!(r.lwub, energies(&[Finite(0), Finite(12), Infinite, Infinite]));
}

#[test]
fn example1_replays_narrated_run() {
    let g = example1();
    let options = SolveOptions {
        initial: InitialStrategy::Given(pi_to(&g, 3)),
        ..SolveOptions::audited()
    };
    let r = solve_lwub_with(&g, 15, &options).unwrap();
    use crate::game::Potential::{Finite as F, NegInf};
    assert_eq!(
        r.history,
        vec![
            PotentialVector(vec![F(0), F(0), F(0), F(-6)]),
            PotentialVector(vec![F(0), F(-12), F(-14), NegInf]),
            PotentialVector(vec![F(0), F(-12), NegInf, NegInf]),
        ]
    );
    let targets: Vec<_> = r.min_witness.strategies.iter().map(|p| p.get(VertexId(2)).unwrap()).collect();
    assert_eq!(targets, vec![VertexId(3), VertexId(0), VertexId(3)]);
    assert_eq!(r.min_witness.death_index, vec![None, None, Some(2), Some(1)]);
    // (1.0) then (1.1): two Dijkstra calls in the second evaluation.
    assert_eq!(r.stats.dijkstra_calls, 1 + 2 + 1);
    assert_eq!(r.lwub, energies(&[Finite(0), Finite(12), Infinite, Infinite]));
}

#[test]
fn example1_improvement_switches_back_and_forth() {
    let g = example1();
    let pi2 = pi_to(&g, 3);
    let d0 = evaluate_strategy(&g, 15, &pi2, &PotentialVector::zeros(4)).unwrap();
    let (pi, changed) = improve_strategy(&g, &d0, &pi2).unwrap();
    assert!(changed);
    assert_eq!(pi.get(VertexId(2)), Some(VertexId(0)));
    let d1 = evaluate_strategy(&g, 15, &pi, &d0).unwrap();
    let (pi, changed) = improve_strategy(&g, &d1, &pi).unwrap();
    assert!(changed);
    assert_eq!(pi, pi2);
}

#[test]
fn example1_witness_needs_memory() {
    let g = example1();
    let r = solve_lwub(&g, 15).unwrap();
    let refutation = verify_min_witness(&g, 15, &r.min_witness, VertexId(2), 15, 1 << 20).unwrap();
    assert_eq!(refutation.min_segment_weight(), -20);
    assert_eq!(refutation.trace, vec![VertexId(2), VertexId(3), VertexId(2), VertexId(0)]);
    for target in [0, 3] {
        let restricted = g.restrict_to_strategy(&pi_to(&g, target)).unwrap();
        let v3 = oracle_lwub(&restricted, 15, &OracleBudget::default()).unwrap().get(VertexId(2));
        assert!(v3.is_finite(), "positional strategy to {target} alone wins for Min");
    }
}

#[test]
fn two_vertex_game_as_stated() {
    // m = 0 (Max): m->n −3, m->m 0; n = 1 (Min): n->m +3.
    let g = GameGraph::from_triples(vec![Max, Min], [(0, 1, -3), (0, 0, 0), (1, 0, 3)]).unwrap();
    let r = solve_lwub_with(&g, 3, &SolveOptions::audited()).unwrap();
    assert_eq!(r.lwub, energies(&[Finite(0), Finite(0)]));
    assert_eq!(r.lwub, oracle_lwub(&g, 3, &OracleBudget::default()).unwrap());
}

#[test]
fn two_vertex_game_with_costly_return() {
    let g = GameGraph::from_triples(vec![Max, Min], [(0, 1, -3), (0, 0, 0), (1, 0, -3)]).unwrap();
    let r = solve_lwub_with(&g, 3, &SolveOptions::audited()).unwrap();
    assert_eq!(r.lwub, energies(&[Finite(0), Finite(3)]));
    let r = solve_lwub_with(&g, 2, &SolveOptions::audited()).unwrap();
    assert_eq!(r.lwub, energies(&[Finite(0), Infinite]));
}

#[test]
fn lower_bound_examples() {
    let g = GameGraph::from_triples(vec![Max], [(0, 0, 0)]).unwrap();
    assert_eq!(solve_lb(&g).unwrap().lwub, energies(&[Finite(0)]));
    let g = GameGraph::from_triples(vec![Max], [(0, 0, -1)]).unwrap();
    assert_eq!(solve_lb(&g).unwrap().lwub, energies(&[Infinite]));
    let g = GameGraph::from_triples(vec![Max, Max], [(0, 1, 2), (1, 0, -1)]).unwrap();
    let r = solve_lb(&g).unwrap();
    assert_eq!(r.bound, 2);
    assert_eq!(r.lwub, energies(&[Finite(0), Finite(1)]));
}

#[test]
fn lb_overflow_is_checked() {
    let w = 1i64 << 40;
    let g = GameGraph::from_triples(vec![Max; 4], [(0, 1, w), (1, 2, 0), (2, 3, 0), (3, 0, 0)]).unwrap();
    // (|V|-1)*W*|V| = 3 * 2^40 * 4 fits; push the vertex count up instead.
    assert!(lb_bound(&g).is_ok());
    let n = 1usize << 12;
    let big = GameGraph::from_triples(vec![Max; n], (0..n).map(|v| (v, (v + 1) % n, w))).unwrap();
    assert!(matches!(lb_bound(&big), Err(SolveError::OverflowRisk { .. })));
}

#[test]
fn winning_sign_examples() {
    let g = GameGraph::from_triples(vec![Max, Min], [(0, 1, 1), (1, 0, 0)]).unwrap();
    assert!(winning_sign(&g).unwrap().negative().is_empty());
    let g = GameGraph::from_triples(vec![Min], [(0, 0, -1)]).unwrap();
    assert_eq!(winning_sign(&g).unwrap().negative(), vec![VertexId(0)]);
}

#[test]
fn improvement_switches_on_strict_drop_only() {
    let g = GameGraph::from_triples(vec![Min, Max, Max], [(0, 1, 0), (0, 2, -2), (1, 1, 0), (2, 2, 0)]).unwrap();
    let pi = PositionalStrategy::lowest_successor(&g, Min);
    let (next, changed) = improve_strategy(&g, &PotentialVector::zeros(3), &pi).unwrap();
    assert!(changed);
    assert_eq!(next.get(VertexId(0)), Some(VertexId(2)));

    let g = GameGraph::from_triples(vec![Min, Max], [(0, 1, 0), (0, 0, 4), (1, 0, 1)]).unwrap();
    let pi = PositionalStrategy::lowest_successor(&g, Min);
    let (next, changed) = improve_strategy(&g, &PotentialVector::zeros(2), &pi).unwrap();
    assert!(!changed);
    assert_eq!(next, pi);
}

#[test]
fn steepest_switch_with_lowest_target_tiebreak() {
    // Qualifying values: to 1 → −3, to 2 → −5, to 3 → −5.
    let g = GameGraph::from_triples(
        vec![Min, Max, Max, Max],
        [(0, 1, -3), (0, 2, -5), (0, 3, -5), (1, 1, 0), (2, 2, 0), (3, 3, 0)],
    )
    .unwrap();
    let pi = PositionalStrategy::lowest_successor(&g, Min);
    let (next, _) = improve_strategy(&g, &PotentialVector::zeros(4), &pi).unwrap();
    assert_eq!(next.get(VertexId(0)), Some(VertexId(2)));
}

#[test]
fn max_strategy_follows_forest_and_nonnegative_edges() {
    // m = 0 -> t = 1 weight −2, t self-loop 0; m also has a −9 dead end into 2.
    let g = GameGraph::from_triples(vec![Max, Max, Max], [(0, 2, -9), (0, 1, -2), (1, 1, 0), (2, 2, -1)]).unwrap();
    let r = solve_lwub(&g, 5).unwrap();
    assert_eq!(r.max_strategy.get(VertexId(0)), Some(VertexId(1)));
    assert_eq!(r.max_strategy.get(VertexId(1)), Some(VertexId(1)));
    assert_eq!(r.max_strategy.get(VertexId(2)), Some(VertexId(2)));
}

#[test]
fn self_loop_min_witness() {
    let g = GameGraph::from_triples(vec![Min], [(0, 0, -1)]).unwrap();
    let r = solve_lwub(&g, 5).unwrap();
    assert_eq!(r.min_witness.strategies.len(), 1);
    let refutation = verify_min_witness(&g, 5, &r.min_witness, VertexId(0), 100, 1 << 16).unwrap();
    assert!(refutation.longest_play <= 101);
    assert_eq!(refutation.longest_play, 6);
}

#[test]
fn witness_rejects_winning_start() {
    let g = example1();
    let r = solve_lwub(&g, 15).unwrap();
    assert_eq!(
        verify_min_witness(&g, 15, &r.min_witness, VertexId(1), 15, 1 << 16),
        Err(WitnessError::NotLosing(VertexId(1)))
    );
}

#[test]
fn seeded_initial_strategy_reaches_same_answer() {
    let g = example1();
    for seed in 0..8 {
        let options = SolveOptions {
            initial: InitialStrategy::Seeded(seed),
            ..SolveOptions::audited()
        };
        assert_eq!(
            solve_lwub_with(&g, 15, &options).unwrap().lwub,
            energies(&[Finite(0), Finite(12), Infinite, Infinite])
        );
    }
}

fn arb_game(max_n: usize, max_w: i64) -> impl Strategy<Value = GameGraph> {
    (1usize..=max_n).prop_flat_map(move |n| {
        (
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec((0..n, -max_w..=max_w), n),
            proptest::collection::vec((0..n, 0..n, -max_w..=max_w), 0..=2 * n),
        )
            .prop_map(move |(owners, base, extra)| {
                let owners = owners.into_iter().map(|m| if m { Max } else { Min }).collect();
                let mut triples: Vec<_> = base.into_iter().enumerate().map(|(v, (t, w))| (v, t, w)).collect();
                triples.extend(extra);
                GameGraph::from_triples(owners, triples).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_oracle(g in arb_game(6, 4), b in 0u64..12) {
        let r = solve_lwub_with(&g, b, &SolveOptions::audited()).unwrap();
        prop_assert_eq!(&r.lwub, &oracle_lwub(&g, b, &OracleBudget::default()).unwrap());
        prop_assert!(r.iterations as u128 <= (g.vertex_count() as u128).pow(2) * g.max_abs_weight() as u128 + 1);
    }

    #[test]
    fn extracted_max_strategy_suffices(g in arb_game(6, 4), b in 0u64..12) {
        let r = solve_lwub(&g, b).unwrap();
        let fixed = g.restrict_to_strategy(&r.max_strategy).unwrap();
        let again = oracle_lwub(&fixed, b, &OracleBudget::default()).unwrap();
        for v in g.vertices() {
            if r.lwub.get(v).is_finite() {
                prop_assert_eq!(again.get(v), r.lwub.get(v));
            }
        }
    }

    #[test]
    fn witness_refutes_every_losing_vertex(g in arb_game(6, 4), b in 0u64..10) {
        let r = solve_lwub(&g, b).unwrap();
        for v in g.vertices().filter(|&v| !r.lwub.get(v).is_finite()) {
            for credit in [0, b / 2, b] {
                prop_assert!(verify_min_witness(&g, b, &r.min_witness, v, credit, 1 << 20).is_ok());
            }
        }
    }

    #[test]
    fn bound_monotonicity(g in arb_game(6, 4), b in 0u64..12) {
        let lo = solve_lwub(&g, b).unwrap().lwub;
        let hi = solve_lwub(&g, b + 1).unwrap().lwub;
        prop_assert!(lo.dominates(&hi));
        let lb = solve_lb(&g).unwrap();
        prop_assert!(hi.dominates(&lb.lwub));
        prop_assert_eq!(solve_lwub(&g, lb.bound).unwrap().lwub, lb.lwub);
    }

    #[test]
    fn initial_strategy_does_not_change_answer(g in arb_game(6, 4), b in 0u64..12, seed in any::<u64>()) {
        let options = SolveOptions { initial: InitialStrategy::Seeded(seed), ..SolveOptions::audited() };
        prop_assert_eq!(solve_lwub_with(&g, b, &options).unwrap().lwub, solve_lwub(&g, b).unwrap().lwub);
    }
}
