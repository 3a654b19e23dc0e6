//! Brute-force ground truth for small games.
//!
//! `oracle_lwub` unfolds the game over `(vertex, energy)` pairs with energy in
//! `0..=b` and solves the resulting safety game: an edge of weight `w` moves
//! `(v, e)` to `(u, min(e + w, b))`, or to a losing sink when `e + w < 0`.
//!
//! The "no segment below −b" condition needs no separate tracking. Energy never
//! exceeds `b`, and truncation only lowers it, so a segment of weight `< −b`
//! ends with energy `<= b + weight < 0`. Conversely, if energy first drops
//! below zero at some step, look at the last truncation before it: if there
//! was one, the energy was `b` there and the segment since then weighs `< −b`;
//! if there was none, the prefix sum plus the initial credit is negative.
//!
//! `oracle_value_sign` enumerates every pair of positional strategies, which is
//! sound because both players have optimal positional strategies for the mean
//! payoff objective.

use std::collections::VecDeque;

use thiserror::Error;

use crate::game::{
    lower_bound_reduction, Energy, EnergyVector, GameGraph, Owner, SignPartition, ValueSign, VertexId,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle needs {required} {what}, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u64,
    },
}

/// Explicit size limits for the brute-force oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    /// Maximum `|V|·(b+1)` for the energy-state game.
    pub states: u64,
    /// Maximum number of positional strategy pairs enumerated.
    pub strategy_pairs: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            states: 1_000_000,
            strategy_pairs: 100_000,
        }
    }
}

/// Finite unfolding of a game over `(vertex, clamped energy)` states.
pub struct EnergyStateSpace<'g> {
    graph: &'g GameGraph,
    bound: u64,
    width: usize,
}

impl<'g> EnergyStateSpace<'g> {
    pub fn new(graph: &'g GameGraph, bound: u64, budget: &OracleBudget) -> Result<Self, OracleError> {
        let required = graph.vertex_count() as u128 * (bound as u128 + 1);
        if required > budget.states as u128 {
            return Err(OracleError::BudgetExceeded {
                what: "energy states",
                required,
                budget: budget.states,
            });
        }
        Ok(EnergyStateSpace {
            graph,
            bound,
            width: bound as usize + 1,
        })
    }

    pub fn state_count(&self) -> usize {
        self.graph.vertex_count() * self.width
    }

    #[inline]
    fn id(&self, v: VertexId, e: u64) -> usize {
        v.index() * self.width + e as usize
    }

    /// Successor energy, or `None` for the losing sink.
    #[inline]
    pub fn step(&self, energy: u64, weight: i64) -> Option<u64> {
        let next = energy as i128 + weight as i128;
        (next >= 0).then(|| next.min(self.bound as i128) as u64)
    }

    /// Marks every state from which Min can force the losing sink.
    fn losing_states(&self) -> Vec<bool> {
        let g = self.graph;
        let mut lost = vec![false; self.state_count()];
        let mut remaining = vec![0usize; self.state_count()];
        let mut queue = VecDeque::new();

        // Seeds: states with a transition straight into the sink.
        for v in g.vertices() {
            let owner = g.owner(v);
            for e in 0..=self.bound {
                let s = self.id(v, e);
                remaining[s] = g.out_edge_ids(v).len();
                for edge in g.out_edges(v) {
                    if self.step(e, edge.weight).is_none() {
                        remaining[s] -= 1;
                    }
                }
                let seed = match owner {
                    Owner::Min => remaining[s] < g.out_edge_ids(v).len(),
                    Owner::Max => remaining[s] == 0,
                };
                if seed {
                    lost[s] = true;
                    queue.push_back((v, e));
                }
            }
        }

        while let Some((u, e_succ)) = queue.pop_front() {
            for edge in g.in_edges(u) {
                let x = edge.source;
                // Energies e with min(e + w, b) == e_succ and e + w >= 0.
                let preds: Box<dyn Iterator<Item = u64>> = if e_succ < self.bound {
                    let e = e_succ as i128 - edge.weight as i128;
                    Box::new((0..=self.bound as i128).contains(&e).then_some(e as u64).into_iter())
                } else {
                    let lo = (self.bound as i128 - edge.weight as i128).max(0);
                    Box::new((lo..=self.bound as i128).map(|e| e as u64))
                };
                for e in preds {
                    let s = self.id(x, e);
                    if lost[s] {
                        continue;
                    }
                    let falls = match g.owner(x) {
                        Owner::Min => true,
                        Owner::Max => {
                            remaining[s] -= 1;
                            remaining[s] == 0
                        }
                    };
                    if falls {
                        lost[s] = true;
                        queue.push_back((x, e));
                    }
                }
            }
        }
        lost
    }

    /// Smallest surviving energy per vertex, `∞` when none survives.
    pub fn solve(&self) -> EnergyVector {
        let lost = self.losing_states();
        EnergyVector(
            self.graph
                .vertices()
                .map(|v| {
                    (0..=self.bound)
                        .find(|&e| !lost[self.id(v, e)])
                        .map_or(Energy::Infinite, Energy::Finite)
                })
                .collect(),
        )
    }
}

/// `lwub_b` by brute force over the energy-state game.
pub fn oracle_lwub(graph: &GameGraph, bound: u64, budget: &OracleBudget) -> Result<EnergyVector, OracleError> {
    Ok(EnergyStateSpace::new(graph, bound, budget)?.solve())
}

/// `lb`, as `lwub` at `b = (|V| − 1)·W`.
pub fn oracle_lb(graph: &GameGraph, budget: &OracleBudget) -> Result<EnergyVector, OracleError> {
    let bound = lower_bound_reduction(graph).ok_or(OracleError::BudgetExceeded {
        what: "energy states",
        required: u128::MAX,
        budget: budget.states,
    })?;
    oracle_lwub(graph, bound, budget)
}

/// Sign of `ν` per vertex by enumerating all positional strategy pairs.
///
/// `ν(v) >= 0` iff some Max strategy makes every Min strategy's play from `v`
/// end in a non-negative cycle. Parallel edges are enumerated as distinct
/// choices.
pub fn oracle_value_sign(graph: &GameGraph, budget: &OracleBudget) -> Result<SignPartition, OracleError> {
    let n = graph.vertex_count();
    let count_choices = |owner: Owner| -> u128 {
        graph
            .vertices_of(owner)
            .map(|v| graph.out_edge_ids(v).len() as u128)
            .try_fold(1u128, |acc, d| acc.checked_mul(d))
            .unwrap_or(u128::MAX)
    };
    let pairs = count_choices(Owner::Max).saturating_mul(count_choices(Owner::Min));
    if pairs > budget.strategy_pairs as u128 {
        return Err(OracleError::BudgetExceeded {
            what: "strategy pairs",
            required: pairs,
            budget: budget.strategy_pairs,
        });
    }

    let max_vertices: Vec<VertexId> = graph.vertices_of(Owner::Max).collect();
    let min_vertices: Vec<VertexId> = graph.vertices_of(Owner::Min).collect();
    // chosen[v] is an index into v's out-edges.
    let mut chosen = vec![0usize; n];
    let mut nonneg = vec![false; n];

    for_each_choice(graph, &max_vertices, &mut chosen, &mut |chosen| {
        // Under this σ: v survives iff every π ends in a non-negative cycle.
        let mut all_pi_ok = vec![true; n];
        let mut local = chosen.to_vec();
        for_each_choice(graph, &min_vertices, &mut local, &mut |choice| {
            let cycle_sign = terminal_cycle_nonneg(graph, choice);
            for v in 0..n {
                all_pi_ok[v] &= cycle_sign[v];
            }
        });
        for v in 0..n {
            nonneg[v] |= all_pi_ok[v];
        }
    });

    Ok(SignPartition(
        nonneg
            .into_iter()
            .map(|ok| if ok { ValueSign::NonNegative } else { ValueSign::Negative })
            .collect(),
    ))
}

/// Calls `f` once per assignment of out-edge indices to `vertices`.
fn for_each_choice(graph: &GameGraph, vertices: &[VertexId], chosen: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    for &v in vertices {
        chosen[v.index()] = 0;
    }
    loop {
        f(chosen);
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == vertices.len() {
                return;
            }
            let v = vertices[k];
            chosen[v.index()] += 1;
            if chosen[v.index()] < graph.out_edge_ids(v).len() {
                break;
            }
            chosen[v.index()] = 0;
            k += 1;
        }
    }
}

/// For the functional graph given by `choice`, whether the cycle eventually
/// reached from each vertex has non-negative weight.
fn terminal_cycle_nonneg(graph: &GameGraph, choice: &[usize]) -> Vec<bool> {
    let n = graph.vertex_count();
    let next = |v: usize| graph.edge(graph.out_edge_ids(VertexId::from(v))[choice[v]]);
    let mut result: Vec<Option<bool>> = vec![None; n];
    let mut on_path = vec![usize::MAX; n];
    for start in 0..n {
        if result[start].is_some() {
            continue;
        }
        let mut path = Vec::new();
        let mut v = start;
        while result[v].is_none() && on_path[v] == usize::MAX {
            on_path[v] = path.len();
            path.push(v);
            v = next(v).target.index();
        }
        let verdict = match result[v] {
            Some(r) => r,
            None => {
                let from = on_path[v];
                let w: i64 = path[from..].iter().map(|&x| next(x).weight).sum();
                w >= 0
            }
        };
        for &x in &path {
            result[x] = Some(verdict);
            on_path[x] = usize::MAX;
        }
    }
    result.into_iter().map(|r| r.expect("every vertex resolved")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Owner::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn budget() -> OracleBudget {
        OracleBudget::default()
    }

    fn fin(xs: &[u64]) -> EnergyVector {
        EnergyVector(xs.iter().map(|&x| Energy::Finite(x)).collect())
    }

    /// Textbook greatest fixpoint: repeatedly sweep all states in a shuffled
    /// order, dropping any whose owner cannot stay in the safe set.
    fn naive_lwub(g: &GameGraph, b: u64, seed: u64) -> EnergyVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let width = b as usize + 1;
        let mut safe = vec![true; g.vertex_count() * width];
        let mut order: Vec<(VertexId, u64)> = g.vertices().flat_map(|v| (0..=b).map(move |e| (v, e))).collect();
        loop {
            order.shuffle(&mut rng);
            let mut changed = false;
            for &(v, e) in &order {
                if !safe[v.index() * width + e as usize] {
                    continue;
                }
                let mut ok = g.out_edges(v).map(|edge| {
                    let next = e as i64 + edge.weight;
                    next >= 0 && safe[edge.target.index() * width + next.min(b as i64) as usize]
                });
                let stays = match g.owner(v) {
                    Max => ok.any(|x| x),
                    Min => ok.all(|x| x),
                };
                if !stays {
                    safe[v.index() * width + e as usize] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        EnergyVector(
            g.vertices()
                .map(|v| {
                    (0..=b)
                        .find(|&e| safe[v.index() * width + e as usize])
                        .map_or(Energy::Infinite, Energy::Finite)
                })
                .collect(),
        )
    }

    #[test]
    fn zero_loop_needs_nothing() {
        let g = GameGraph::from_triples(vec![Max], [(0, 0, 0)]).unwrap();
        assert_eq!(oracle_lwub(&g, 0, &budget()).unwrap(), fin(&[0]));
    }

    #[test]
    fn negative_loop_is_lost() {
        let g = GameGraph::from_triples(vec![Max], [(0, 0, -1)]).unwrap();
        for b in [0, 1, 7, 100] {
            assert_eq!(oracle_lwub(&g, b, &budget()).unwrap(), EnergyVector(vec![Energy::Infinite]));
        }
    }

    #[test]
    fn single_drop_needs_bound() {
        // u -> v weight −4, v self-loop 0.
        let g = GameGraph::from_triples(vec![Max, Max], [(0, 1, -4), (1, 1, 0)]).unwrap();
        assert_eq!(oracle_lwub(&g, 4, &budget()).unwrap(), fin(&[4, 0]));
        assert_eq!(
            oracle_lwub(&g, 3, &budget()).unwrap(),
            EnergyVector(vec![Energy::Infinite, Energy::Finite(0)])
        );
    }

    #[test]
    fn lower_bound_examples() {
        let g = GameGraph::from_triples(vec![Max], [(0, 0, 0)]).unwrap();
        assert_eq!(oracle_lb(&g, &budget()).unwrap(), fin(&[0]));
        let g = GameGraph::from_triples(vec![Max], [(0, 0, -1)]).unwrap();
        assert_eq!(oracle_lb(&g, &budget()).unwrap(), EnergyVector(vec![Energy::Infinite]));
        let g = GameGraph::from_triples(vec![Max, Max], [(0, 1, 2), (1, 0, -1)]).unwrap();
        assert_eq!(oracle_lb(&g, &budget()).unwrap(), fin(&[0, 1]));
    }

    #[test]
    fn budget_is_enforced() {
        let g = GameGraph::from_triples(vec![Max], [(0, 0, 0)]).unwrap();
        let tiny = OracleBudget {
            states: 10,
            strategy_pairs: 1,
        };
        assert_eq!(
            oracle_lwub(&g, 10, &tiny),
            Err(OracleError::BudgetExceeded {
                what: "energy states",
                required: 11,
                budget: 10
            })
        );
        let g = GameGraph::from_triples(vec![Max, Min], [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 0)]).unwrap();
        assert!(oracle_value_sign(&g, &tiny).is_err());
    }

    #[test]
    fn value_sign_examples() {
        let g = GameGraph::from_triples(vec![Max, Min], [(0, 1, 3), (1, 0, 1), (1, 1, 2)]).unwrap();
        assert_eq!(oracle_value_sign(&g, &budget()).unwrap().negative(), vec![]);
        let g = GameGraph::from_triples(vec![Max], [(0, 0, -1)]).unwrap();
        assert_eq!(oracle_value_sign(&g, &budget()).unwrap().negative(), vec![VertexId(0)]);
        // Min at 1 can take the −5 loop; Max at 0 can keep a +1 loop.
        let g = GameGraph::from_triples(vec![Max, Min], [(0, 0, 1), (0, 1, 0), (1, 1, -5), (1, 0, 0)]).unwrap();
        let signs = oracle_value_sign(&g, &budget()).unwrap();
        assert_eq!(signs.nonnegative(), vec![VertexId(0)]);
        assert_eq!(signs.negative(), vec![VertexId(1)]);
    }

    fn arb_game() -> impl Strategy<Value = GameGraph> {
        (1usize..=5).prop_flat_map(|n| {
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec((0..n, 0..n, -4i64..=4), 0..=2 * n),
                proptest::collection::vec((0..n, -4i64..=4), n),
            )
                .prop_map(move |(owners, extra, base)| {
                    let owners = owners.into_iter().map(|m| if m { Max } else { Min }).collect();
                    let mut triples: Vec<_> = base.into_iter().enumerate().map(|(v, (t, w))| (v, t, w)).collect();
                    triples.extend(extra);
                    GameGraph::from_triples(owners, triples).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn attractor_matches_sweeping_fixpoint(g in arb_game(), b in 0u64..8, seed in any::<u64>()) {
            prop_assert_eq!(oracle_lwub(&g, b, &budget()).unwrap(), naive_lwub(&g, b, seed));
        }

        #[test]
        fn sweep_order_is_irrelevant(g in arb_game(), b in 0u64..8, s1 in any::<u64>(), s2 in any::<u64>()) {
            prop_assert_eq!(naive_lwub(&g, b, s1), naive_lwub(&g, b, s2));
        }

        #[test]
        fn larger_bound_never_needs_more(g in arb_game(), b in 0u64..8) {
            let lo = oracle_lwub(&g, b, &budget()).unwrap();
            let hi = oracle_lwub(&g, b + 1, &budget()).unwrap();
            prop_assert!(lo.dominates(&hi));
        }

        #[test]
        fn lb_finite_exactly_on_nonnegative_values(g in arb_game()) {
            let lb = oracle_lb(&g, &budget()).unwrap();
            let signs = oracle_value_sign(&g, &budget()).unwrap();
            for v in g.vertices() {
                prop_assert_eq!(lb.get(v).is_finite(), signs.get(v) == ValueSign::NonNegative);
            }
        }
    }
}
