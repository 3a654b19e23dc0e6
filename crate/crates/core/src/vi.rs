//! Value iteration for `lwub_b` (and `lb` at `b = (|V| − 1)·W`).
//!
//! Starting from `d = 0`, each vertex is updated to
//! `x = min` (Max) or `max` (Min) over its edges of `max(0, d(u) − w(v, u))`,
//! and to `∞` when `x > b`. The least fixpoint is `lwub_b`.
//!
//! [`vi_step`] is the synchronous update, applied to every vertex (plain) or
//! only to dirty vertices (worklist). [`vi_solve`] runs the asynchronous
//! worklist algorithm that keeps, for each Max vertex, the number of edges
//! still consistent with its current value, so a Max vertex is rescanned only
//! when that count drops to zero.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{Energy, EnergyVector, GameGraph, Owner, VertexId};
use crate::kasi::{lb_bound, SolveError};

/// Cost of taking edge `(v, u)` into a successor needing `du`, capped at `b`.
#[inline]
fn edge_need(du: Energy, weight: i64, bound: u64) -> Energy {
    match du {
        Energy::Infinite => Energy::Infinite,
        Energy::Finite(x) => {
            let need = (x as i128 - weight as i128).max(0);
            if need > bound as i128 {
                Energy::Infinite
            } else {
                Energy::Finite(need as u64)
            }
        }
    }
}

/// The update rule at one vertex against the vector `d`.
fn update(graph: &GameGraph, bound: u64, d: &[Energy], v: VertexId) -> Energy {
    let needs = graph.out_edges(v).map(|e| edge_need(d[e.target.index()], e.weight, bound));
    match graph.owner(v) {
        Owner::Max => needs.min(),
        Owner::Min => needs.max(),
    }
    .expect("out-degree >= 1")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Recompute every vertex each step.
    Plain,
    /// Recompute only vertices with a successor that changed in the previous step.
    Worklist,
}

/// Synchronous iteration state: `d_i` and the vertices whose value may grow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViState {
    pub d: Vec<Energy>,
    pub dirty: Vec<VertexId>,
    pub schedule: Schedule,
}

impl ViState {
    pub fn new(graph: &GameGraph, schedule: Schedule) -> Self {
        ViState {
            d: vec![Energy::Finite(0); graph.vertex_count()],
            dirty: graph.vertices().collect(),
            schedule,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.dirty.is_empty()
    }
}

/// One synchronous step: `d_{i+1}` from `d_i`.
pub fn vi_step(graph: &GameGraph, bound: u64, state: &ViState) -> ViState {
    let n = graph.vertex_count();
    let targets: Vec<VertexId> = match state.schedule {
        Schedule::Plain => graph.vertices().collect(),
        Schedule::Worklist => state.dirty.clone(),
    };
    let updated: Vec<Energy> = targets.iter().map(|&v| update(graph, bound, &state.d, v)).collect();

    let mut d = state.d.clone();
    let mut mark = vec![false; n];
    let mut changed_any = false;
    for (&v, &x) in targets.iter().zip(&updated) {
        if x != d[v.index()] {
            d[v.index()] = x;
            changed_any = true;
            for e in graph.in_edges(v) {
                mark[e.source.index()] = true;
            }
        }
    }
    let dirty = if changed_any {
        (0..n).filter(|&v| mark[v]).map(VertexId::from).collect()
    } else {
        Vec::new()
    };
    ViState {
        d,
        dirty,
        schedule: state.schedule,
    }
}

/// Which fixpoint engine [`vi_solve_with`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViVariant {
    /// Synchronous steps over all vertices until two vectors agree.
    Plain,
    /// Synchronous steps over dirty vertices only.
    Synchronous,
    /// Asynchronous counting worklist, FIFO order.
    Worklist,
    /// Counting worklist with a seeded random extraction order.
    Shuffled(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViOutcome {
    pub values: EnergyVector,
    /// Synchronous steps, or vertex updates for the worklist engines.
    pub work: u64,
}

/// Least fixpoint of the update rule: `lwub_b`.
pub fn vi_solve(graph: &GameGraph, bound: u64) -> EnergyVector {
    vi_solve_with(graph, bound, ViVariant::Worklist).values
}

/// `lb` by value iteration at `b = (|V| − 1)·W`.
pub fn vi_solve_lb(graph: &GameGraph) -> Result<EnergyVector, SolveError> {
    Ok(vi_solve(graph, lb_bound(graph)?))
}

pub fn vi_solve_with(graph: &GameGraph, bound: u64, variant: ViVariant) -> ViOutcome {
    match variant {
        ViVariant::Plain | ViVariant::Synchronous => {
            let schedule = if variant == ViVariant::Plain {
                Schedule::Plain
            } else {
                Schedule::Worklist
            };
            let mut state = ViState::new(graph, schedule);
            let mut steps = 0;
            loop {
                let next = vi_step(graph, bound, &state);
                steps += 1;
                if next.d == state.d {
                    return ViOutcome {
                        values: EnergyVector(next.d),
                        work: steps,
                    };
                }
                state = next;
            }
        }
        ViVariant::Worklist => counting_worklist(graph, bound, None),
        ViVariant::Shuffled(seed) => counting_worklist(graph, bound, Some(seed)),
    }
}

/// Time-limited [`vi_solve`]: `None` if `keep_going` returns false before the
/// fixpoint is reached. Polled every few thousand updates.
pub fn vi_solve_until(graph: &GameGraph, bound: u64, keep_going: impl FnMut() -> bool) -> Option<ViOutcome> {
    counting_worklist_polled(graph, bound, None, keep_going)
}

fn counting_worklist(graph: &GameGraph, bound: u64, shuffle: Option<u64>) -> ViOutcome {
    counting_worklist_polled(graph, bound, shuffle, || true).expect("never interrupted")
}

fn counting_worklist_polled(
    graph: &GameGraph,
    bound: u64,
    shuffle: Option<u64>,
    mut keep_going: impl FnMut() -> bool,
) -> Option<ViOutcome> {
    let n = graph.vertex_count();
    let mut d = vec![Energy::Finite(0); n];
    // For Max vertices: edges whose need is <= d(v).
    let mut good = vec![0usize; n];
    // Pending vertices are those whose value may be stale. Initially all.
    let mut queued = vec![true; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut rng = shuffle.map(ChaCha8Rng::seed_from_u64);
    let mut work = 0u64;

    while !queue.is_empty() {
        let v = match rng.as_mut() {
            Some(rng) => {
                let i = rng.gen_range(0..queue.len());
                queue.swap_remove_back(i).expect("non-empty")
            }
            None => queue.pop_front().expect("non-empty"),
        };
        queued[v] = false;
        work += 1;
        if work.is_multiple_of(4096) && !keep_going() {
            return None;
        }
        let vid = VertexId::from(v);
        let old = d[v];
        if old == Energy::Infinite {
            continue;
        }
        let new = update(graph, bound, &d, vid);
        if graph.owner(vid) == Owner::Max {
            good[v] = graph
                .out_edges(vid)
                .filter(|e| edge_need(d[e.target.index()], e.weight, bound) <= new)
                .count();
        }
        if new == old {
            continue;
        }
        d[v] = new;
        // Notify predecessors: a Min predecessor may grow directly; a Max
        // predecessor only when it has no consistent edge left.
        for e in graph.in_edges(vid) {
            let p = e.source.index();
            if queued[p] || d[p] == Energy::Infinite {
                continue;
            }
            let wake = match graph.owner(e.source) {
                Owner::Min => edge_need(new, e.weight, bound) > d[p],
                Owner::Max => {
                    let was_good = edge_need(old, e.weight, bound) <= d[p];
                    let is_good = edge_need(new, e.weight, bound) <= d[p];
                    if was_good && !is_good {
                        good[p] -= 1;
                    }
                    good[p] == 0
                }
            };
            if wake {
                queued[p] = true;
                queue.push_back(p);
            }
        }
    }
    Some(ViOutcome {
        values: EnergyVector(d),
        work,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Energy::{Finite, Infinite};
    use crate::game::Owner::{Max, Min};
    use crate::oracle::{oracle_lwub, OracleBudget};
    use proptest::prelude::*;

    #[test]
    fn zero_loop_is_a_fixpoint() {
        let g = GameGraph::from_triples(vec![Max], [(0, 0, 0)]).unwrap();
        let mut s = ViState::new(&g, Schedule::Plain);
        for _ in 0..5 {
            s = vi_step(&g, 3, &s);
            assert_eq!(s.d, vec![Finite(0)]);
        }
    }

    #[test]
    fn negative_loop_climbs_then_freezes() {
        let g = GameGraph::from_triples(vec![Max], [(0, 0, -1)]).unwrap();
        let mut s = ViState::new(&g, Schedule::Plain);
        let mut seen = vec![s.d[0]];
        for _ in 0..4 {
            s = vi_step(&g, 2, &s);
            seen.push(s.d[0]);
        }
        assert_eq!(seen, vec![Finite(0), Finite(1), Finite(2), Infinite, Infinite]);
    }

    #[test]
    fn max_takes_the_free_edge() {
        let g = GameGraph::from_triples(vec![Max, Max, Max], [(0, 1, -1), (0, 2, 0), (1, 1, 0), (2, 2, 0)]).unwrap();
        let s = vi_step(&g, 5, &ViState::new(&g, Schedule::Plain));
        assert_eq!(s.d[0], Finite(0));
        assert_eq!(vi_solve(&g, 5).0[0], Finite(0));
    }

    #[test]
    fn nonnegative_weights_stop_after_one_step() {
        let g = GameGraph::from_triples(vec![Max, Min], [(0, 1, 2), (1, 0, 0), (1, 1, 1)]).unwrap();
        let out = vi_solve_with(&g, 4, ViVariant::Plain);
        assert_eq!(out.values.0, vec![Finite(0), Finite(0)]);
        assert_eq!(out.work, 1);
    }

    #[test]
    fn two_vertex_games() {
        let g = GameGraph::from_triples(vec![Max, Min], [(0, 1, -3), (0, 0, 0), (1, 0, 3)]).unwrap();
        assert_eq!(vi_solve(&g, 3).0, vec![Finite(0), Finite(0)]);
        let g = GameGraph::from_triples(vec![Max, Min], [(0, 1, -3), (0, 0, 0), (1, 0, -3)]).unwrap();
        assert_eq!(vi_solve(&g, 3).0, vec![Finite(0), Finite(3)]);
    }

    #[test]
    fn interrupted_run_reports_none() {
        let g = GameGraph::from_triples(vec![Max], [(0, 0, -1)]).unwrap();
        assert_eq!(vi_solve_until(&g, 1 << 20, || false), None);
        let out = vi_solve_until(&g, 100, || true).unwrap();
        assert_eq!(out.values, EnergyVector(vec![Infinite]));
        assert_eq!(out.work, 101);
    }

    /// Minimum credit that survives exactly `k` steps, by game-tree search.
    fn k_step_credit(g: &GameGraph, b: u64, v: VertexId, k: usize) -> Energy {
        fn survives(g: &GameGraph, b: u64, v: VertexId, e: u64, k: usize) -> bool {
            if k == 0 {
                return true;
            }
            let mut outcomes = g.out_edges(v).map(|edge| {
                let next = e as i64 + edge.weight;
                next >= 0 && survives(g, b, edge.target, (next as u64).min(b), k - 1)
            });
            match g.owner(v) {
                Max => outcomes.any(|x| x),
                Min => outcomes.all(|x| x),
            }
        }
        (0..=b).find(|&e| survives(g, b, v, e, k)).map_or(Infinite, Finite)
    }

    fn arb_game(max_n: usize) -> impl Strategy<Value = GameGraph> {
        (1usize..=max_n).prop_flat_map(|n| {
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec((0..n, -4i64..=4), n),
                proptest::collection::vec((0..n, 0..n, -4i64..=4), 0..=n),
            )
                .prop_map(move |(owners, base, extra)| {
                    let owners = owners.into_iter().map(|m| if m { Max } else { Min }).collect();
                    let mut t: Vec<_> = base.into_iter().enumerate().map(|(v, (u, w))| (v, u, w)).collect();
                    t.extend(extra);
                    GameGraph::from_triples(owners, t).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn k_step_semantics(g in arb_game(6), b in 0u64..8) {
            let mut s = ViState::new(&g, Schedule::Plain);
            for k in 1..=6 {
                s = vi_step(&g, b, &s);
                for v in g.vertices() {
                    prop_assert_eq!(s.d[v.index()], k_step_credit(&g, b, v, k), "k = {}", k);
                }
            }
        }

        #[test]
        fn ascent_is_monotone(g in arb_game(8), b in 0u64..12) {
            let mut s = ViState::new(&g, Schedule::Plain);
            for _ in 0..40 {
                let next = vi_step(&g, b, &s);
                prop_assert!(next.d.iter().zip(&s.d).all(|(a, c)| a >= c));
                prop_assert!(next.d.iter().all(|x| x.finite().is_none_or(|x| x <= b)));
                s = next;
            }
        }

        #[test]
        fn variants_agree(g in arb_game(8), b in 0u64..12, seed in any::<u64>()) {
            let plain = vi_solve_with(&g, b, ViVariant::Plain).values;
            prop_assert_eq!(&vi_solve_with(&g, b, ViVariant::Synchronous).values, &plain);
            prop_assert_eq!(&vi_solve_with(&g, b, ViVariant::Worklist).values, &plain);
            prop_assert_eq!(&vi_solve_with(&g, b, ViVariant::Shuffled(seed)).values, &plain);
        }

        #[test]
        fn matches_oracle(g in arb_game(6), b in 0u64..12) {
            prop_assert_eq!(vi_solve(&g, b), oracle_lwub(&g, b, &OracleBudget::default()).unwrap());
        }
    }
}
