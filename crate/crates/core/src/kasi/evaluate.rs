use crate::game::{EdgeId, GameGraph, Owner, PositionalStrategy, Potential, PotentialVector, VertexId};

use super::dijkstra::{longest_paths, LongestPaths};
use super::{EntryCondition, SolveError};

/// `G_π` without materializing it: Max vertices keep every out-edge, each Min
/// vertex keeps only its chosen edge.
#[derive(Clone, Copy)]
pub(crate) struct StrategyView<'a> {
    pub graph: &'a GameGraph,
    /// Chosen edge per Min vertex, `None` for Max vertices.
    pub chosen: &'a [Option<EdgeId>],
}

impl<'a> StrategyView<'a> {
    #[inline]
    pub fn active(&self, e: EdgeId) -> bool {
        let source = self.graph.edge(e).source.index();
        match self.chosen[source] {
            None => true,
            Some(c) => c == e,
        }
    }

    #[inline]
    pub fn out_edge_ids(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + 'a {
        let view = *self;
        self.graph
            .out_edge_ids(v)
            .iter()
            .copied()
            .filter(move |&e| view.active(e))
    }

    /// `max over E_π edges of w(v, u) − d(v) + d(u)`, or `None` (`−∞`).
    pub fn best_transformed(&self, v: VertexId, d: &[Potential]) -> Option<i64> {
        let dv = d[v.index()].finite()?;
        self.out_edge_ids(v)
            .filter_map(|e| {
                let edge = self.graph.edge(e);
                d[edge.target.index()].finite().map(|du| edge.weight - dv + du)
            })
            .max()
    }
}

/// Output of one strategy evaluation.
#[derive(Clone, Debug)]
pub(crate) struct Evaluation {
    pub paths: LongestPaths,
    /// Candidate set at the start (`B_0`) and at convergence.
    pub initial_candidates: Vec<bool>,
    pub final_candidates: Vec<bool>,
    /// Dijkstra calls made by the evaluation loop.
    pub rounds: usize,
}

/// Strategy evaluation: shrink the candidate set `B` until every member keeps
/// a non-negative transformed edge, recomputing longest paths after each shrink.
pub(crate) fn evaluate(view: StrategyView<'_>, bound: u64, d_prev: &[Potential]) -> Result<Evaluation, SolveError> {
    let n = view.graph.vertex_count();
    let mut candidates: Vec<bool> = (0..n)
        .map(|v| {
            d_prev[v] == Potential::ZERO
                && view
                    .best_transformed(VertexId::from(v), d_prev)
                    .is_some_and(|t| t >= 0)
        })
        .collect();
    let initial_candidates = candidates.clone();
    let mut potentials = d_prev.to_vec();
    let mut rounds = 0;
    loop {
        rounds += 1;
        if rounds > n.max(1) {
            return Err(SolveError::BudgetExceeded {
                what: "evaluation rounds",
                limit: n.max(1) as u128,
            });
        }
        let paths = longest_paths(view.graph, |e| view.active(e), bound, &candidates, &potentials)?;
        let mut shrunk = false;
        for (v, c) in candidates.iter_mut().enumerate() {
            if *c
                && !view
                    .best_transformed(VertexId::from(v), &paths.d)
                    .is_some_and(|t| t >= 0)
            {
                *c = false;
                shrunk = true;
            }
        }
        if !shrunk {
            return Ok(Evaluation {
                paths,
                initial_candidates,
                final_candidates: candidates,
                rounds,
            });
        }
        potentials = paths.d;
    }
}

/// Checks the entry conditions of strategy evaluation for `d_prev`, with
/// `A = {d = 0}` and `D = {d > −∞}`:
///
/// - (ii) every `v ∈ D∖A` has `d(v) < 0` and `d(v) >= d(u) + w(v, u)` along `E_π`;
/// - (i) every cycle of `G_π(D∖A)` is negative, checked when `|D∖A| <= cycle_limit`.
pub(crate) fn check_entry_conditions(
    view: StrategyView<'_>,
    d_prev: &[Potential],
    cycle_limit: usize,
) -> Result<(), SolveError> {
    let graph = view.graph;
    let n = graph.vertex_count();
    let inner: Vec<bool> = d_prev
        .iter()
        .map(|&p| p.is_finite() && p != Potential::ZERO)
        .collect();

    for v in graph.vertices() {
        if !inner[v.index()] {
            continue;
        }
        let dv = d_prev[v.index()];
        if dv > Potential::ZERO {
            return Err(SolveError::PreconditionViolated {
                condition: EntryCondition::Potentials,
                vertex: v,
            });
        }
        for e in view.out_edge_ids(v) {
            let edge = graph.edge(e);
            if dv < d_prev[edge.target.index()].plus(edge.weight) {
                return Err(SolveError::PreconditionViolated {
                    condition: EntryCondition::Potentials,
                    vertex: v,
                });
            }
        }
    }

    if inner.iter().filter(|&&x| x).count() > cycle_limit {
        return Ok(());
    }
    // A cycle of length L <= n has weight >= 0 iff its weight under
    // w' = w·(n+1) + 1 is positive, so look for positive cycles under w'.
    let scale = n as i128 + 1;
    let edges: Vec<(usize, usize, i128)> = (0..graph.edge_count())
        .filter(|&e| view.active(e))
        .map(|e| graph.edge(e))
        .filter(|e| inner[e.source.index()] && inner[e.target.index()])
        .map(|e| (e.source.index(), e.target.index(), e.weight as i128 * scale + 1))
        .collect();
    if let Some(v) = positive_cycle_vertex(n, &edges) {
        return Err(SolveError::PreconditionViolated {
            condition: EntryCondition::NegativeCycles,
            vertex: VertexId::from(v),
        });
    }
    Ok(())
}

/// Bellman–Ford for longest paths from a virtual source: a relaxation in
/// round `n` proves a positive cycle. Returns a vertex that was relaxed then.
fn positive_cycle_vertex(n: usize, edges: &[(usize, usize, i128)]) -> Option<usize> {
    let mut dist = vec![0i128; n];
    for round in 0..=n {
        let mut changed = None;
        for &(s, t, w) in edges {
            if dist[s] + w > dist[t] {
                dist[t] = dist[s] + w;
                changed = Some(t);
            }
        }
        match changed {
            None => return None,
            Some(t) if round == n => return Some(t),
            _ => {}
        }
    }
    None
}

/// Public wrapper: evaluates `pi` from `d_prev`, checking the entry conditions first.
///
/// Returns `d` with `d(v) = −lwub_b` of `v` in the one-player game `Γ_π(D)`
/// for every `v ∈ D = {d_prev > −∞}`; vertices outside `D` stay `−∞`.
pub fn evaluate_strategy(
    graph: &GameGraph,
    bound: u64,
    pi: &PositionalStrategy,
    d_prev: &PotentialVector,
) -> Result<PotentialVector, SolveError> {
    if pi.player() != Owner::Min {
        return Err(SolveError::Graph(crate::game::GraphError::WrongOwner {
            vertex: VertexId(0),
            expected: Owner::Min,
        }));
    }
    pi.check(graph)?;
    let chosen = pi.chosen_edges(graph)?;
    let view = StrategyView { graph, chosen: &chosen };
    check_entry_conditions(view, d_prev.as_slice(), usize::MAX)?;
    Ok(PotentialVector(evaluate(view, bound, d_prev.as_slice())?.paths.d))
}
