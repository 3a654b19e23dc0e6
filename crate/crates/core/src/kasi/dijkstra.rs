use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::game::{EdgeId, GameGraph, Potential, PotentialVector, VertexId};

use super::SolveError;

/// Longest admissible paths to a target set, with parents for the path forest.
#[derive(Clone, Debug)]
pub(crate) struct LongestPaths {
    pub d: Vec<Potential>,
    /// First edge of the chosen longest path for each finite non-target vertex.
    pub parent: Vec<Option<EdgeId>>,
    /// Edges relaxed during the search (all with non-positive transformed weight).
    pub relaxed: usize,
}

/// Longest paths to `targets` in which every suffix weighs at least `-bound`.
///
/// The search runs backwards from the targets over edges accepted by `active`,
/// ordered by the transformed distance `d(v) - potentials(v)`. With the
/// potential transformation `w(x, y) - p(x) + p(y)` every relevant edge is
/// non-positive, so the largest transformed distance is final when popped
/// (Dijkstra on negated lengths).
///
/// A relaxation `d(y) + w(x, y) < -bound` is rejected outright. This is sound:
/// the admissible path from `x` that `y` would extend is the longest one, and
/// any admissible alternative from `x` is no heavier. Prepending the edge to
/// the longest one gives the heaviest candidate for `x`, and its only new
/// suffix (the whole path) fails the bound exactly when every alternative
/// fails it too. Suffixes inside the alternative are admissible by induction.
///
/// Vertices with `potentials(v) = −∞` stay `−∞`; unreachable or inadmissible
/// vertices become `−∞`.
pub(crate) fn longest_paths(
    graph: &GameGraph,
    active: impl Fn(EdgeId) -> bool,
    bound: u64,
    targets: &[bool],
    potentials: &[Potential],
) -> Result<LongestPaths, SolveError> {
    let n = graph.vertex_count();
    let floor = -(bound.min(i64::MAX as u64) as i64);
    let mut d = vec![Potential::NegInf; n];
    let mut parent = vec![None; n];
    // Transformed key d(v) - p(v) of the best candidate seen so far.
    let mut key = vec![i64::MIN; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut relaxed = 0;

    for v in 0..n {
        if targets[v] {
            if potentials[v] != Potential::ZERO {
                return Err(SolveError::TargetNotAtZero(VertexId::from(v)));
            }
            d[v] = Potential::ZERO;
            key[v] = 0;
            heap.push((0i64, Reverse(v as u32)));
        }
    }

    while let Some((k, Reverse(x))) = heap.pop() {
        let x = x as usize;
        if done[x] || k != key[x] {
            continue;
        }
        done[x] = true;
        let dx = d[x].finite().expect("queued vertices are finite");
        let px = potentials[x].finite().expect("queued vertices have finite potential");
        for &e in graph.in_edge_ids(VertexId::from(x)) {
            if !active(e) {
                continue;
            }
            let edge = graph.edge(e);
            let y = edge.source.index();
            if done[y] || targets[y] {
                continue;
            }
            let Some(py) = potentials[y].finite() else {
                continue;
            };
            relaxed += 1;
            if edge.weight - py + px > 0 {
                return Err(SolveError::PositiveTransformedEdge {
                    tail: edge.source,
                    head: edge.target,
                });
            }
            let candidate = dx + edge.weight;
            if candidate < floor {
                continue;
            }
            let k = candidate - py;
            if k > key[y] {
                key[y] = k;
                d[y] = Potential::Finite(candidate);
                parent[y] = Some(e);
                heap.push((k, Reverse(y as u32)));
            }
        }
    }

    Ok(LongestPaths { d, parent, relaxed })
}

/// Longest admissible paths to `targets` in an already restricted graph `G_π`.
///
/// Every edge of `restricted` takes part. `targets` must be a subset of the
/// vertices with potential 0, and every relaxed edge must have a non-positive
/// transformed weight; either violation is reported as an error.
pub fn dijkstra_longest(
    restricted: &GameGraph,
    bound: u64,
    targets: &[VertexId],
    potentials: &PotentialVector,
) -> Result<PotentialVector, SolveError> {
    let mut mask = vec![false; restricted.vertex_count()];
    for &t in targets {
        mask[t.index()] = true;
    }
    let out = longest_paths(restricted, |_| true, bound, &mask, potentials.as_slice())?;
    Ok(PotentialVector(out.d))
}
