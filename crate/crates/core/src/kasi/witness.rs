//! Playback and exhaustive check of Min's strategy sequence.
//!
//! Min starts a play at a losing vertex with the strategy whose evaluation made
//! that vertex `−∞`. Whenever the play enters a losing vertex made `−∞` by an
//! earlier strategy, she switches down to it; she never switches up. On
//! vertices that stayed finite she plays the last strategy. If Max leaves the
//! finite region again, the entered losing vertex starts a fresh count.
//!
//! The checker explores every Max behavior over states `(vertex, energy,
//! strategy index)` with energy clamped to `[0, b]`; a step below zero is a
//! violation (it covers both running out of energy and a segment below `−b`).

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::game::{EdgeId, GameGraph, Owner, VertexId};

use super::MinWitness;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("vertex {0} is not losing for Max")]
    NotLosing(VertexId),
    #[error("Max survives from {start} against the witness; {explored} states explored")]
    WitnessIncomplete { start: VertexId, explored: usize },
    #[error("exploration exceeded {0} states")]
    ExplorationBudget(usize),
    #[error("witness does not match the game")]
    Malformed,
}

/// Proof that every Max behavior from a losing vertex fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refutation {
    pub explored_states: usize,
    /// Edges in the longest play Max can force before failing.
    pub longest_play: usize,
    /// That play as a vertex sequence; its last edge is the violating step.
    pub trace: Vec<VertexId>,
    pub trace_weights: Vec<i64>,
}

impl Refutation {
    /// Minimum over all contiguous segments of the trace of their total weight.
    pub fn min_segment_weight(&self) -> i64 {
        let mut best = i64::MAX;
        // Kadane's algorithm for the minimum-sum subarray.
        let mut run = 0i64;
        for &w in &self.trace_weights {
            run = w.min(run + w);
            best = best.min(run);
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct State {
    vertex: VertexId,
    energy: u64,
    /// Current strategy index; `None` inside the finite region.
    index: Option<usize>,
}

struct Playback<'a> {
    graph: &'a GameGraph,
    witness: &'a MinWitness,
    chosen: Vec<Vec<Option<EdgeId>>>,
    bound: u64,
}

impl Playback<'_> {
    fn enter(&self, from: Option<usize>, v: VertexId) -> Option<usize> {
        match (from, self.witness.death(v)) {
            (Some(k), Some(j)) => Some(k.min(j)),
            (None, Some(j)) => Some(j),
            (_, None) => None,
        }
    }

    /// Transitions as `(edge, successor)`; successor `None` means a violation.
    fn moves(&self, s: State) -> Vec<(EdgeId, Option<State>)> {
        let edges: Vec<EdgeId> = match self.graph.owner(s.vertex) {
            Owner::Max => self.graph.out_edge_ids(s.vertex).to_vec(),
            Owner::Min => {
                let k = s.index.unwrap_or(self.chosen.len() - 1);
                vec![self.chosen[k][s.vertex.index()].expect("Min vertex has a choice")]
            }
        };
        edges
            .into_iter()
            .map(|e| {
                let edge = self.graph.edge(e);
                let next = s.energy as i128 + edge.weight as i128;
                let succ = (next >= 0).then(|| State {
                    vertex: edge.target,
                    energy: next.min(self.bound as i128) as u64,
                    index: self.enter(s.index, edge.target),
                });
                (e, succ)
            })
            .collect()
    }
}

/// Plays the witness from losing vertex `start` with initial energy `credit`
/// (values above `b` behave as `b`) against every Max behavior.
pub fn verify_min_witness(
    graph: &GameGraph,
    bound: u64,
    witness: &MinWitness,
    start: VertexId,
    credit: u64,
    max_states: usize,
) -> Result<Refutation, WitnessError> {
    if witness.death_index.len() != graph.vertex_count() || witness.strategies.is_empty() {
        return Err(WitnessError::Malformed);
    }
    if witness.death(start).is_none() {
        return Err(WitnessError::NotLosing(start));
    }
    let chosen = witness
        .strategies
        .iter()
        .map(|pi| pi.chosen_edges(graph).map_err(|_| WitnessError::Malformed))
        .collect::<Result<Vec<_>, _>>()?;
    let play = Playback {
        graph,
        witness,
        chosen,
        bound,
    };

    // Forward exploration of the reachable product.
    let init = State {
        vertex: start,
        energy: credit.min(bound),
        index: witness.death(start),
    };
    let mut ids: HashMap<State, usize> = HashMap::new();
    let mut states = vec![init];
    let mut succs: Vec<Vec<(EdgeId, Option<usize>)>> = Vec::new();
    ids.insert(init, 0);
    let mut i = 0;
    while i < states.len() {
        let mut out = Vec::new();
        for (e, next) in play.moves(states[i]) {
            let id = next.map(|s| {
                *ids.entry(s).or_insert_with(|| {
                    states.push(s);
                    states.len() - 1
                })
            });
            out.push((e, id));
        }
        if states.len() > max_states {
            return Err(WitnessError::ExplorationBudget(max_states));
        }
        succs.push(out);
        i += 1;
    }

    // Backward ranking: rank(s) = longest play Max can force from s before a
    // violation. States never ranked let Max survive forever.
    let m = states.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut pending: Vec<usize> = vec![0; m];
    let mut rank: Vec<Option<usize>> = vec![None; m];
    let mut queue = VecDeque::new();
    for s in 0..m {
        for &(_, t) in &succs[s] {
            if let Some(t) = t {
                preds[t].push(s);
                pending[s] += 1;
            }
        }
        if pending[s] == 0 {
            rank[s] = Some(1);
            queue.push_back(s);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &s in &preds[t] {
            pending[s] -= 1;
            if pending[s] == 0 {
                let r = succs[s]
                    .iter()
                    .map(|&(_, x)| x.map_or(1, |x| rank[x].expect("ranked") + 1))
                    .max()
                    .expect("some move");
                rank[s] = Some(r);
                queue.push_back(s);
            }
        }
    }
    let Some(longest) = rank[0] else {
        return Err(WitnessError::WitnessIncomplete {
            start,
            explored: m,
        });
    };

    // Follow Max's most resilient choice to produce the trace.
    let mut trace = vec![start];
    let mut trace_weights = Vec::new();
    let mut s = 0;
    loop {
        let (e, next) = *succs[s]
            .iter()
            .max_by_key(|&&(_, x)| x.map_or(1, |x| rank[x].expect("ranked") + 1))
            .expect("some move");
        let edge = graph.edge(e);
        trace.push(edge.target);
        trace_weights.push(edge.weight);
        match next {
            Some(x) => s = x,
            None => break,
        }
    }
    Ok(Refutation {
        explored_states: m,
        longest_play: longest,
        trace,
        trace_weights,
    })
}
