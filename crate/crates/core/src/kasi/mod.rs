//! Keep-alive strategy improvement.
//!
//! The solver keeps a vector `d ∈ (ℤ ∪ {−∞})^V` whose negation is a lower
//! estimate of `lwub_b`. Each round evaluates the current Min strategy `π`
//! (longest admissible paths to a shrinking candidate set, see
//! [`evaluate_strategy`]) and then switches every Min vertex that has an edge
//! `(v, u)` with `d(v) > d(u) + w(v, u)`. When no such edge remains, `−d` is
//! `lwub_b`.
//!
//! Max's optimal positional strategy is read off the final longest-path
//! forest. Min may need memory: the sequence of evaluated strategies together
//! with the round in which each vertex dropped to `−∞` forms a [`MinWitness`].

mod dijkstra;
mod evaluate;
mod witness;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{
    lower_bound_reduction, EdgeId, EnergyVector, GameGraph, GraphError, Owner, PositionalStrategy, Potential,
    PotentialVector, SignPartition, ValueSign, VertexId,
};

pub use dijkstra::dijkstra_longest;
pub use evaluate::evaluate_strategy;
pub use witness::{verify_min_witness, Refutation, WitnessError};

use evaluate::{check_entry_conditions, evaluate, StrategyView};

/// The two entry conditions of strategy evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryCondition {
    /// (i) every cycle among vertices with `−∞ < d < 0` is negative under `π`.
    NegativeCycles,
    /// (ii) `d < 0` off the zero set and `d(v) >= d(u) + w(v, u)` along `π`.
    Potentials,
}

/// Internal invariants audited when [`SolveOptions::check_invariants`] is on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    /// Successive evaluations must strictly decrease `d`.
    Descent,
    /// The candidate set may never gain a vertex.
    CandidateMonotonicity,
    /// Finite `d` values stay within `[−(|V|−1)·W, 0]`.
    PotentialRange,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge {tail} -> {head} has positive weight after the potential transformation")]
    PositiveTransformedEdge { tail: VertexId, head: VertexId },
    #[error("target {0} does not have potential 0")]
    TargetNotAtZero(VertexId),
    #[error("entry condition {condition:?} violated at vertex {vertex}")]
    PreconditionViolated { condition: EntryCondition, vertex: VertexId },
    #[error("invariant {invariant:?} violated in round {round}")]
    InvariantViolated { invariant: Invariant, round: usize },
    #[error("{what} exceeded the limit of {limit}")]
    BudgetExceeded { what: &'static str, limit: u128 },
    #[error("bound (|V|-1)*W = {vertices}-1 * {max_weight} overflows 64-bit path arithmetic")]
    OverflowRisk { vertices: usize, max_weight: u64 },
}

/// How the first Min strategy is picked.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum InitialStrategy {
    /// Lowest-indexed successor of each Min vertex.
    #[default]
    LowestSuccessor,
    /// Uniformly random successor, from a ChaCha8 stream seeded with the value.
    Seeded(u64),
    Given(PositionalStrategy),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub initial: InitialStrategy,
    /// Audit entry conditions, descent, candidate monotonicity, potential
    /// ranges, and iteration budgets. On by default in debug builds.
    pub check_invariants: bool,
    /// Largest `|D∖A|` for which the negative-cycle condition is checked.
    pub cycle_check_limit: usize,
    /// Keep every intermediate `d` vector in [`SolveResult::history`].
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            initial: InitialStrategy::LowestSuccessor,
            check_invariants: cfg!(debug_assertions),
            cycle_check_limit: 256,
            record_history: false,
        }
    }
}

impl SolveOptions {
    /// Every audit on, history recorded.
    pub fn audited() -> Self {
        SolveOptions {
            check_invariants: true,
            record_history: true,
            ..SolveOptions::default()
        }
    }

    /// No audits, for timing.
    pub fn fast() -> Self {
        SolveOptions {
            check_invariants: false,
            ..SolveOptions::default()
        }
    }
}

/// Per-run counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Main-loop rounds (strategy evaluations).
    pub iterations: usize,
    /// Dijkstra calls over all evaluations.
    pub dijkstra_calls: usize,
    /// Largest number of Dijkstra calls within one evaluation.
    pub max_evaluation_rounds: usize,
    pub relaxed_edges: usize,
}

/// Min's memoryful counter-strategy: evaluated strategies in order, and for
/// each vertex the round whose evaluation sent its `d` to `−∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinWitness {
    pub strategies: Vec<PositionalStrategy>,
    pub death_index: Vec<Option<usize>>,
}

impl MinWitness {
    pub fn death(&self, v: VertexId) -> Option<usize> {
        self.death_index[v.index()]
    }

    /// The strategy Min plays last; optimal on the vertices that stay finite.
    pub fn last(&self) -> &PositionalStrategy {
        self.strategies.last().expect("at least one evaluation")
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub bound: u64,
    pub lwub: EnergyVector,
    pub max_strategy: PositionalStrategy,
    pub min_witness: MinWitness,
    pub iterations: usize,
    pub final_d: PotentialVector,
    pub stats: SolveStats,
    /// `d` after each evaluation, when requested.
    pub history: Vec<PotentialVector>,
}

/// Solves `lwub_b` with default options.
pub fn solve_lwub(graph: &GameGraph, bound: u64) -> Result<SolveResult, SolveError> {
    solve_lwub_with(graph, bound, &SolveOptions::default())
}

/// Solves `lb` by running [`solve_lwub`] at `b = (|V| − 1)·W`.
pub fn solve_lb(graph: &GameGraph) -> Result<SolveResult, SolveError> {
    solve_lb_with(graph, &SolveOptions::default())
}

pub fn solve_lb_with(graph: &GameGraph, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    solve_lwub_with(graph, lb_bound(graph)?, options)
}

/// `(|V| − 1)·W`, rejected when `(|V| − 1)·W·|V|` leaves 64-bit range.
pub fn lb_bound(graph: &GameGraph) -> Result<u64, SolveError> {
    let overflow = SolveError::OverflowRisk {
        vertices: graph.vertex_count(),
        max_weight: graph.max_abs_weight(),
    };
    let b = lower_bound_reduction(graph).ok_or(overflow.clone())?;
    match b.checked_mul(graph.vertex_count() as u64) {
        Some(x) if x <= i64::MAX as u64 => Ok(b),
        _ => Err(overflow),
    }
}

/// Partition into `ν >= 0` (finite `lb`) and `ν < 0` (infinite `lb`).
pub fn winning_sign(graph: &GameGraph) -> Result<SignPartition, SolveError> {
    let lb = solve_lb_with(graph, &SolveOptions::fast())?.lwub;
    Ok(SignPartition(
        lb.0.iter()
            .map(|e| if e.is_finite() { ValueSign::NonNegative } else { ValueSign::Negative })
            .collect(),
    ))
}

fn initial_choice(graph: &GameGraph, initial: &InitialStrategy) -> Result<PositionalStrategy, SolveError> {
    match initial {
        InitialStrategy::LowestSuccessor => Ok(PositionalStrategy::lowest_successor(graph, Owner::Min)),
        InitialStrategy::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let choice = graph
                .vertices()
                .map(|v| {
                    (graph.owner(v) == Owner::Min).then(|| {
                        let out = graph.out_edge_ids(v);
                        graph.edge(out[rng.gen_range(0..out.len())]).target
                    })
                })
                .collect();
            Ok(PositionalStrategy::new(Owner::Min, choice))
        }
        InitialStrategy::Given(pi) => {
            if pi.player() != Owner::Min {
                return Err(GraphError::WrongOwner {
                    vertex: VertexId(0),
                    expected: Owner::Min,
                }
                .into());
            }
            pi.check(graph)?;
            Ok(pi.clone())
        }
    }
}

/// Full solver with options; see the module docs for the procedure.
pub fn solve_lwub_with(graph: &GameGraph, bound: u64, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    let n = graph.vertex_count();
    let w = graph.max_abs_weight();
    let audit = options.check_invariants;
    let round_limit = (n as u128) * (n as u128) * (w as u128) + 1;
    let floor = -((n.saturating_sub(1) as i128 * w as i128).min(i64::MAX as i128) as i64);

    let mut pi = initial_choice(graph, &options.initial)?;
    let mut chosen = pi.chosen_edges(graph)?;
    let mut d = vec![Potential::ZERO; n];
    let mut prev_final_candidates: Option<Vec<bool>> = None;
    let mut strategies = Vec::new();
    let mut death_index = vec![None; n];
    let mut history = Vec::new();
    let mut stats = SolveStats::default();

    let last = loop {
        let round = stats.iterations;
        if round as u128 >= round_limit {
            return Err(SolveError::BudgetExceeded {
                what: "improvement rounds",
                limit: round_limit,
            });
        }
        let view = StrategyView { graph, chosen: &chosen };
        if audit {
            check_entry_conditions(view, &d, options.cycle_check_limit)?;
        }
        let eval = evaluate(view, bound, &d)?;
        stats.iterations += 1;
        stats.dijkstra_calls += eval.rounds;
        stats.max_evaluation_rounds = stats.max_evaluation_rounds.max(eval.rounds);
        stats.relaxed_edges += eval.paths.relaxed;

        let next = &eval.paths.d;
        if audit {
            let violated = |invariant| Err(SolveError::InvariantViolated { invariant, round });
            if round > 0 && !PotentialVector(next.clone()).strictly_below(&PotentialVector(d.clone())) {
                return violated(Invariant::Descent);
            }
            if let Some(prev) = &prev_final_candidates {
                if eval.initial_candidates.iter().zip(prev).any(|(&now, &before)| now && !before) {
                    return violated(Invariant::CandidateMonotonicity);
                }
            }
            if next
                .iter()
                .any(|p| p.finite().is_some_and(|x| x > 0 || x < floor || x < -(bound.min(i64::MAX as u64) as i64)))
            {
                return violated(Invariant::PotentialRange);
            }
        }
        for v in 0..n {
            if death_index[v].is_none() && next[v] == Potential::NegInf {
                death_index[v] = Some(round);
            }
        }
        strategies.push(pi.clone());
        if options.record_history {
            history.push(PotentialVector(next.clone()));
        }

        d.clone_from(next);
        let changed = improve_in_place(graph, &d, &mut pi, &mut chosen);
        if !changed {
            break eval;
        }
        prev_final_candidates = Some(eval.final_candidates);
    };

    let max_strategy = extract_max_strategy(graph, &d, &last.paths.parent, &last.final_candidates);
    Ok(SolveResult {
        bound,
        lwub: PotentialVector(d.clone()).to_energy(),
        max_strategy,
        min_witness: MinWitness {
            strategies,
            death_index,
        },
        iterations: stats.iterations,
        final_d: PotentialVector(d),
        stats,
        history,
    })
}

/// Best switch target for Min vertex `v`: the edge minimizing `d(u) + w(v, u)`
/// among those with `d(v) > d(u) + w(v, u)`, lowest target then lowest edge id
/// on ties.
fn best_switch(graph: &GameGraph, d: &[Potential], v: VertexId) -> Option<EdgeId> {
    let dv = d[v.index()];
    if !dv.is_finite() {
        return None;
    }
    graph
        .out_edge_ids(v)
        .iter()
        .copied()
        .map(|e| {
            let edge = graph.edge(e);
            (d[edge.target.index()].plus(edge.weight), edge.target, e)
        })
        .filter(|(value, _, _)| dv > *value)
        .min()
        .map(|(_, _, e)| e)
}

fn improve_in_place(
    graph: &GameGraph,
    d: &[Potential],
    pi: &mut PositionalStrategy,
    chosen: &mut [Option<EdgeId>],
) -> bool {
    let mut changed = false;
    for v in graph.vertices_of(Owner::Min) {
        if let Some(e) = best_switch(graph, d, v) {
            pi.set(v, graph.edge(e).target);
            chosen[v.index()] = Some(e);
            changed = true;
        }
    }
    changed
}

/// One strategy-improvement step: switches every Min vertex with an improving
/// edge. Returns the new strategy and whether anything switched.
pub fn improve_strategy(
    graph: &GameGraph,
    d: &PotentialVector,
    pi: &PositionalStrategy,
) -> Result<(PositionalStrategy, bool), SolveError> {
    pi.check(graph)?;
    let mut next = pi.clone();
    let mut chosen = pi.chosen_edges(graph)?;
    let changed = improve_in_place(graph, d.as_slice(), &mut next, &mut chosen);
    Ok((next, changed))
}

/// Max's positional strategy from the final evaluation: forest parents off the
/// candidate set, a non-negative transformed edge on it, lowest successor on
/// `−∞` vertices.
fn extract_max_strategy(
    graph: &GameGraph,
    d: &[Potential],
    parent: &[Option<EdgeId>],
    candidates: &[bool],
) -> PositionalStrategy {
    let choice = graph
        .vertices()
        .map(|v| {
            if graph.owner(v) != Owner::Max {
                return None;
            }
            let i = v.index();
            let target = match (d[i].finite(), parent[i]) {
                (Some(_), Some(e)) if !candidates[i] => Some(graph.edge(e).target),
                (Some(dv), _) if candidates[i] => graph
                    .out_edges(v)
                    .filter(|e| d[e.target.index()].finite().is_some_and(|du| e.weight - dv + du >= 0))
                    .map(|e| e.target)
                    .min(),
                _ => None,
            };
            Some(target.unwrap_or_else(|| graph.successors(v).min().expect("out-degree >= 1")))
        })
        .collect();
    PositionalStrategy::new(Owner::Max, choice)
}

#[cfg(test)]
mod tests;
