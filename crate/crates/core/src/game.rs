//! Game graphs, positional strategies, and the value vectors shared by every solver.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Dense vertex identifier, `0 <= index < vertex_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Index into [`GameGraph::edges`].
pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    Max,
    Min,
}

impl Owner {
    pub fn opponent(self) -> Owner {
        match self {
            Owner::Max => Owner::Min,
            Owner::Min => Owner::Max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: VertexId,
    pub target: VertexId,
    pub weight: i64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} has no outgoing edge")]
    ZeroOutDegree(VertexId),
    #[error("edge {0} references a vertex outside the graph")]
    DanglingEdge(EdgeId),
    #[error("in- and out-adjacency disagree")]
    AdjacencyMismatch,
    #[error("path weights up to |V|*W = {vertices}*{max_weight} would overflow 64-bit arithmetic")]
    WeightOverflow { vertices: usize, max_weight: u64 },
    #[error("vertex {vertex} is not owned by {expected:?}")]
    WrongOwner { vertex: VertexId, expected: Owner },
    #[error("strategy for vertex {0} names a vertex that is not a successor")]
    InvalidStrategy(VertexId),
    #[error("strategy has no choice for vertex {0}")]
    MissingChoice(VertexId),
    #[error("strategy covers {got} vertices, graph has {expected}")]
    StrategySize { expected: usize, got: usize },
    #[error("keep set must be non-empty")]
    EmptyKeepSet,
}

/// Weighted game graph with per-vertex ownership.
///
/// Immutable once built. Adjacency is stored in compressed form: the out-edges
/// of `v` are `out_edges[out_offsets[v]..out_offsets[v + 1]]` and likewise for
/// in-edges, both holding indices into `edges`.
#[derive(Clone, Debug)]
pub struct GameGraph {
    owners: Vec<Owner>,
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
}

impl PartialEq for GameGraph {
    /// Equal owners and equal edge multisets; edge order is irrelevant.
    fn eq(&self, other: &Self) -> bool {
        if self.owners != other.owners || self.edges.len() != other.edges.len() {
            return false;
        }
        let key = |e: &Edge| (e.source, e.target, e.weight);
        let mut a: Vec<_> = self.edges.iter().map(key).collect();
        let mut b: Vec<_> = other.edges.iter().map(key).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

impl Eq for GameGraph {}

fn csr(n: usize, edges: &[Edge], key: impl Fn(&Edge) -> usize) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[key(e) + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut list = vec![0; edges.len()];
    for (id, e) in edges.iter().enumerate() {
        let slot = &mut fill[key(e)];
        list[*slot] = id;
        *slot += 1;
    }
    (offsets, list)
}

impl GameGraph {
    /// Builds and validates a game.
    pub fn new(owners: Vec<Owner>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = owners.len();
        if let Some(id) = edges
            .iter()
            .position(|e| e.source.index() >= n || e.target.index() >= n)
        {
            return Err(GraphError::DanglingEdge(id));
        }
        let (out_offsets, out_edges) = csr(n, &edges, |e| e.source.index());
        let (in_offsets, in_edges) = csr(n, &edges, |e| e.target.index());
        let graph = GameGraph {
            owners,
            edges,
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Convenience constructor from `(source, target, weight)` triples.
    pub fn from_triples(
        owners: Vec<Owner>,
        triples: impl IntoIterator<Item = (usize, usize, i64)>,
    ) -> Result<Self, GraphError> {
        let edges = triples
            .into_iter()
            .map(|(s, t, w)| Edge {
                source: VertexId::from(s),
                target: VertexId::from(t),
                weight: w,
            })
            .collect();
        Self::new(owners, edges)
    }

    /// Checks every structural invariant and reports the first violation.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.owners.len();
        if let Some(id) = self
            .edges
            .iter()
            .position(|e| e.source.index() >= n || e.target.index() >= n)
        {
            return Err(GraphError::DanglingEdge(id));
        }
        if self.out_offsets.len() != n + 1
            || self.in_offsets.len() != n + 1
            || self.out_edges.len() != self.edges.len()
            || self.in_edges.len() != self.edges.len()
        {
            return Err(GraphError::AdjacencyMismatch);
        }
        let mut seen_out = vec![false; self.edges.len()];
        let mut seen_in = vec![false; self.edges.len()];
        for v in 0..n {
            for &e in &self.out_edges[self.out_offsets[v]..self.out_offsets[v + 1]] {
                if e >= self.edges.len() || self.edges[e].source.index() != v || seen_out[e] {
                    return Err(GraphError::AdjacencyMismatch);
                }
                seen_out[e] = true;
            }
            for &e in &self.in_edges[self.in_offsets[v]..self.in_offsets[v + 1]] {
                if e >= self.edges.len() || self.edges[e].target.index() != v || seen_in[e] {
                    return Err(GraphError::AdjacencyMismatch);
                }
                seen_in[e] = true;
            }
        }
        for v in 0..n {
            if self.out_offsets[v] == self.out_offsets[v + 1] {
                return Err(GraphError::ZeroOutDegree(VertexId::from(v)));
            }
        }
        let w = self.max_abs_weight();
        // Solvers add and subtract potentials of magnitude up to |V|*W; keep a
        // factor of four of headroom.
        let fits = (n as u64)
            .checked_add(1)
            .and_then(|x| x.checked_mul(w))
            .and_then(|x| x.checked_mul(4))
            .is_some_and(|x| x <= i64::MAX as u64);
        if !fits {
            return Err(GraphError::WeightOverflow {
                vertices: n,
                max_weight: w,
            });
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.owners.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.owners.len()).map(VertexId::from)
    }

    pub fn owner(&self, v: VertexId) -> Owner {
        self.owners[v.index()]
    }

    pub fn owners(&self) -> &[Owner] {
        &self.owners
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e]
    }

    #[inline]
    pub fn out_edge_ids(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[self.out_offsets[v.index()]..self.out_offsets[v.index() + 1]]
    }

    #[inline]
    pub fn in_edge_ids(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]]
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> + '_ {
        self.out_edge_ids(v).iter().map(move |&e| &self.edges[e])
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> + '_ {
        self.in_edge_ids(v).iter().map(move |&e| &self.edges[e])
    }

    pub fn successors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.out_edges(v).map(|e| e.target)
    }

    pub fn vertices_of(&self, owner: Owner) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(move |&v| self.owner(v) == owner)
    }

    /// `W`: the maximum absolute edge weight, 0 for an edgeless or all-zero graph.
    pub fn max_abs_weight(&self) -> u64 {
        self.edges
            .iter()
            .map(|e| e.weight.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// The edge `v -> u` preferred by `v`'s owner among parallel edges:
    /// heaviest for Max, lightest for Min. Lowest edge id breaks ties.
    pub fn preferred_edge(&self, v: VertexId, u: VertexId) -> Option<EdgeId> {
        let owner = self.owner(v);
        self.out_edge_ids(v)
            .iter()
            .copied()
            .filter(|&e| self.edges[e].target == u)
            .min_by_key(|&e| match owner {
                Owner::Max => -self.edges[e].weight,
                Owner::Min => self.edges[e].weight,
            })
    }

    /// `G_σ` / `G_π`: drops every edge of the strategy owner's vertices except
    /// the chosen one. Other vertices keep all edges; ownership is unchanged.
    pub fn restrict_to_strategy(&self, strategy: &PositionalStrategy) -> Result<GameGraph, GraphError> {
        strategy.check(self)?;
        let chosen = strategy.chosen_edges(self)?;
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(id, e)| {
                self.owner(e.source) != strategy.player() || chosen[e.source.index()] == Some(*id)
            })
            .map(|(_, e)| *e)
            .collect();
        GameGraph::new(self.owners.clone(), edges)
    }

    /// The graph of `Γ(D)`: the subgraph induced by `keep`, with a self-loop of
    /// weight −1 on each vertex left without outgoing edges.
    ///
    /// Vertices are renumbered densely in increasing original order; the
    /// returned map sends new ids to original ids.
    pub fn induced_subgame(&self, keep: &[bool]) -> Result<(GameGraph, Vec<VertexId>), GraphError> {
        assert_eq!(keep.len(), self.vertex_count(), "keep mask length");
        let old_of_new: Vec<VertexId> = self.vertices().filter(|v| keep[v.index()]).collect();
        if old_of_new.is_empty() {
            return Err(GraphError::EmptyKeepSet);
        }
        let mut new_of_old = vec![u32::MAX; self.vertex_count()];
        for (new, old) in old_of_new.iter().enumerate() {
            new_of_old[old.index()] = new as u32;
        }
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| keep[e.source.index()] && keep[e.target.index()])
            .map(|e| Edge {
                source: VertexId(new_of_old[e.source.index()]),
                target: VertexId(new_of_old[e.target.index()]),
                weight: e.weight,
            })
            .collect();
        let mut has_out = vec![false; old_of_new.len()];
        for e in &edges {
            has_out[e.source.index()] = true;
        }
        for (v, _) in has_out.iter().enumerate().filter(|(_, out)| !**out) {
            edges.push(Edge {
                source: VertexId::from(v),
                target: VertexId::from(v),
                weight: -1,
            });
        }
        let owners = old_of_new.iter().map(|&v| self.owner(v)).collect();
        Ok((GameGraph::new(owners, edges)?, old_of_new))
    }
}

/// Weight of a path given as a vertex sequence, using each step's lightest
/// edge when parallel edges exist. `None` if some step is not an edge.
pub fn path_weight(graph: &GameGraph, path: &[VertexId]) -> Option<i64> {
    path.windows(2).try_fold(0i64, |acc, step| {
        graph
            .out_edges(step[0])
            .filter(|e| e.target == step[1])
            .map(|e| e.weight)
            .min()
            .map(|w| acc + w)
    })
}

/// Weight of a cycle `u0, ..., u_{r-1}` (closing edge back to `u0` implied).
pub fn cycle_weight(graph: &GameGraph, cycle: &[VertexId]) -> Option<i64> {
    let first = *cycle.first()?;
    let mut closed = cycle.to_vec();
    closed.push(first);
    path_weight(graph, &closed)
}

/// Positional strategy of one player: a successor for each of that player's vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PositionalStrategy {
    player: Owner,
    choice: Vec<Option<VertexId>>,
}

impl PositionalStrategy {
    /// Builds a strategy from a dense per-vertex table; entries for the other
    /// player's vertices must be `None`.
    pub fn new(player: Owner, choice: Vec<Option<VertexId>>) -> Self {
        PositionalStrategy { player, choice }
    }

    /// The strategy choosing the lowest-indexed successor everywhere.
    pub fn lowest_successor(graph: &GameGraph, player: Owner) -> Self {
        let choice = graph
            .vertices()
            .map(|v| (graph.owner(v) == player).then(|| graph.successors(v).min().expect("out-degree >= 1")))
            .collect();
        PositionalStrategy { player, choice }
    }

    pub fn player(&self) -> Owner {
        self.player
    }

    pub fn get(&self, v: VertexId) -> Option<VertexId> {
        self.choice.get(v.index()).copied().flatten()
    }

    pub fn set(&mut self, v: VertexId, u: VertexId) {
        self.choice[v.index()] = Some(u);
    }

    /// `(vertex, choice)` pairs in increasing vertex order.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.choice
            .iter()
            .enumerate()
            .filter_map(|(v, c)| c.map(|u| (VertexId::from(v), u)))
    }

    pub fn len(&self) -> usize {
        self.choice.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Defined on exactly the player's vertices, and every choice is a successor.
    pub fn check(&self, graph: &GameGraph) -> Result<(), GraphError> {
        if self.choice.len() != graph.vertex_count() {
            return Err(GraphError::StrategySize {
                expected: graph.vertex_count(),
                got: self.choice.len(),
            });
        }
        for v in graph.vertices() {
            match (graph.owner(v) == self.player, self.get(v)) {
                (true, None) => return Err(GraphError::MissingChoice(v)),
                (false, Some(_)) => {
                    return Err(GraphError::WrongOwner {
                        vertex: v,
                        expected: self.player,
                    })
                }
                (true, Some(u)) if !graph.successors(v).any(|s| s == u) => {
                    return Err(GraphError::InvalidStrategy(v))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Resolves each choice to the owner-preferred parallel edge.
    pub fn chosen_edges(&self, graph: &GameGraph) -> Result<Vec<Option<EdgeId>>, GraphError> {
        graph
            .vertices()
            .map(|v| match self.get(v) {
                None => Ok(None),
                Some(u) => graph
                    .preferred_edge(v, u)
                    .map(Some)
                    .ok_or(GraphError::InvalidStrategy(v)),
            })
            .collect()
    }
}

/// An element of `ℤ ∪ {−∞}`. `NegInf` orders below every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Potential {
    NegInf,
    Finite(i64),
}

impl Potential {
    pub const ZERO: Potential = Potential::Finite(0);

    #[inline]
    pub fn is_finite(self) -> bool {
        matches!(self, Potential::Finite(_))
    }

    #[inline]
    pub fn finite(self) -> Option<i64> {
        match self {
            Potential::Finite(x) => Some(x),
            Potential::NegInf => None,
        }
    }

    /// `self + w`, with `−∞ + w = −∞`.
    #[inline]
    pub fn plus(self, w: i64) -> Potential {
        match self {
            Potential::Finite(x) => Potential::Finite(x + w),
            Potential::NegInf => Potential::NegInf,
        }
    }

    /// The energy `−d`: finite for finite `d`, `∞` for `−∞`.
    pub fn to_energy(self) -> Energy {
        match self {
            Potential::Finite(x) => {
                debug_assert!(x <= 0, "potentials are non-positive");
                Energy::Finite(x.unsigned_abs())
            }
            Potential::NegInf => Energy::Infinite,
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Finite(x) => x.fmt(f),
            Potential::NegInf => f.write_str("-inf"),
        }
    }
}

/// Per-vertex `d` vector maintained by strategy improvement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PotentialVector(pub Vec<Potential>);

impl PotentialVector {
    pub fn zeros(n: usize) -> Self {
        PotentialVector(vec![Potential::ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: VertexId) -> Potential {
        self.0[v.index()]
    }

    pub fn as_slice(&self) -> &[Potential] {
        &self.0
    }

    /// `self < other` in the vector sense: pointwise `<=`, strict somewhere.
    pub fn strictly_below(&self, other: &PotentialVector) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
            && self.0.iter().zip(&other.0).any(|(a, b)| a < b)
    }

    pub fn to_energy(&self) -> EnergyVector {
        EnergyVector(self.0.iter().map(|p| p.to_energy()).collect())
    }
}

/// An element of `ℕ₀ ∪ {∞}`. `Infinite` orders above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Energy {
    Finite(u64),
    Infinite,
}

impl Energy {
    #[inline]
    pub fn is_finite(self) -> bool {
        matches!(self, Energy::Finite(_))
    }

    #[inline]
    pub fn finite(self) -> Option<u64> {
        match self {
            Energy::Finite(x) => Some(x),
            Energy::Infinite => None,
        }
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Energy::Finite(x) => x.fmt(f),
            Energy::Infinite => f.write_str("inf"),
        }
    }
}

/// Per-vertex minimal initial energy (`lb` or `lwub_b`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnergyVector(pub Vec<Energy>);

impl EnergyVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: VertexId) -> Energy {
        self.0[v.index()]
    }

    pub fn as_slice(&self) -> &[Energy] {
        &self.0
    }

    pub fn finite_count(&self) -> usize {
        self.0.iter().filter(|e| e.is_finite()).count()
    }

    /// Pointwise `self >= other`.
    pub fn dominates(&self, other: &EnergyVector) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.cmp(b) != Ordering::Less)
    }
}

/// Sign of a vertex's mean-payoff value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueSign {
    NonNegative,
    Negative,
}

/// Partition of the vertices into `ν >= 0` and `ν < 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignPartition(pub Vec<ValueSign>);

impl SignPartition {
    pub fn get(&self, v: VertexId) -> ValueSign {
        self.0[v.index()]
    }

    pub fn nonnegative(&self) -> Vec<VertexId> {
        self.class(ValueSign::NonNegative)
    }

    pub fn negative(&self) -> Vec<VertexId> {
        self.class(ValueSign::Negative)
    }

    fn class(&self, sign: ValueSign) -> Vec<VertexId> {
        (0..self.0.len())
            .filter(|&v| self.0[v] == sign)
            .map(VertexId::from)
            .collect()
    }
}

/// `(|V| − 1)·W`, the bound at which `lwub_b` coincides with `lb`.
pub fn lower_bound_reduction(graph: &GameGraph) -> Option<u64> {
    (graph.vertex_count().saturating_sub(1) as u64).checked_mul(graph.max_abs_weight())
}
