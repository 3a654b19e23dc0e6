//! Seeded instance generators.
//!
//! Every generator is a pure function of its [`GenSpec`]. Randomness comes from
//! ChaCha8 seeded with `spec.seed`, split into independent streams per phase:
//! stream 0 draws the structure, stream 1 the weights (in edge order), stream 2
//! the owners. Adding edges to a family therefore never perturbs owners, and
//! weights of earlier edges stay put.
//!
//! Synthetic families draw weights uniformly from `weights` and subtract
//! `shift`. The reactive models (collect, supply, taxi) have fixed owners and
//! weights given by their parameters; `weights`, `shift` and `seed` do not
//! affect them.
//!
//! # Model reconstructions
//!
//! The models are small abstractions of three prose descriptions; there is no
//! formal source, so the state spaces below are choices made here.
//!
//! **collect.** A robot on a grid with obstacles collects items. Max states
//! are `(cell, item site, charged)`; the robot moves to a free neighbor or
//! idles, paying `move_cost` / `idle_cost`. On a dock cell an uncharged robot
//! may recharge (`+recharge`, sets `charged`). Entering the item's cell
//! collects it and hands over to the Min state `(cell)`, where the scheduler
//! places the next item on any other item site (weight 0) and `charged` resets.
//! The flag forbids recharging twice between two collections.
//!
//! **supply.** A truck serves delivery requests on a ring of locations with the
//! depot at 0. In the Min state `(location)` a request `(site, amount)` is
//! issued and the material is committed at once (`−amount`). In the Max state
//! `(location, site, committed)` the truck either steps along the ring towards
//! the site, which commits it to the delivery, or, while uncommitted, steps
//! towards the depot, where it may refill (`+refill`, also committing). Passing
//! the site on the way to the depot does not deliver unless the truck chooses
//! to stop. Steps carry weight 0 and always make progress, so a request is
//! served after finitely many steps.
//!
//! **taxi.** A taxi on a ring of locations. In the Min state `(location)` a
//! customer asks for a destination. In the Max state `(location, destination)`
//! the taxi either takes the ride (`fare_base + (fare_rate − drive_cost)·dist`,
//! ending at the destination) or declines and cruises to a neighbor
//! (`−drive_cost`).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{GameGraph, GraphError, Owner};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, GenError> {
    Err(GenError::InvalidSpec(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// Hamiltonian cycle plus `(edge_factor − 1)·n` uniform random edges.
    Sprand { n: usize, edge_factor: usize },
    /// Grid with wrap-around; edges to the right and lower neighbor. Each added
    /// cycle visits `cols` random distinct cells.
    Torus { rows: usize, cols: usize, cycles: usize },
    /// `layers` rings of `width` vertices stacked on a torus; each vertex has
    /// `degree` edges into the next layer at consecutive offsets from a random
    /// start.
    Layered { layers: usize, width: usize, degree: usize },
    Collect(CollectParams),
    Supply(SupplyParams),
    Taxi(TaxiParams),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectParams {
    pub rows: usize,
    pub cols: usize,
    /// Row-major cell indices.
    pub obstacles: Vec<usize>,
    pub docks: Vec<usize>,
    /// Cells where items may appear; `None` means every free non-dock cell.
    pub item_sites: Option<Vec<usize>>,
    pub move_cost: i64,
    pub idle_cost: i64,
    pub recharge: i64,
}

impl Default for CollectParams {
    fn default() -> Self {
        CollectParams {
            rows: 3,
            cols: 3,
            obstacles: Vec::new(),
            docks: vec![4],
            item_sites: None,
            move_cost: 1,
            idle_cost: 1,
            recharge: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupplyParams {
    /// Ring size including the depot at location 0.
    pub locations: usize,
    pub max_request: i64,
    pub refill: i64,
}

impl Default for SupplyParams {
    fn default() -> Self {
        SupplyParams {
            locations: 4,
            max_request: 2,
            refill: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaxiParams {
    pub locations: usize,
    pub drive_cost: i64,
    pub fare_base: i64,
    pub fare_rate: i64,
}

impl Default for TaxiParams {
    fn default() -> Self {
        TaxiParams {
            locations: 6,
            drive_cost: 2,
            fare_base: -1,
            fare_rate: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub family: Family,
    /// Inclusive weight range before the shift.
    pub weights: (i64, i64),
    pub shift: i64,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(family: Family) -> Self {
        GenSpec {
            family,
            weights: (1, 10_000),
            shift: 0,
            seed: 0,
        }
    }

    pub fn sprand(n: usize, edge_factor: usize) -> Self {
        Self::new(Family::Sprand { n, edge_factor })
    }

    pub fn torus(rows: usize, cols: usize, cycles: usize) -> Self {
        Self::new(Family::Torus { rows, cols, cycles })
    }

    pub fn layered(layers: usize, width: usize, degree: usize) -> Self {
        Self::new(Family::Layered { layers, width, degree })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weights(mut self, lo: i64, hi: i64) -> Self {
        self.weights = (lo, hi);
        self
    }

    pub fn with_shift(mut self, shift: i64) -> Self {
        self.shift = shift;
        self
    }

    /// Short name used in benchmark tables.
    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Sprand { .. } => "sprand",
            Family::Torus { .. } => "torus",
            Family::Layered { .. } => "layered",
            Family::Collect(_) => "collect",
            Family::Supply(_) => "supply",
            Family::Taxi(_) => "taxi",
        }
    }

    fn is_synthetic(&self) -> bool {
        matches!(self.family, Family::Sprand { .. } | Family::Torus { .. } | Family::Layered { .. })
    }
}

const STRUCTURE: u64 = 0;
const WEIGHTS: u64 = 1;
const OWNERS: u64 = 2;

fn stream(seed: u64, phase: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase);
    rng
}

/// Generates the instance described by `spec`.
pub fn generate(spec: &GenSpec) -> Result<GameGraph, GenError> {
    if spec.is_synthetic() {
        let (lo, hi) = spec.weights;
        if lo > hi {
            return invalid(format!("empty weight range [{lo}, {hi}]"));
        }
        if lo.checked_sub(spec.shift).is_none() || hi.checked_sub(spec.shift).is_none() {
            return invalid("shift overflows the weight range");
        }
    }
    match &spec.family {
        Family::Sprand { n, edge_factor } => gen_sprand(spec, *n, *edge_factor),
        Family::Torus { rows, cols, cycles } => gen_torus(spec, *rows, *cols, *cycles),
        Family::Layered { layers, width, degree } => gen_layered(spec, *layers, *width, *degree),
        Family::Collect(p) => gen_collect(p),
        Family::Supply(p) => gen_supply(p),
        Family::Taxi(p) => gen_taxi(p),
    }
}

/// Attaches weights and owners to a synthetic edge list.
fn finish(spec: &GenSpec, n: usize, arcs: Vec<(usize, usize)>) -> Result<GameGraph, GenError> {
    let mut wr = stream(spec.seed, WEIGHTS);
    let mut or = stream(spec.seed, OWNERS);
    let (lo, hi) = spec.weights;
    let triples: Vec<_> = arcs
        .into_iter()
        .map(|(u, v)| (u, v, wr.gen_range(lo..=hi) - spec.shift))
        .collect();
    let owners = (0..n)
        .map(|_| if or.gen_bool(0.5) { Owner::Max } else { Owner::Min })
        .collect();
    Ok(GameGraph::from_triples(owners, triples)?)
}

fn gen_sprand(spec: &GenSpec, n: usize, edge_factor: usize) -> Result<GameGraph, GenError> {
    if n == 0 || edge_factor == 0 {
        return invalid("sprand needs n >= 1 and edge factor >= 1");
    }
    let m = n
        .checked_mul(edge_factor)
        .ok_or_else(|| GenError::InvalidSpec("edge count overflows".into()))?;
    let mut rng = stream(spec.seed, STRUCTURE);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut arcs = Vec::with_capacity(m);
    for i in 0..n {
        arcs.push((perm[i], perm[(i + 1) % n]));
    }
    for _ in n..m {
        arcs.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    finish(spec, n, arcs)
}

fn gen_torus(spec: &GenSpec, rows: usize, cols: usize, cycles: usize) -> Result<GameGraph, GenError> {
    if rows < 2 || cols < 2 {
        return invalid("torus dimensions must be at least 2x2");
    }
    let n = rows * cols;
    let at = |r: usize, c: usize| (r % rows) * cols + c % cols;
    let mut arcs = Vec::with_capacity(2 * n + cycles * cols);
    for r in 0..rows {
        for c in 0..cols {
            arcs.push((at(r, c), at(r, c + 1)));
            arcs.push((at(r, c), at(r + 1, c)));
        }
    }
    let mut rng = stream(spec.seed, STRUCTURE);
    for _ in 0..cycles {
        let cells: Vec<usize> = rand::seq::index::sample(&mut rng, n, cols).into_vec();
        for i in 0..cells.len() {
            arcs.push((cells[i], cells[(i + 1) % cells.len()]));
        }
    }
    finish(spec, n, arcs)
}

fn gen_layered(spec: &GenSpec, layers: usize, width: usize, degree: usize) -> Result<GameGraph, GenError> {
    if layers < 2 || width < 1 || degree < 1 || degree > width {
        return invalid("layered needs layers >= 2 and 1 <= degree <= width");
    }
    let n = layers * width;
    let mut rng = stream(spec.seed, STRUCTURE);
    let mut arcs = Vec::with_capacity(n * degree);
    for l in 0..layers {
        let next = (l + 1) % layers;
        for i in 0..width {
            let start = rng.gen_range(0..width);
            for j in 0..degree {
                arcs.push((l * width + i, next * width + (start + j) % width));
            }
        }
    }
    finish(spec, n, arcs)
}

fn gen_collect(p: &CollectParams) -> Result<GameGraph, GenError> {
    let cells = p.rows * p.cols;
    if p.rows == 0 || p.cols == 0 {
        return invalid("collect grid must be non-empty");
    }
    if p.obstacles.iter().chain(&p.docks).any(|&c| c >= cells) {
        return invalid("collect cell index out of range");
    }
    let free: Vec<bool> = (0..cells).map(|c| !p.obstacles.contains(&c)).collect();
    if p.docks.iter().any(|&d| !free[d]) {
        return invalid("dock on an obstacle");
    }
    let sites: Vec<usize> = match &p.item_sites {
        Some(s) => {
            if s.iter().any(|&c| c >= cells || !free[c]) {
                return invalid("item site out of range or blocked");
            }
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            s
        }
        None => (0..cells).filter(|&c| free[c] && !p.docks.contains(&c)).collect(),
    };
    if sites.len() < 2 {
        return invalid("collect needs at least two item sites");
    }
    let free_cells: Vec<usize> = (0..cells).filter(|&c| free[c]).collect();
    let k = sites.len();

    // Min states first, indexed by cell; then Max states (cell, site, charged)
    // skipping cell == site.
    let mut min_id = vec![usize::MAX; cells];
    let mut owners = Vec::new();
    for &c in &free_cells {
        min_id[c] = owners.len();
        owners.push(Owner::Min);
    }
    let mut max_id = vec![usize::MAX; cells * k * 2];
    let key = |c: usize, s: usize, charged: bool| (c * k + s) * 2 + charged as usize;
    for &c in &free_cells {
        for (s, &site) in sites.iter().enumerate() {
            if site == c {
                continue;
            }
            for charged in [false, true] {
                max_id[key(c, s, charged)] = owners.len();
                owners.push(Owner::Max);
            }
        }
    }

    let neighbors = |c: usize| {
        let (r, col) = (c / p.cols, c % p.cols);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(c - p.cols);
        }
        if r + 1 < p.rows {
            out.push(c + p.cols);
        }
        if col > 0 {
            out.push(c - 1);
        }
        if col + 1 < p.cols {
            out.push(c + 1);
        }
        out.retain(|&x| free[x]);
        out
    };

    let mut edges = Vec::new();
    for &c in &free_cells {
        for (s, &site) in sites.iter().enumerate() {
            if site != c {
                edges.push((min_id[c], max_id[key(c, s, false)], 0));
            }
        }
    }
    for &c in &free_cells {
        for (s, &site) in sites.iter().enumerate() {
            if site == c {
                continue;
            }
            for charged in [false, true] {
                let v = max_id[key(c, s, charged)];
                edges.push((v, v, -p.idle_cost));
                for x in neighbors(c) {
                    let to = if x == site { min_id[x] } else { max_id[key(x, s, charged)] };
                    edges.push((v, to, -p.move_cost));
                }
                if !charged && p.docks.contains(&c) {
                    edges.push((v, max_id[key(c, s, true)], p.recharge));
                }
            }
        }
    }
    Ok(GameGraph::from_triples(owners, edges)?)
}

/// Steps from `a` towards `b` on a ring of size `n` (shorter way, ties clockwise).
fn ring_step(a: usize, b: usize, n: usize) -> usize {
    let cw = (b + n - a) % n;
    if cw <= n - cw {
        (a + 1) % n
    } else {
        (a + n - 1) % n
    }
}

fn ring_dist(a: usize, b: usize, n: usize) -> usize {
    let cw = (b + n - a) % n;
    cw.min(n - cw)
}

fn gen_supply(p: &SupplyParams) -> Result<GameGraph, GenError> {
    let l = p.locations;
    if l < 2 || p.max_request < 1 {
        return invalid("supply needs at least two locations and max request >= 1");
    }
    // Min state per location, then Max states (location, site, committed). An
    // uncommitted truck may stand on its site while passing towards the depot.
    let mut owners = vec![Owner::Min; l];
    let mut max_id = vec![usize::MAX; l * l * 2];
    let key = |loc: usize, site: usize, committed: bool| (loc * l + site) * 2 + committed as usize;
    let exists = |loc: usize, site: usize, committed: bool| loc != site || !committed;
    for loc in 0..l {
        for site in 1..l {
            for committed in [false, true] {
                if exists(loc, site, committed) {
                    max_id[key(loc, site, committed)] = owners.len();
                    owners.push(Owner::Max);
                }
            }
        }
    }
    let mut edges = Vec::new();
    for loc in 0..l {
        for site in 1..l {
            if site == loc {
                continue;
            }
            for amount in 1..=p.max_request {
                edges.push((loc, max_id[key(loc, site, false)], -amount));
            }
        }
    }
    for loc in 0..l {
        for site in 1..l {
            for committed in [false, true] {
                if !exists(loc, site, committed) {
                    continue;
                }
                let v = max_id[key(loc, site, committed)];
                if loc == site {
                    edges.push((v, site, 0));
                } else {
                    let toward = ring_step(loc, site, l);
                    let to = if toward == site { site } else { max_id[key(toward, site, true)] };
                    edges.push((v, to, 0));
                }
                if !committed {
                    if loc == 0 {
                        edges.push((v, max_id[key(0, site, true)], p.refill));
                    } else {
                        edges.push((v, max_id[key(ring_step(loc, 0, l), site, false)], 0));
                    }
                }
            }
        }
    }
    Ok(GameGraph::from_triples(owners, edges)?)
}

fn gen_taxi(p: &TaxiParams) -> Result<GameGraph, GenError> {
    let l = p.locations;
    if l < 2 {
        return invalid("taxi needs at least two locations");
    }
    let mut owners = vec![Owner::Min; l];
    let mut max_id = vec![usize::MAX; l * l];
    for loc in 0..l {
        for dest in 0..l {
            if dest != loc {
                max_id[loc * l + dest] = owners.len();
                owners.push(Owner::Max);
            }
        }
    }
    let mut edges = Vec::new();
    for loc in 0..l {
        for dest in 0..l {
            if dest == loc {
                continue;
            }
            let v = max_id[loc * l + dest];
            edges.push((loc, v, 0));
            let dist = ring_dist(loc, dest, l) as i64;
            edges.push((v, dest, p.fare_base + (p.fare_rate - p.drive_cost) * dist));
            edges.push((v, (loc + 1) % l, -p.drive_cost));
            if l > 2 {
                edges.push((v, (loc + l - 1) % l, -p.drive_cost));
            }
        }
    }
    Ok(GameGraph::from_triples(owners, edges)?)
}

/// Small random game for differential testing: `1..=n_max` vertices, random
/// owners, one to three outgoing edges per vertex, weights in `[-w_max, w_max]`.
pub fn random_game(seed: u64, n_max: usize, w_max: i64) -> GameGraph {
    let mut rng = stream(seed, STRUCTURE);
    let n = rng.gen_range(1..=n_max.max(1));
    let owners = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Owner::Max } else { Owner::Min })
        .collect();
    let mut edges = Vec::new();
    for v in 0..n {
        for _ in 0..rng.gen_range(1..=3) {
            edges.push((v, rng.gen_range(0..n), rng.gen_range(-w_max..=w_max)));
        }
    }
    GameGraph::from_triples(owners, edges).expect("every vertex has an edge")
}

/// Result of [`tune_shift`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftChoice {
    pub shift: i64,
    /// Fraction of vertices with negative value at that shift.
    pub negative_fraction: f64,
}

/// Smallest shift in `[lo − 1, hi + 1]` at which at least `target` of the
/// vertices have negative value (sign computed by `sign_count`, which returns
/// the number of negative vertices).
///
/// Larger shifts lower every weight, so the count is monotone and a binary
/// search applies. Only meaningful for the synthetic families.
pub fn tune_shift<E>(
    spec: &GenSpec,
    target: f64,
    mut sign_count: impl FnMut(&GameGraph) -> Result<usize, E>,
) -> Result<ShiftChoice, TuneError<E>> {
    if !spec.is_synthetic() {
        return Err(TuneError::Gen(GenError::InvalidSpec("shift applies to synthetic families only".into())));
    }
    let (lo, hi) = spec.weights;
    let mut eval = |shift: i64| -> Result<f64, TuneError<E>> {
        let g = generate(&spec.clone().with_shift(shift)).map_err(TuneError::Gen)?;
        let neg = sign_count(&g).map_err(TuneError::Solve)?;
        Ok(neg as f64 / g.vertex_count() as f64)
    };
    let (mut a, mut b) = (lo - 1, hi + 1);
    let mut fb = eval(b)?;
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        let f = eval(mid)?;
        if f >= target {
            b = mid;
            fb = f;
        } else {
            a = mid;
        }
    }
    Ok(ShiftChoice {
        shift: b,
        negative_fraction: fb,
    })
}

#[derive(Debug, Error)]
pub enum TuneError<E> {
    #[error(transparent)]
    Gen(GenError),
    #[error("sign computation failed")]
    Solve(E),
}
