//! Boundary cells around region seeds, the boundary dual graph, and the
//! stretch-bounded boundary route between two nodes.
//!
//! A node belongs to the cell of every seed that minimizes its distance to a
//! seed. Tied nodes keep all of their owners; the smallest seed id is their
//! canonical owner, which is what routing uses.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{approx_eq, Digraph, Direction, GraphError, Metric, NodeId, PathResult, WeightMode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("seed set is empty")]
    EmptySeedSet,
    #[error("seed {0} listed twice")]
    DuplicateSeed(NodeId),
    #[error("seed {0} is not a vertex of the graph")]
    UnknownSeed(NodeId),
    #[error("node {0} cannot reach any seed")]
    Stranded(NodeId),
    #[error("no boundary route between cells {from} and {to}")]
    NoDualRoute { from: NodeId, to: NodeId },
    #[error("construction needs at least 2 arcs, got {0}")]
    TooFewArcs(usize),
    #[error("construction needs m > epsilon > 0 (m = {m}, epsilon = {epsilon})")]
    InvalidWeights { m: f64, epsilon: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Designated seed (boundary) nodes, one per region. Kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSeedSet(Vec<NodeId>);

impl RegionSeedSet {
    pub fn new<I: IntoIterator<Item = NodeId>>(seeds: I) -> Result<Self, RegionError> {
        let mut v: Vec<NodeId> = seeds.into_iter().collect();
        if v.is_empty() {
            return Err(RegionError::EmptySeedSet);
        }
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(RegionError::DuplicateSeed(w[0]));
        }
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCellMap {
    metric: Metric,
    seeds: RegionSeedSet,
    ids: Vec<NodeId>,
    distance: Vec<f64>,
    owners: Vec<Vec<NodeId>>,
}

impl BoundaryCellMap {
    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn seeds(&self) -> &RegionSeedSet {
        &self.seeds
    }

    fn index(&self, v: NodeId) -> Option<usize> {
        self.ids.binary_search(&v).ok()
    }

    /// Every seed at minimal distance from `v`, ascending.
    pub fn owners(&self, v: NodeId) -> Option<&[NodeId]> {
        self.index(v).map(|i| self.owners[i].as_slice())
    }

    pub fn canonical_owner(&self, v: NodeId) -> Option<NodeId> {
        self.index(v).map(|i| self.owners[i][0])
    }

    /// Distance from `v` to its nearest seed under the cell metric.
    pub fn distance_to_seed(&self, v: NodeId) -> Option<f64> {
        self.index(v).map(|i| self.distance[i])
    }

    pub fn is_member(&self, v: NodeId, seed: NodeId) -> bool {
        self.owners(v).is_some_and(|o| o.contains(&seed))
    }

    /// B(seed) including tied nodes.
    pub fn members(&self, seed: NodeId) -> BTreeSet<NodeId> {
        self.ids
            .iter()
            .zip(&self.owners)
            .filter(|(_, o)| o.contains(&seed))
            .map(|(&v, _)| v)
            .collect()
    }

    /// Nodes whose canonical owner is `seed`.
    pub fn canonical_members(&self, seed: NodeId) -> BTreeSet<NodeId> {
        self.ids
            .iter()
            .zip(&self.owners)
            .filter(|(_, o)| o[0] == seed)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Nodes equidistant to two or more seeds.
    pub fn tie_nodes(&self) -> Vec<NodeId> {
        self.ids
            .iter()
            .zip(&self.owners)
            .filter(|(_, o)| o.len() > 1)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Graph-index mask of the canonical cell of `seed`.
    pub(crate) fn cell_mask(&self, seed: NodeId) -> Vec<bool> {
        self.owners.iter().map(|o| o[0] == seed).collect()
    }

    pub(crate) fn canonical_by_index(&self, i: usize) -> NodeId {
        self.owners[i][0]
    }
}

/// Assigns every node to the seeds minimizing its distance to a seed.
pub fn compute_boundary_cells(
    g: &Digraph,
    seeds: &RegionSeedSet,
    metric: Metric,
) -> Result<BoundaryCellMap, RegionError> {
    let seed_idx = seeds
        .as_slice()
        .iter()
        .map(|&s| g.index_of(s).map_err(|_| RegionError::UnknownSeed(s)))
        .collect::<Result<Vec<_>, _>>()?;
    let to_seed: Vec<Vec<Option<f64>>> = seed_idx
        .iter()
        .map(|&s| g.distances(&[s], Direction::Backward, metric, None))
        .collect();

    let n = g.vertex_count();
    let mut distance = Vec::with_capacity(n);
    let mut owners = Vec::with_capacity(n);
    for u in 0..n {
        let best = to_seed
            .iter()
            .filter_map(|d| d[u])
            .min_by(|a, b| a.total_cmp(b))
            .ok_or(RegionError::Stranded(g.id(u)))?;
        let tied: Vec<NodeId> = seeds
            .as_slice()
            .iter()
            .zip(&to_seed)
            .filter(|(_, d)| d[u].is_some_and(|x| approx_eq(x, best)))
            .map(|(&s, _)| s)
            .collect();
        distance.push(best);
        owners.push(tied);
    }
    Ok(BoundaryCellMap {
        metric,
        seeds: seeds.clone(),
        ids: g.ids().to_vec(),
        distance,
        owners,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContainmentOutcome {
    Pass,
    /// A vertex on the path lies outside the cell.
    Fail { witness: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub node: NodeId,
    pub seed: NodeId,
    pub path: PathResult,
    pub outcome: ContainmentOutcome,
    /// Path vertices that are members of the cell only through a tie.
    pub tie_vertices: Vec<NodeId>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.outcome == ContainmentOutcome::Pass
    }
}

/// Recomputes the canonical shortest path from `u` to its canonical seed and
/// checks every vertex on it belongs to that seed's cell.
pub fn verify_cell_containment(
    g: &Digraph,
    cells: &BoundaryCellMap,
    u: NodeId,
) -> Result<ContainmentReport, RegionError> {
    let seed = cells
        .canonical_owner(u)
        .ok_or(GraphError::UnknownVertex(u))?;
    let s = g.index_of(u)?;
    let t = g.index_of(seed)?;
    let metric = cells.metric();
    let to_seed = g.distances(&[t], Direction::Backward, metric, None);
    let path = g
        .lex_path(s, t, &to_seed, metric, None)
        .ok_or(RegionError::Stranded(u))?;

    let mut outcome = ContainmentOutcome::Pass;
    let mut tie_vertices = Vec::new();
    for &w in &path.vertices {
        if !cells.is_member(w, seed) {
            outcome = ContainmentOutcome::Fail { witness: w };
            break;
        }
        if cells.canonical_owner(w) != Some(seed) {
            tie_vertices.push(w);
        }
    }
    Ok(ContainmentReport {
        node: u,
        seed,
        path,
        outcome,
        tie_vertices,
    })
}

/// Cheapest cell-to-cell crossing, realized by the arc `crossing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualArc {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub crossing: (NodeId, NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDualGraph {
    arcs: BTreeMap<(NodeId, NodeId), DualArc>,
    graph: Digraph,
}

impl BoundaryDualGraph {
    pub fn arcs(&self) -> impl Iterator<Item = &DualArc> {
        self.arcs.values()
    }

    pub fn arc(&self, from: NodeId, to: NodeId) -> Option<&DualArc> {
        self.arcs.get(&(from, to))
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// The dual as an ordinary digraph over seed ids.
    pub fn as_digraph(&self) -> &Digraph {
        &self.graph
    }
}

/// One vertex per cell; an arc wherever a communication arc crosses two
/// cells, weighted by the cheapest seed→border→border→seed composition with
/// in-cell distances.
pub fn build_boundary_dual_graph(
    g: &Digraph,
    cells: &BoundaryCellMap,
) -> Result<BoundaryDualGraph, RegionError> {
    let n = g.vertex_count();
    let mut from_seed = vec![None; n];
    let mut to_seed = vec![None; n];
    for &seed in cells.seeds().as_slice() {
        let s = g.index_of(seed)?;
        let mask = cells.cell_mask(seed);
        let fwd = g.distances(&[s], Direction::Forward, Metric::Weighted, Some(&mask));
        let bwd = g.distances(&[s], Direction::Backward, Metric::Weighted, Some(&mask));
        for i in (0..n).filter(|&i| mask[i]) {
            from_seed[i] = fwd[i];
            to_seed[i] = bwd[i];
        }
    }

    let mut arcs: BTreeMap<(NodeId, NodeId), DualArc> = BTreeMap::new();
    for a in 0..n {
        let ca = cells.canonical_by_index(a);
        for l in g.out_links(a) {
            let cb = cells.canonical_by_index(l.node);
            if ca == cb {
                continue;
            }
            let (Some(da), Some(db)) = (from_seed[a], to_seed[l.node]) else {
                continue;
            };
            let weight = da + l.weight + db;
            let candidate = DualArc {
                from: ca,
                to: cb,
                weight,
                crossing: (g.id(a), g.id(l.node)),
            };
            // Arcs are scanned in (tail, head) order, so keeping the first of
            // equal-weight candidates keeps the lexicographically smallest.
            arcs.entry((ca, cb))
                .and_modify(|best| {
                    if weight < best.weight && !approx_eq(weight, best.weight) {
                        *best = candidate;
                    }
                })
                .or_insert(candidate);
        }
    }
    let graph = Digraph::from_arcs(
        cells.seeds().as_slice().iter().copied(),
        arcs.values().map(|d| (d.from, d.to, d.weight)),
        WeightMode::Euclidean,
    )?;
    Ok(BoundaryDualGraph {
        arcs,
        graph,
    })
}

/// Lexicographic shortest path from `x` to `y` that stays in `seed`'s cell.
pub(crate) fn in_cell_path(
    g: &Digraph,
    cells: &BoundaryCellMap,
    seed: NodeId,
    x: NodeId,
    y: NodeId,
) -> Result<Option<PathResult>, RegionError> {
    let mask = cells.cell_mask(seed);
    let xi = g.index_of(x)?;
    let yi = g.index_of(y)?;
    if !mask[xi] || !mask[yi] {
        return Ok(None);
    }
    let to_y = g.distances(&[yi], Direction::Backward, Metric::Weighted, Some(&mask));
    Ok(g.lex_path(xi, yi, &to_y, Metric::Weighted, Some(&mask)))
}

fn append(walk: &mut PathResult, segment: &PathResult) {
    debug_assert_eq!(walk.target(), segment.source());
    walk.vertices.extend_from_slice(&segment.vertices[1..]);
    walk.length += segment.length;
    walk.hops += segment.hops;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRoute {
    pub direct: PathResult,
    pub boundary: PathResult,
    /// Seeds of the cells visited by the boundary route, in order.
    pub cells: Vec<NodeId>,
    pub ratio: f64,
    /// Arc count of the direct path.
    pub hop_bound: usize,
    /// Whether `l(boundary) <= hop_bound * l(direct)`.
    pub within_bound: bool,
}

/// Direct shortest path versus the route that passes through the seed of
/// every cell on the dual-graph shortest route.
///
/// Returns `Ok(None)` when `t` is unreachable from `s`.
pub fn boundary_route(
    g: &Digraph,
    cells: &BoundaryCellMap,
    dual: &BoundaryDualGraph,
    s: NodeId,
    t: NodeId,
) -> Result<Option<BoundaryRoute>, RegionError> {
    let Some(direct) = g.shortest_path(s, t)? else {
        return Ok(None);
    };
    let cs = cells.canonical_owner(s).ok_or(GraphError::UnknownVertex(s))?;
    let ct = cells.canonical_owner(t).ok_or(GraphError::UnknownVertex(t))?;
    let hop_bound = direct.hops;

    if cs == ct {
        return Ok(Some(BoundaryRoute {
            boundary: direct.clone(),
            direct,
            cells: vec![cs],
            ratio: 1.0,
            hop_bound,
            within_bound: true,
        }));
    }

    let dual_path = dual
        .as_digraph()
        .shortest_path(cs, ct)?
        .ok_or(RegionError::NoDualRoute { from: cs, to: ct })?;
    let segment = |seed, x, y| -> Result<PathResult, RegionError> {
        in_cell_path(g, cells, seed, x, y)?.ok_or(RegionError::Stranded(x))
    };

    let mut walk = segment(cs, s, cs)?;
    for pair in dual_path.vertices.windows(2) {
        let arc = dual
            .arc(pair[0], pair[1])
            .expect("dual path follows dual arcs");
        let (a, b) = arc.crossing;
        append(&mut walk, &segment(pair[0], pair[0], a)?);
        let w = g.weight(a, b).expect("crossing is an arc");
        append(
            &mut walk,
            &PathResult {
                vertices: vec![a, b],
                length: w,
                hops: 1,
            },
        );
        append(&mut walk, &segment(pair[1], b, pair[1])?);
    }
    append(&mut walk, &segment(ct, ct, t)?);

    let ratio = walk.length / direct.length;
    // Relative slack covers float summation order only; unit weights compare exactly.
    let within_bound = walk.length <= hop_bound as f64 * direct.length * (1.0 + 1e-12);
    Ok(Some(BoundaryRoute {
        direct,
        boundary: walk,
        cells: dual_path.vertices,
        ratio,
        hop_bound,
        within_bound,
    }))
}

/// Instance on which the boundary route is stretched by nearly the direct
/// path's arc count.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub graph: Digraph,
    pub seeds: RegionSeedSet,
    pub source: NodeId,
    pub target: NodeId,
    /// Cells of this instance must be computed with weighted distances.
    pub metric: Metric,
}

/// Builds the tightness instance for an `arcs`-arc direct path.
///
/// Vertices `0..=arcs` form the direct path (`0` = source, `arcs` = target).
/// Each interior path vertex `i` gets a pendant seed `arcs + i` at distance
/// `m - epsilon`. End arcs weigh `m`, interior path arcs weigh `epsilon`.
pub fn worst_case_construction(arcs: usize, m: f64, epsilon: f64) -> Result<WorstCase, RegionError> {
    if arcs < 2 {
        return Err(RegionError::TooFewArcs(arcs));
    }
    if !(m > epsilon && epsilon > 0.0) {
        return Err(RegionError::InvalidWeights { m, epsilon });
    }
    let e = arcs as u32;
    let mut list = Vec::new();
    let mut link = |a: u32, b: u32, w: f64| {
        list.push((NodeId(a), NodeId(b), w));
        list.push((NodeId(b), NodeId(a), w));
    };
    for i in 0..e {
        let w = if i == 0 || i == e - 1 { m } else { epsilon };
        link(i, i + 1, w);
    }
    for i in 1..e {
        link(i, e + i, m - epsilon);
    }
    let graph = Digraph::from_arcs((0..2 * e).map(NodeId), list, WeightMode::Euclidean)?;
    let seeds = RegionSeedSet::new([NodeId(0), NodeId(e)].into_iter().chain((1..e).map(|i| NodeId(e + i))))?;
    Ok(WorstCase {
        graph,
        seeds,
        source: NodeId(0),
        target: NodeId(e),
        metric: Metric::Weighted,
    })
}
