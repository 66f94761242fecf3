//! Weighted communication digraph over deployed sensor nodes.
//!
//! Vertices are kept sorted by [`NodeId`], so the dense index order used by
//! the search routines coincides with id order. Every tie-break that asks for
//! "the smallest id" can therefore compare indices directly.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A deployed sensor: position in meters, radio reach, and region bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePos {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub radio_range: f64,
    pub is_boundary_node: bool,
    pub region_id: Option<u32>,
}

impl NodePos {
    pub fn new(id: u32, x: f64, y: f64, radio_range: f64) -> Self {
        Self {
            id: NodeId(id),
            x,
            y,
            radio_range,
            is_boundary_node: false,
            region_id: None,
        }
    }

    pub fn distance_to(&self, other: &NodePos) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// How arc weights are assigned when a digraph is built from positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    #[default]
    Euclidean,
    Unit,
}

/// Distance notion used by searches: hop count or summed arc weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Hops,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("node list is empty")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("unknown vertex {0}")]
    UnknownVertex(NodeId),
    #[error("self-loop at vertex {0}")]
    SelfLoop(NodeId),
    #[error("duplicate arc ({0}, {1})")]
    DuplicateArc(NodeId, NodeId),
    #[error("arc ({from}, {to}) has invalid weight {weight}")]
    InvalidWeight { from: NodeId, to: NodeId, weight: f64 },
    #[error("node {0} has non-positive radio range")]
    InvalidRange(NodeId),
    #[error("target set is empty")]
    EmptyTargetSet,
}

/// One adjacency entry. In an out-list `node` is the head of the arc, in an
/// in-list it is the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub node: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// Distances from the roots along arcs.
    Forward,
    /// Distances to the roots (arcs traversed backwards).
    Backward,
}

/// A path through the digraph with its summed length and arc count.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub vertices: Vec<NodeId>,
    pub length: f64,
    pub hops: usize,
}

impl PathResult {
    pub fn trivial(v: NodeId) -> Self {
        Self {
            vertices: vec![v],
            length: 0.0,
            hops: 0,
        }
    }

    pub fn source(&self) -> NodeId {
        self.vertices[0]
    }

    pub fn target(&self) -> NodeId {
        *self.vertices.last().expect("path has at least one vertex")
    }
}

/// In-set, out-set and their union for one vertex, with degrees.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Neighborhood {
    pub incoming: BTreeSet<NodeId>,
    pub outgoing: BTreeSet<NodeId>,
    pub union: BTreeSet<NodeId>,
    pub in_degree: usize,
    pub out_degree: usize,
}

/// Relative float comparison used for shortest-path ties.
pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    ids: Vec<NodeId>,
    out: Vec<Vec<Link>>,
    inc: Vec<Vec<Link>>,
    mode: WeightMode,
}

impl Digraph {
    /// Builds a digraph from explicit vertices and weighted arcs.
    pub fn from_arcs<V, A>(vertices: V, arcs: A, mode: WeightMode) -> Result<Self, GraphError>
    where
        V: IntoIterator<Item = NodeId>,
        A: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut ids: Vec<NodeId> = vertices.into_iter().collect();
        if ids.is_empty() {
            return Err(GraphError::Empty);
        }
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateNode(w[0]));
        }
        let n = ids.len();
        let mut g = Digraph {
            ids,
            out: vec![Vec::new(); n],
            inc: vec![Vec::new(); n],
            mode,
        };
        for (from, to, weight) in arcs {
            let weight = match mode {
                WeightMode::Unit => 1.0,
                WeightMode::Euclidean => weight,
            };
            g.push_arc(from, to, weight)?;
        }
        g.finish()?;
        Ok(g)
    }

    fn push_arc(&mut self, from: NodeId, to: NodeId, weight: f64) -> Result<(), GraphError> {
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(GraphError::InvalidWeight { from, to, weight });
        }
        let u = self.index_of(from)?;
        let v = self.index_of(to)?;
        self.out[u].push(Link { node: v, weight });
        self.inc[v].push(Link { node: u, weight });
        Ok(())
    }

    fn finish(&mut self) -> Result<(), GraphError> {
        for (u, links) in self.out.iter_mut().enumerate() {
            links.sort_by_key(|l| l.node);
            if let Some(w) = links.windows(2).find(|w| w[0].node == w[1].node) {
                return Err(GraphError::DuplicateArc(self.ids[u], self.ids[w[0].node]));
            }
        }
        for links in &mut self.inc {
            links.sort_by_key(|l| l.node);
        }
        Ok(())
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.mode
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn arc_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.ids.binary_search(&v).is_ok()
    }

    pub fn index_of(&self, v: NodeId) -> Result<usize, GraphError> {
        self.ids
            .binary_search(&v)
            .map_err(|_| GraphError::UnknownVertex(v))
    }

    pub fn id(&self, index: usize) -> NodeId {
        self.ids[index]
    }

    pub fn out_links(&self, index: usize) -> &[Link] {
        &self.out[index]
    }

    pub fn in_links(&self, index: usize) -> &[Link] {
        &self.inc[index]
    }

    /// Weight of arc `(from, to)`, if present.
    pub fn weight(&self, from: NodeId, to: NodeId) -> Option<f64> {
        let u = self.index_of(from).ok()?;
        let v = self.index_of(to).ok()?;
        self.arc_weight(u, v)
    }

    pub(crate) fn arc_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.out[u]
            .binary_search_by_key(&v, |l| l.node)
            .ok()
            .map(|i| self.out[u][i].weight)
    }

    /// All arcs as `(tail, head, weight)`, ordered by tail then head.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.out.iter().enumerate().flat_map(move |(u, links)| {
            links
                .iter()
                .map(move |l| (self.ids[u], self.ids[l.node], l.weight))
        })
    }

    /// Same topology with every weight replaced by `f(tail, head, weight)`.
    pub fn map_weights<F>(&self, mut f: F) -> Result<Digraph, GraphError>
    where
        F: FnMut(NodeId, NodeId, f64) -> f64,
    {
        let arcs: Vec<_> = self.arcs().map(|(u, v, w)| (u, v, f(u, v, w))).collect();
        Digraph::from_arcs(self.ids.iter().copied(), arcs, WeightMode::Euclidean)
    }

    /// Adds a seeded random perturbation in `(0, epsilon]` to every arc so that
    /// equal-length paths become distinguishable.
    pub fn perturbed(&self, seed: u64, epsilon: f64) -> Result<Digraph, GraphError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.map_weights(|_, _, w| w + epsilon * (1.0 - rng.gen::<f64>()))
    }

    /// Subgraph induced by the vertices for which `keep` holds.
    pub fn restrict<F>(&self, keep: F) -> Result<Digraph, GraphError>
    where
        F: Fn(NodeId) -> bool,
    {
        let vertices: Vec<NodeId> = self.ids.iter().copied().filter(|&v| keep(v)).collect();
        let arcs: Vec<_> = self
            .arcs()
            .filter(|&(u, v, _)| keep(u) && keep(v))
            .collect();
        let mode = self.mode;
        let mut g = Digraph::from_arcs(vertices, Vec::new(), mode)?;
        for (u, v, w) in arcs {
            g.push_arc(u, v, w)?;
        }
        g.finish()?;
        Ok(g)
    }

    pub fn neighborhoods(&self, v: NodeId) -> Result<Neighborhood, GraphError> {
        let i = self.index_of(v)?;
        let incoming: BTreeSet<NodeId> = self.inc[i].iter().map(|l| self.ids[l.node]).collect();
        let outgoing: BTreeSet<NodeId> = self.out[i].iter().map(|l| self.ids[l.node]).collect();
        let union = incoming.union(&outgoing).copied().collect();
        Ok(Neighborhood {
            in_degree: incoming.len(),
            out_degree: outgoing.len(),
            incoming,
            outgoing,
            union,
        })
    }

    /// Hop count of a shortest directed path, `None` when unreachable.
    pub fn hop_distance(&self, u: NodeId, v: NodeId) -> Result<Option<u32>, GraphError> {
        let s = self.index_of(u)?;
        let t = self.index_of(v)?;
        Ok(self.bfs(&[s], Direction::Forward, None)[t])
    }

    /// Breadth-first hop counts from (or to) a set of roots.
    pub(crate) fn bfs(
        &self,
        roots: &[usize],
        dir: Direction,
        allowed: Option<&[bool]>,
    ) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.ids.len()];
        let mut queue = VecDeque::new();
        for &r in roots {
            if dist[r].is_none() {
                dist[r] = Some(0);
                queue.push_back(r);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices are labelled");
            for l in self.links(u, dir) {
                if dist[l.node].is_none() && allowed.is_none_or(|a| a[l.node]) {
                    dist[l.node] = Some(du + 1);
                    queue.push_back(l.node);
                }
            }
        }
        dist
    }

    fn links(&self, u: usize, dir: Direction) -> &[Link] {
        match dir {
            Direction::Forward => &self.out[u],
            Direction::Backward => &self.inc[u],
        }
    }

    /// Multi-root Dijkstra. With [`Metric::Hops`] every arc counts 1.
    pub(crate) fn distances(
        &self,
        roots: &[usize],
        dir: Direction,
        metric: Metric,
        allowed: Option<&[bool]>,
    ) -> Vec<Option<f64>> {
        if metric == Metric::Hops {
            return self
                .bfs(roots, dir, allowed)
                .into_iter()
                .map(|d| d.map(f64::from))
                .collect();
        }
        let mut dist: Vec<Option<f64>> = vec![None; self.ids.len()];
        let mut heap = BinaryHeap::new();
        for &r in roots {
            dist[r] = Some(0.0);
            heap.push(QueueEntry { cost: 0.0, node: r });
        }
        while let Some(QueueEntry { cost, node }) = heap.pop() {
            if dist[node].is_some_and(|d| cost > d) {
                continue;
            }
            for l in self.links(node, dir) {
                if !allowed.is_none_or(|a| a[l.node]) {
                    continue;
                }
                let next = cost + l.weight;
                if dist[l.node].is_none_or(|d| next < d) {
                    dist[l.node] = Some(next);
                    heap.push(QueueEntry {
                        cost: next,
                        node: l.node,
                    });
                }
            }
        }
        dist
    }

    /// Lexicographically smallest shortest path from `x` to `y`, given the
    /// distances of every vertex *to* `y` under `metric`.
    pub(crate) fn lex_path(
        &self,
        x: usize,
        y: usize,
        to_target: &[Option<f64>],
        metric: Metric,
        allowed: Option<&[bool]>,
    ) -> Option<PathResult> {
        to_target[x]?;
        let mut vertices = vec![self.ids[x]];
        let mut length = 0.0;
        let mut cur = x;
        while cur != y {
            let dc = to_target[cur]?;
            let step = self.out[cur].iter().find(|l| {
                allowed.is_none_or(|a| a[l.node])
                    && to_target[l.node].is_some_and(|dn| {
                        let w = match metric {
                            Metric::Hops => 1.0,
                            Metric::Weighted => l.weight,
                        };
                        approx_eq(w + dn, dc)
                    })
            })?;
            length += step.weight;
            cur = step.node;
            vertices.push(self.ids[cur]);
            if vertices.len() > self.ids.len() {
                return None;
            }
        }
        Some(PathResult {
            hops: vertices.len() - 1,
            vertices,
            length,
        })
    }

    /// Minimum-length path from `x` to `y`; `None` marks an unreachable pair.
    ///
    /// Among equal-length paths the one with the lexicographically smallest
    /// vertex-id sequence is returned.
    pub fn shortest_path(&self, x: NodeId, y: NodeId) -> Result<Option<PathResult>, GraphError> {
        let s = self.index_of(x)?;
        let t = self.index_of(y)?;
        let to_t = self.distances(&[t], Direction::Backward, Metric::Weighted, None);
        Ok(self.lex_path(s, t, &to_t, Metric::Weighted, None))
    }

    /// Hop-minimal path with the same lexicographic tie-break.
    pub fn fewest_hops_path(
        &self,
        x: NodeId,
        y: NodeId,
    ) -> Result<Option<PathResult>, GraphError> {
        let s = self.index_of(x)?;
        let t = self.index_of(y)?;
        let to_t = self.distances(&[t], Direction::Backward, Metric::Hops, None);
        Ok(self.lex_path(s, t, &to_t, Metric::Hops, None))
    }

    /// Shortest distance from any of `sources` to any of `targets`.
    pub fn set_distance(
        &self,
        sources: &[NodeId],
        targets: &[NodeId],
    ) -> Result<Option<f64>, GraphError> {
        if targets.is_empty() {
            return Err(GraphError::EmptyTargetSet);
        }
        let roots = targets
            .iter()
            .map(|&t| self.index_of(t))
            .collect::<Result<Vec<_>, _>>()?;
        let srcs = sources
            .iter()
            .map(|&s| self.index_of(s))
            .collect::<Result<Vec<_>, _>>()?;
        let to_set = self.distances(&roots, Direction::Backward, Metric::Weighted, None);
        Ok(srcs
            .into_iter()
            .filter_map(|s| to_set[s])
            .min_by(|a, b| a.total_cmp(b)))
    }

    /// True when every vertex reaches every other.
    pub fn is_strongly_connected(&self) -> bool {
        let fwd = self.bfs(&[0], Direction::Forward, None);
        let bwd = self.bfs(&[0], Direction::Backward, None);
        fwd.iter().chain(bwd.iter()).all(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    cost: f64,
    node: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Unit-disk digraph: arc `(u, v)` iff `v` lies within `u`'s radio range.
///
/// With `symmetric` set, a pair is linked in both directions only when each
/// endpoint covers the other.
pub fn build_unit_disk_digraph(
    nodes: &[NodePos],
    symmetric: bool,
    mode: WeightMode,
) -> Result<Digraph, GraphError> {
    if nodes.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut seen = BTreeSet::new();
    for n in nodes {
        if !seen.insert(n.id) {
            return Err(GraphError::DuplicateNode(n.id));
        }
        if !(n.radio_range > 0.0) {
            return Err(GraphError::InvalidRange(n.id));
        }
    }
    let mut arcs = Vec::new();
    for a in nodes {
        for b in nodes {
            if a.id == b.id {
                continue;
            }
            let d = a.distance_to(b);
            let covered = if symmetric {
                d <= a.radio_range && d <= b.radio_range
            } else {
                d <= a.radio_range
            };
            if covered {
                arcs.push((a.id, b.id, d));
            }
        }
    }
    Digraph::from_arcs(nodes.iter().map(|n| n.id), arcs, mode)
}

/// Draws `count` nodes uniformly in a `side`×`side` square until the
/// symmetric unit-disk graph at `range` is connected.
pub fn random_connected_nodes<R: Rng>(
    rng: &mut R,
    count: usize,
    side: f64,
    range: f64,
    max_attempts: usize,
) -> Option<Vec<NodePos>> {
    for _ in 0..max_attempts {
        let nodes: Vec<NodePos> = (0..count)
            .map(|i| {
                NodePos::new(
                    i as u32,
                    rng.gen_range(0.0..=side),
                    rng.gen_range(0.0..=side),
                    range,
                )
            })
            .collect();
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).ok()?;
        if g.is_strongly_connected() {
            return Some(nodes);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn path_graph(n: u32, mode: WeightMode) -> Digraph {
        let arcs = (0..n - 1).flat_map(|i| {
            [
                (NodeId(i), NodeId(i + 1), 1.0),
                (NodeId(i + 1), NodeId(i), 1.0),
            ]
        });
        Digraph::from_arcs((0..n).map(NodeId), arcs, mode).unwrap()
    }

    #[test]
    fn two_nodes_within_range_link_both_ways() {
        let nodes = [NodePos::new(0, 0.0, 0.0, 15.0), NodePos::new(1, 10.0, 0.0, 15.0)];
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        assert_eq!(g.arc_count(), 2);
        assert_eq!(g.weight(NodeId(0), NodeId(1)), Some(10.0));
        assert_eq!(g.weight(NodeId(1), NodeId(0)), Some(10.0));
    }

    #[test]
    fn two_nodes_out_of_range_are_unlinked() {
        let nodes = [NodePos::new(0, 0.0, 0.0, 15.0), NodePos::new(1, 20.0, 0.0, 15.0)];
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        assert_eq!(g.arc_count(), 0);
    }

    #[test]
    fn unit_mode_sets_weights_to_one() {
        let nodes = [NodePos::new(0, 0.0, 0.0, 15.0), NodePos::new(1, 10.0, 0.0, 15.0)];
        let g = build_unit_disk_digraph(&nodes, false, WeightMode::Unit).unwrap();
        assert!(g.arcs().all(|(_, _, w)| w == 1.0));
    }

    #[test]
    fn asymmetric_ranges_give_one_directed_arc() {
        let nodes = [NodePos::new(0, 0.0, 0.0, 15.0), NodePos::new(1, 10.0, 0.0, 5.0)];
        let directed = build_unit_disk_digraph(&nodes, false, WeightMode::Euclidean).unwrap();
        assert_eq!(directed.arc_count(), 1);
        assert!(directed.weight(NodeId(0), NodeId(1)).is_some());
        let sym = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        assert_eq!(sym.arc_count(), 0);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let nodes = [NodePos::new(3, 0.0, 0.0, 15.0), NodePos::new(3, 10.0, 0.0, 15.0)];
        assert_eq!(
            build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean),
            Err(GraphError::DuplicateNode(NodeId(3)))
        );
    }

    #[test]
    fn self_loops_and_bad_weights_are_rejected() {
        let v = ids(&[0, 1]);
        assert_eq!(
            Digraph::from_arcs(v.clone(), [(NodeId(0), NodeId(0), 1.0)], WeightMode::Euclidean),
            Err(GraphError::SelfLoop(NodeId(0)))
        );
        assert!(matches!(
            Digraph::from_arcs(v, [(NodeId(0), NodeId(1), 0.0)], WeightMode::Euclidean),
            Err(GraphError::InvalidWeight { .. })
        ));
    }

    #[test]
    fn isolated_vertex_has_empty_neighborhoods() {
        let g = Digraph::from_arcs(ids(&[0]), [], WeightMode::Euclidean).unwrap();
        let n = g.neighborhoods(NodeId(0)).unwrap();
        assert!(n.incoming.is_empty() && n.outgoing.is_empty() && n.union.is_empty());
        assert_eq!((n.in_degree, n.out_degree), (0, 0));
    }

    #[test]
    fn single_arc_neighborhood() {
        let g = Digraph::from_arcs(
            ids(&[0, 1]),
            [(NodeId(0), NodeId(1), 1.0)],
            WeightMode::Euclidean,
        )
        .unwrap();
        let n = g.neighborhoods(NodeId(1)).unwrap();
        assert_eq!(n.incoming, [NodeId(0)].into());
        assert!(n.outgoing.is_empty());
        assert_eq!(n.union, [NodeId(0)].into());
        assert_eq!(g.neighborhoods(NodeId(7)), Err(GraphError::UnknownVertex(NodeId(7))));
    }

    #[test]
    fn hop_distance_basics() {
        let g = Digraph::from_arcs(
            ids(&[0, 1, 2]),
            [(NodeId(0), NodeId(1), 3.0), (NodeId(1), NodeId(2), 4.0)],
            WeightMode::Euclidean,
        )
        .unwrap();
        assert_eq!(g.hop_distance(NodeId(1), NodeId(1)).unwrap(), Some(0));
        assert_eq!(g.hop_distance(NodeId(0), NodeId(2)).unwrap(), Some(2));
        assert_eq!(g.hop_distance(NodeId(2), NodeId(0)).unwrap(), None);
        assert!(g.hop_distance(NodeId(0), NodeId(9)).is_err());
    }

    #[test]
    fn shortest_path_trivial_and_unreachable() {
        let g = Digraph::from_arcs(
            ids(&[0, 1, 2, 3]),
            [(NodeId(0), NodeId(1), 2.0), (NodeId(2), NodeId(3), 2.0)],
            WeightMode::Euclidean,
        )
        .unwrap();
        let p = g.shortest_path(NodeId(0), NodeId(0)).unwrap().unwrap();
        assert_eq!((p.length, p.hops), (0.0, 0));
        assert_eq!(g.shortest_path(NodeId(0), NodeId(3)).unwrap(), None);
    }

    #[test]
    fn equal_length_paths_break_ties_lexicographically() {
        // 0 -> {2, 1} -> 3 with equal lengths; prefer the route through 1.
        let g = Digraph::from_arcs(
            ids(&[0, 1, 2, 3]),
            [
                (NodeId(0), NodeId(2), 1.0),
                (NodeId(0), NodeId(1), 1.0),
                (NodeId(2), NodeId(3), 1.0),
                (NodeId(1), NodeId(3), 1.0),
            ],
            WeightMode::Euclidean,
        )
        .unwrap();
        let p = g.shortest_path(NodeId(0), NodeId(3)).unwrap().unwrap();
        assert_eq!(p.vertices, ids(&[0, 1, 3]));
    }

    #[test]
    fn perturbation_separates_ties_deterministically() {
        let g = path_graph(4, WeightMode::Euclidean);
        let a = g.perturbed(7, 1e-6).unwrap();
        let b = g.perturbed(7, 1e-6).unwrap();
        assert_eq!(a, b);
        assert!(a.arcs().all(|(u, v, w)| w > g.weight(u, v).unwrap()));
    }

    #[test]
    fn set_distance_cases() {
        let g = Digraph::from_arcs(
            ids(&[0, 1, 2]),
            [(NodeId(0), NodeId(1), 3.0), (NodeId(1), NodeId(2), 4.0)],
            WeightMode::Euclidean,
        )
        .unwrap();
        assert_eq!(g.set_distance(&[NodeId(2)], &[NodeId(2), NodeId(0)]).unwrap(), Some(0.0));
        assert_eq!(g.set_distance(&[NodeId(0)], &[NodeId(2)]).unwrap(), Some(7.0));
        assert_eq!(g.set_distance(&[NodeId(0)], &[]), Err(GraphError::EmptyTargetSet));
    }

    #[test]
    fn restrict_keeps_induced_arcs() {
        let g = path_graph(5, WeightMode::Unit);
        let h = g.restrict(|v| v.0 != 2).unwrap();
        assert_eq!(h.vertex_count(), 4);
        assert_eq!(h.arc_count(), 4);
        assert_eq!(h.hop_distance(NodeId(0), NodeId(4)).unwrap(), None);
    }
}
