//! Session routing: region-based relay tables plus four comparators.
//!
//! * RES walks per-node next-hop tables. Inside a cell a packet follows the
//!   in-cell shortest path; to leave, it heads for the tail of the crossing
//!   arc the dual route picked toward the destination's cell.
//! * DT sends straight to the sink at the lowest sufficient power level.
//! * MTE minimizes the sum of `d^alpha` over hops.
//! * MERR forwards greedily to the progressing neighbor whose hop length is
//!   closest to the characteristic distance of the radio model.
//! * OR minimizes total per-packet energy over every pair within maximum
//!   transmit range, which makes it a lower bound for the others.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::flood::FloodOutcome;
use crate::graph::{approx_eq, Digraph, Direction, GraphError, Metric, NodeId, NodePos};
use crate::region::{build_boundary_dual_graph, BoundaryCellMap, RegionError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    Res,
    Dt,
    Mte,
    Merr,
    Or,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Res,
        Protocol::Dt,
        Protocol::Mte,
        Protocol::Merr,
        Protocol::Or,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Protocol::Res => "res",
            Protocol::Dt => "dt",
            Protocol::Mte => "mte",
            Protocol::Merr => "merr",
            Protocol::Or => "or",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown protocol '{s}' (expected res, dt, mte, merr or or)"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("{protocol}: no route from {origin} to {sink}")]
    NoRoute {
        protocol: Protocol,
        origin: NodeId,
        sink: NodeId,
    },
    #[error("routing table cycles between {origin} and {sink} (aborted after {hops} hops)")]
    Cycle {
        origin: NodeId,
        sink: NodeId,
        hops: usize,
    },
    #[error("table entry at {node} points to {next}, which is not a 1-hop neighbor")]
    NotANeighbor { node: NodeId, next: NodeId },
    #[error("flood label of node {node} disagrees with its cell")]
    LabelMismatch { node: NodeId },
    #[error("source and sink are both {0}")]
    SameEndpoints(NodeId),
    #[error("node {0} has no position")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RouteKey {
    /// Entry toward a specific node in the same cell.
    Node(NodeId),
    /// Entry toward any node of the cell anchored at this seed.
    Region(NodeId),
}

/// Next-hop entries for every node, keyed by destination node or region.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoutingTable {
    cell_of: BTreeMap<NodeId, NodeId>,
    entries: BTreeMap<NodeId, BTreeMap<RouteKey, NodeId>>,
    stranded: Vec<NodeId>,
}

impl RoutingTable {
    pub fn new(cell_of: BTreeMap<NodeId, NodeId>) -> Self {
        Self {
            cell_of,
            ..Self::default()
        }
    }

    pub fn insert(&mut self, node: NodeId, key: RouteKey, next: NodeId) {
        self.entries.entry(node).or_default().insert(key, next);
    }

    /// Next hop from `node` toward `dest`: a node entry if one exists,
    /// otherwise the entry for `dest`'s region.
    pub fn next_hop(&self, node: NodeId, dest: NodeId) -> Option<NodeId> {
        let row = self.entries.get(&node)?;
        row.get(&RouteKey::Node(dest)).copied().or_else(|| {
            let cell = self.cell_of.get(&dest)?;
            row.get(&RouteKey::Region(*cell)).copied()
        })
    }

    pub fn cell_of(&self, v: NodeId) -> Option<NodeId> {
        self.cell_of.get(&v).copied()
    }

    pub fn entry_count(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    /// Nodes the flood never reached; they have no entries.
    pub fn stranded(&self) -> &[NodeId] {
        &self.stranded
    }

    /// Every next hop must be an out-neighbor of the owning node.
    pub fn validate(&self, g: &Digraph) -> Result<(), RoutingError> {
        for (&node, row) in &self.entries {
            for &next in row.values() {
                if g.weight(node, next).is_none() {
                    return Err(RoutingError::NotANeighbor { node, next });
                }
            }
        }
        Ok(())
    }
}

/// Builds RES next-hop tables from the cell map and the flood labels.
///
/// With hop-count cells the flood's smallest region label must equal the
/// node's canonical cell; any disagreement is reported.
pub fn build_res_tables(
    g: &Digraph,
    cells: &BoundaryCellMap,
    flood: &FloodOutcome,
) -> Result<RoutingTable, RoutingError> {
    let dual = build_boundary_dual_graph(g, cells)?;
    let n = g.vertex_count();
    let cell_of: BTreeMap<NodeId, NodeId> = g
        .ids()
        .iter()
        .map(|&v| (v, cells.canonical_owner(v).expect("cells cover the graph")))
        .collect();
    if cells.metric() == Metric::Hops {
        for &v in g.ids() {
            if let Some(region) = flood.canonical_region(v) {
                if region != cell_of[&v] {
                    return Err(RoutingError::LabelMismatch { node: v });
                }
            }
        }
    }
    let mut table = RoutingTable::new(cell_of);
    table.stranded = flood.unreachable.clone();

    for &seed in cells.seeds().as_slice() {
        let mask = cells.cell_mask(seed);
        let members: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        for &x in &members {
            let to_x = g.distances(&[x], Direction::Backward, Metric::Weighted, Some(&mask));
            for &u in &members {
                if u == x {
                    continue;
                }
                let Some(du) = to_x[u] else { continue };
                let step = g.out_links(u).iter().find(|l| {
                    mask[l.node] && to_x[l.node].is_some_and(|dn| approx_eq(l.weight + dn, du))
                });
                if let Some(l) = step {
                    table.insert(g.id(u), RouteKey::Node(g.id(x)), g.id(l.node));
                }
            }
        }
    }

    let dual_g = dual.as_digraph();
    for dest in 0..dual_g.vertex_count() {
        let dest_seed = dual_g.id(dest);
        let to_dest = dual_g.distances(&[dest], Direction::Backward, Metric::Weighted, None);
        for c in (0..dual_g.vertex_count()).filter(|&c| c != dest) {
            let Some(dc) = to_dest[c] else { continue };
            let Some(next_cell) = dual_g
                .out_links(c)
                .iter()
                .find(|l| to_dest[l.node].is_some_and(|dn| approx_eq(l.weight + dn, dc)))
            else {
                continue;
            };
            let from_seed = dual_g.id(c);
            let arc = dual
                .arc(from_seed, dual_g.id(next_cell.node))
                .expect("dual digraph mirrors dual arcs");
            let (exit, entry) = arc.crossing;
            let mask = cells.cell_mask(from_seed);
            for u in (0..n).filter(|&i| mask[i]) {
                let v = g.id(u);
                let next = if v == exit {
                    Some(entry)
                } else {
                    table.next_hop(v, exit)
                };
                if let Some(next) = next {
                    table.insert(v, RouteKey::Region(dest_seed), next);
                }
            }
        }
    }
    Ok(table)
}

/// Follows next-hop entries from `source` to `sink`.
pub fn walk_table(
    table: &RoutingTable,
    source: NodeId,
    sink: NodeId,
    max_hops: usize,
) -> Result<Vec<NodeId>, RoutingError> {
    let mut walk = vec![source];
    let mut cur = source;
    while cur != sink {
        if walk.len() > max_hops {
            return Err(RoutingError::Cycle {
                origin: source,
                sink,
                hops: walk.len() - 1,
            });
        }
        cur = table.next_hop(cur, sink).ok_or(RoutingError::NoRoute {
            protocol: Protocol::Res,
            origin: source,
            sink,
        })?;
        walk.push(cur);
    }
    Ok(walk)
}

/// A session's path with the power level and length of every hop.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRoute {
    pub protocol: Protocol,
    pub source: NodeId,
    pub sink: NodeId,
    pub vertices: Vec<NodeId>,
    pub levels: Vec<usize>,
    pub hop_lengths: Vec<f64>,
}

impl SessionRoute {
    pub fn hops(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Energy to carry one packet of `bits` end to end.
    pub fn packet_energy_j(&self, params: &EnergyParams, bits: u64) -> f64 {
        self.levels
            .iter()
            .map(|&k| {
                params.tx_energy(bits, k).expect("levels are valid")
                    + params.rx_energy(bits).expect("bits > 0")
            })
            .sum()
    }
}

/// Characteristic hop length: the distance up to `max_hop_m` minimizing
/// per-meter energy of one hop, found by a 0.1 m grid search.
pub fn characteristic_distance(params: &EnergyParams, bits: u64, max_hop_m: f64) -> Option<f64> {
    let steps = (max_hop_m / 0.1).floor() as usize;
    (1..=steps)
        .map(|k| k as f64 * 0.1)
        .chain(std::iter::once(max_hop_m))
        .filter_map(|d| params.hop_energy(bits, d).map(|e| (d, e / d)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(d, _)| d)
}

/// Per-scenario routing state for one protocol over one topology.
#[derive(Debug, Clone)]
pub struct Router {
    protocol: Protocol,
    comm: Digraph,
    positions: BTreeMap<NodeId, (f64, f64)>,
    params: EnergyParams,
    packet_bits: u64,
    search: Option<Digraph>,
    table: Option<RoutingTable>,
    d_char: Option<f64>,
}

impl Router {
    /// `nodes` must include every vertex of `comm`. RES requires `table`.
    pub fn new(
        protocol: Protocol,
        nodes: &[NodePos],
        comm: &Digraph,
        params: &EnergyParams,
        packet_bits: u64,
        table: Option<RoutingTable>,
    ) -> Result<Self, RoutingError> {
        let positions: BTreeMap<NodeId, (f64, f64)> = nodes
            .iter()
            .filter(|n| comm.contains(n.id))
            .map(|n| (n.id, (n.x, n.y)))
            .collect();
        if let Some(&v) = comm.ids().iter().find(|v| !positions.contains_key(v)) {
            return Err(RoutingError::UnknownNode(v));
        }
        let dist = |a: NodeId, b: NodeId| {
            let (ax, ay) = positions[&a];
            let (bx, by) = positions[&b];
            (ax - bx).hypot(ay - by)
        };
        let alpha = params.path_loss_exponent;
        let mut d_char = None;
        let search = match protocol {
            Protocol::Mte => Some(comm.map_weights(|u, v, _| dist(u, v).powf(alpha))?),
            Protocol::Or => {
                let mut arcs = Vec::new();
                for &u in positions.keys() {
                    for &v in positions.keys() {
                        if u == v {
                            continue;
                        }
                        if let Some(e) = params.hop_energy(packet_bits, dist(u, v)) {
                            arcs.push((u, v, e));
                        }
                    }
                }
                Some(Digraph::from_arcs(
                    positions.keys().copied(),
                    arcs,
                    crate::graph::WeightMode::Euclidean,
                )?)
            }
            Protocol::Merr => {
                let longest = comm.arcs().map(|(u, v, _)| dist(u, v)).fold(0.0, f64::max);
                d_char = characteristic_distance(params, packet_bits, longest.max(0.1));
                None
            }
            Protocol::Res | Protocol::Dt => None,
        };
        Ok(Self {
            protocol,
            comm: comm.clone(),
            positions,
            params: params.clone(),
            packet_bits,
            search,
            table,
            d_char,
        })
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn packet_bits(&self) -> u64 {
        self.packet_bits
    }

    pub fn characteristic_distance(&self) -> Option<f64> {
        self.d_char
    }

    pub fn table(&self) -> Option<&RoutingTable> {
        self.table.as_ref()
    }

    fn distance(&self, a: NodeId, b: NodeId) -> Result<f64, RoutingError> {
        let (ax, ay) = *self.positions.get(&a).ok_or(RoutingError::UnknownNode(a))?;
        let (bx, by) = *self.positions.get(&b).ok_or(RoutingError::UnknownNode(b))?;
        Ok((ax - bx).hypot(ay - by))
    }

    fn no_route(&self, source: NodeId, sink: NodeId) -> RoutingError {
        RoutingError::NoRoute {
            protocol: self.protocol,
            origin: source,
            sink,
        }
    }

    /// Route for one session from `source` to `sink`.
    pub fn route(&self, source: NodeId, sink: NodeId) -> Result<SessionRoute, RoutingError> {
        if source == sink {
            return Err(RoutingError::SameEndpoints(source));
        }
        self.distance(source, sink)?;
        let vertices = match self.protocol {
            Protocol::Dt => vec![source, sink],
            Protocol::Mte | Protocol::Or => {
                let g = self.search.as_ref().expect("built for MTE and OR");
                g.shortest_path(source, sink)?
                    .ok_or_else(|| self.no_route(source, sink))?
                    .vertices
            }
            Protocol::Merr => self.greedy(source, sink)?,
            Protocol::Res => {
                let table = self.table.as_ref().ok_or_else(|| self.no_route(source, sink))?;
                match walk_table(table, source, sink, self.comm.vertex_count()) {
                    Err(RoutingError::NoRoute { .. }) => return Err(self.no_route(source, sink)),
                    other => other?,
                }
            }
        };
        let mut levels = Vec::with_capacity(vertices.len() - 1);
        let mut hop_lengths = Vec::with_capacity(vertices.len() - 1);
        for pair in vertices.windows(2) {
            let d = self.distance(pair[0], pair[1])?;
            levels.push(
                self.params
                    .level_for_distance(d)
                    .ok_or_else(|| self.no_route(source, sink))?,
            );
            hop_lengths.push(d);
        }
        Ok(SessionRoute {
            protocol: self.protocol,
            source,
            sink,
            vertices,
            levels,
            hop_lengths,
        })
    }

    fn greedy(&self, source: NodeId, sink: NodeId) -> Result<Vec<NodeId>, RoutingError> {
        let d_char = self.d_char.ok_or_else(|| self.no_route(source, sink))?;
        let mut walk = vec![source];
        let mut cur = source;
        while cur != sink {
            let i = self.comm.index_of(cur)?;
            let links = self.comm.out_links(i);
            if links.iter().any(|l| self.comm.id(l.node) == sink) {
                walk.push(sink);
                break;
            }
            let here = self.distance(cur, sink)?;
            let mut best: Option<(f64, NodeId)> = None;
            for l in links {
                let v = self.comm.id(l.node);
                if self.distance(v, sink)? >= here {
                    continue;
                }
                let score = (self.distance(cur, v)? - d_char).abs();
                if best.is_none_or(|(s, _)| score < s) {
                    best = Some((score, v));
                }
            }
            cur = best.ok_or_else(|| self.no_route(source, sink))?.1;
            walk.push(cur);
        }
        Ok(walk)
    }
}

/// Convenience wrapper over [`Router::route`].
pub fn route(router: &Router, source: NodeId, sink: NodeId) -> Result<SessionRoute, RoutingError> {
    router.route(source, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flood::run_flood;
    use crate::graph::{build_unit_disk_digraph, WeightMode};
    use crate::region::{compute_boundary_cells, RegionSeedSet};

    fn chain(n: u32, spacing: f64, range: f64) -> Vec<NodePos> {
        (0..n)
            .map(|i| NodePos::new(i, i as f64 * spacing, 0.0, range))
            .collect()
    }

    fn res_router(nodes: &[NodePos], seeds: &[u32], metric: Metric) -> (Digraph, Router) {
        let g = build_unit_disk_digraph(nodes, true, WeightMode::Euclidean).unwrap();
        let seeds = RegionSeedSet::new(seeds.iter().map(|&s| NodeId(s))).unwrap();
        let cells = compute_boundary_cells(&g, &seeds, metric).unwrap();
        let flood = run_flood(&g, &seeds).unwrap();
        let table = build_res_tables(&g, &cells, &flood).unwrap();
        table.validate(&g).unwrap();
        let r = Router::new(Protocol::Res, nodes, &g, &EnergyParams::default(), 1024, Some(table)).unwrap();
        (g, r)
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn protocol_tags_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.tag().parse::<Protocol>().unwrap(), p);
        }
        assert!("leach".parse::<Protocol>().is_err());
    }

    #[test]
    fn six_node_path_res_route_crosses_once() {
        let nodes = chain(6, 10.0, 12.0);
        let (_, r) = res_router(&nodes, &[0, 5], Metric::Hops);
        let route = r.route(NodeId(1), NodeId(5)).unwrap();
        assert_eq!(route.vertices, ids(&[1, 2, 3, 4, 5]));
    }

    #[test]
    fn same_cell_res_route_is_in_cell_shortest_path() {
        let nodes = chain(6, 10.0, 12.0);
        let (_, r) = res_router(&nodes, &[0, 5], Metric::Hops);
        assert_eq!(r.route(NodeId(2), NodeId(0)).unwrap().vertices, ids(&[2, 1, 0]));
    }

    #[test]
    fn all_seed_res_route_is_a_shortest_path() {
        let nodes: Vec<_> = (0..9)
            .map(|i| NodePos::new(i, (i % 3) as f64 * 10.0, (i / 3) as f64 * 10.0, 15.0))
            .collect();
        let (g, r) = res_router(&nodes, &(0..9).collect::<Vec<_>>(), Metric::Hops);
        for s in 0..9 {
            for t in 0..9 {
                if s == t {
                    continue;
                }
                let route = r.route(NodeId(s), NodeId(t)).unwrap();
                let len: f64 = route.hop_lengths.iter().sum();
                let best = g.shortest_path(NodeId(s), NodeId(t)).unwrap().unwrap().length;
                assert!(approx_eq(len, best), "{s}->{t}: {len} vs {best}");
            }
        }
    }

    #[test]
    fn adjacent_endpoints_give_one_hop_everywhere() {
        let nodes = vec![
            NodePos::new(0, 0.0, 0.0, 60.0),
            NodePos::new(1, 30.0, 0.0, 60.0),
            NodePos::new(2, 30.0, 55.0, 60.0),
        ];
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        let seeds = RegionSeedSet::new([NodeId(0), NodeId(2)]).unwrap();
        let cells = compute_boundary_cells(&g, &seeds, Metric::Hops).unwrap();
        let table = build_res_tables(&g, &cells, &run_flood(&g, &seeds).unwrap()).unwrap();
        let params = EnergyParams::default();
        for p in Protocol::ALL {
            let t = (p == Protocol::Res).then(|| table.clone());
            let r = Router::new(p, &nodes, &g, &params, 1024, t).unwrap();
            assert_eq!(r.route(NodeId(0), NodeId(1)).unwrap().vertices, ids(&[0, 1]), "{p}");
        }
    }

    #[test]
    fn mte_prefers_three_short_hops_on_a_chain() {
        let nodes = chain(4, 40.0, 130.0);
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        let params = EnergyParams::default();
        let r = Router::new(Protocol::Mte, &nodes, &g, &params, 1024, None).unwrap();
        assert_eq!(r.route(NodeId(0), NodeId(3)).unwrap().vertices, ids(&[0, 1, 2, 3]));
        let dt = Router::new(Protocol::Dt, &nodes, &g, &params, 1024, None).unwrap();
        assert_eq!(dt.route(NodeId(0), NodeId(3)).unwrap().vertices, ids(&[0, 3]));
    }

    #[test]
    fn dt_fails_beyond_max_range() {
        let nodes = vec![NodePos::new(0, 0.0, 0.0, 60.0), NodePos::new(1, 300.0, 0.0, 60.0)];
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        let dt = Router::new(Protocol::Dt, &nodes, &g, &EnergyParams::default(), 1024, None).unwrap();
        assert!(matches!(
            dt.route(NodeId(0), NodeId(1)),
            Err(RoutingError::NoRoute { protocol: Protocol::Dt, .. })
        ));
    }

    #[test]
    fn merr_stalls_without_progress() {
        // Node 1 is a dead end: no neighbor is closer to the sink.
        let nodes = vec![
            NodePos::new(0, 0.0, 0.0, 50.0),
            NodePos::new(1, 40.0, 0.0, 50.0),
            NodePos::new(2, 200.0, 0.0, 50.0),
        ];
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        let r = Router::new(Protocol::Merr, &nodes, &g, &EnergyParams::default(), 1024, None).unwrap();
        assert!(matches!(r.route(NodeId(0), NodeId(2)), Err(RoutingError::NoRoute { .. })));
    }

    #[test]
    fn characteristic_distance_sits_at_a_level_edge() {
        let p = EnergyParams::default();
        let d = characteristic_distance(&p, 1024, 60.0).unwrap();
        let per_m = |x: f64| p.hop_energy(1024, x).unwrap() / x;
        for x in [10.0, 25.0, 40.0, 55.0, 59.9] {
            assert!(per_m(d) <= per_m(x));
        }
    }

    #[test]
    fn corrupted_table_is_detected_as_a_cycle() {
        let mut t = RoutingTable::new(BTreeMap::new());
        t.insert(NodeId(0), RouteKey::Node(NodeId(2)), NodeId(1));
        t.insert(NodeId(1), RouteKey::Node(NodeId(2)), NodeId(0));
        assert!(matches!(
            walk_table(&t, NodeId(0), NodeId(2), 3),
            Err(RoutingError::Cycle { .. })
        ));
    }

    #[test]
    fn one_hop_walk() {
        let mut t = RoutingTable::new(BTreeMap::new());
        t.insert(NodeId(0), RouteKey::Node(NodeId(1)), NodeId(1));
        assert_eq!(walk_table(&t, NodeId(0), NodeId(1), 2).unwrap(), ids(&[0, 1]));
    }

    #[test]
    fn validate_rejects_non_neighbors() {
        let nodes = chain(3, 10.0, 12.0);
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        let mut t = RoutingTable::new(BTreeMap::new());
        t.insert(NodeId(0), RouteKey::Node(NodeId(2)), NodeId(2));
        assert_eq!(
            t.validate(&g),
            Err(RoutingError::NotANeighbor {
                node: NodeId(0),
                next: NodeId(2)
            })
        );
    }

    #[test]
    fn same_endpoints_are_rejected() {
        let nodes = chain(2, 10.0, 12.0);
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        let r = Router::new(Protocol::Dt, &nodes, &g, &EnergyParams::default(), 1024, None).unwrap();
        assert_eq!(r.route(NodeId(0), NodeId(0)), Err(RoutingError::SameEndpoints(NodeId(0))));
    }
}
