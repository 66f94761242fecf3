//! Randomized checks of the structural properties of cells, floods and
//! boundary routes, as run by `regionsim check-lemmas`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flood::run_flood;
use crate::graph::{build_unit_disk_digraph, random_connected_nodes, Metric, NodeId, WeightMode};
use crate::region::{
    boundary_route, build_boundary_dual_graph, compute_boundary_cells, verify_cell_containment,
    worst_case_construction, RegionError, RegionSeedSet,
};

/// Stretch of the worst-case instance: `(2m + (e-2)ε + 2(e-1)(m-ε)) / (2m + (e-2)ε)`.
pub fn worst_case_ratio(e: usize, m: f64, epsilon: f64) -> f64 {
    let e = e as f64;
    let direct = 2.0 * m + (e - 2.0) * epsilon;
    (direct + 2.0 * (e - 1.0) * (m - epsilon)) / direct
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseCheck {
    pub arcs: usize,
    pub m: f64,
    pub epsilon: f64,
    pub ratio: f64,
    pub expected: f64,
}

impl WorstCaseCheck {
    pub fn passed(&self) -> bool {
        ((self.ratio - self.expected) / self.expected).abs() <= 1e-9 && self.ratio <= self.arcs as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LemmaSuiteReport {
    pub graphs: usize,
    pub nodes: usize,
    /// Nodes whose flood label differs from the nearest-seed distances.
    pub flood_mismatches: Vec<(u64, NodeId)>,
    pub containment_failures: Vec<(u64, NodeId)>,
    pub tie_nodes: usize,
    pub routes: usize,
    pub bound_violations: Vec<(u64, NodeId, NodeId)>,
    pub max_ratio: f64,
    pub worst_case: Vec<WorstCaseCheck>,
}

impl LemmaSuiteReport {
    pub fn passed(&self) -> bool {
        self.flood_mismatches.is_empty()
            && self.containment_failures.is_empty()
            && self.bound_violations.is_empty()
            && self.worst_case.iter().all(WorstCaseCheck::passed)
    }
}

/// Checks flood labels, cell containment and the boundary-route stretch bound
/// between every pair of seeds on `graphs_per_size` random connected unit-disk graphs per size, plus the
/// worst-case family.
pub fn check_lemmas(sizes: &[usize], graphs_per_size: usize, seed: u64) -> Result<LemmaSuiteReport, RegionError> {
    let mut rep = LemmaSuiteReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &n in sizes {
        for _ in 0..graphs_per_size {
            let graph_seed: u64 = rng.gen();
            let mut grng = ChaCha8Rng::seed_from_u64(graph_seed);
            let side = 20.0 * (n as f64).sqrt();
            let Some(nodes) = random_connected_nodes(&mut grng, n, side, 35.0, 1000) else {
                continue;
            };
            let g = build_unit_disk_digraph(&nodes, true, WeightMode::Unit)?;
            let k = grng.gen_range(1..=5.min(n));
            let seeds = RegionSeedSet::new(sample(&mut grng, n, k).into_iter().map(|i| NodeId(i as u32)))?;
            rep.graphs += 1;
            rep.nodes += n;

            let cells = compute_boundary_cells(&g, &seeds, Metric::Hops)?;
            let flood = run_flood(&g, &seeds).map_err(|_| RegionError::EmptySeedSet)?;
            for &v in g.ids() {
                let st = flood.state(v).expect("flood covers every vertex");
                let owners: Vec<NodeId> = cells.owners(v).unwrap_or_default().to_vec();
                let label: Vec<NodeId> = st.regions.iter().copied().collect();
                let d = cells.distance_to_seed(v).map(|d| d as u32);
                if st.distance != d || label != owners {
                    rep.flood_mismatches.push((graph_seed, v));
                }
                let c = verify_cell_containment(&g, &cells, v)?;
                if !c.passed() {
                    rep.containment_failures.push((graph_seed, v));
                }
                rep.tie_nodes += usize::from(!c.tie_vertices.is_empty());
            }

            let dual = build_boundary_dual_graph(&g, &cells)?;
            let pairs = seeds
                .as_slice()
                .iter()
                .flat_map(|&s| seeds.as_slice().iter().map(move |&t| (s, t)))
                .filter(|(s, t)| s != t);
            for (s, t) in pairs {
                if let Some(r) = boundary_route(&g, &cells, &dual, s, t)? {
                    rep.routes += 1;
                    rep.max_ratio = rep.max_ratio.max(r.ratio);
                    if !r.within_bound {
                        rep.bound_violations.push((graph_seed, s, t));
                    }
                }
            }
        }
    }
    for e in [2, 4, 8] {
        for eps in [0.1, 0.01, 0.001] {
            let wc = worst_case_construction(e, 1.0, eps)?;
            let cells = compute_boundary_cells(&wc.graph, &wc.seeds, wc.metric)?;
            let dual = build_boundary_dual_graph(&wc.graph, &cells)?;
            let r = boundary_route(&wc.graph, &cells, &dual, wc.source, wc.target)?
                .ok_or(RegionError::NoDualRoute { from: wc.source, to: wc.target })?;
            rep.worst_case.push(WorstCaseCheck {
                arcs: e,
                m: 1.0,
                epsilon: eps,
                ratio: r.ratio,
                expected: worst_case_ratio(e, 1.0, eps),
            });
        }
    }
    Ok(rep)
}
