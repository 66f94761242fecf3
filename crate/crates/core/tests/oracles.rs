//! Implementation results against brute-force references.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{adjacency, floyd_warshall, instance, multi_source_bfs, nearest_seeds, pos, suite};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regionsim_core::energy::EnergyParams;
use regionsim_core::flood::{init_flood, run_flood, Schedule};
use regionsim_core::graph::{build_unit_disk_digraph, Digraph, Metric, NodeId, NodePos, WeightMode};
use regionsim_core::region::{build_boundary_dual_graph, compute_boundary_cells, RegionSeedSet};
use regionsim_core::routing::{Protocol, Router};

fn random_directed(seed: u64, n: usize) -> (Vec<NodePos>, Digraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<NodePos> = (0..n)
        .map(|i| {
            NodePos::new(
                i as u32,
                rng.gen_range(0.0..100.0),
                rng.gen_range(0.0..100.0),
                rng.gen_range(20.0..45.0),
            )
        })
        .collect();
    let g = build_unit_disk_digraph(&nodes, false, WeightMode::Euclidean).unwrap();
    (nodes, g)
}

#[test]
fn shortest_paths_match_floyd_warshall() {
    for seed in 0..40 {
        let (_, g) = random_directed(seed, 18);
        let fw = floyd_warshall(&g);
        let ids = g.ids().to_vec();
        for (i, &u) in ids.iter().enumerate() {
            for (j, &v) in ids.iter().enumerate() {
                let got = g.shortest_path(u, v).unwrap();
                match got {
                    None => assert!(fw[i][j].is_infinite(), "{seed}: {u}->{v}"),
                    Some(p) => {
                        assert!((p.length - fw[i][j]).abs() <= 1e-9 * fw[i][j].max(1.0), "{seed}: {u}->{v}");
                        let walked: f64 = p.vertices.windows(2).map(|w| g.weight(w[0], w[1]).unwrap()).sum();
                        assert!((walked - p.length).abs() < 1e-9);
                        assert_eq!(p.hops, p.vertices.len() - 1);
                    }
                }
            }
        }
    }
}

#[test]
fn hop_distances_match_bfs() {
    for seed in 0..40 {
        let (_, g) = random_directed(100 + seed, 20);
        let adj = adjacency(&g);
        for (i, &u) in g.ids().iter().enumerate() {
            let d = multi_source_bfs(&adj, &[i]);
            for (j, &v) in g.ids().iter().enumerate() {
                assert_eq!(g.hop_distance(u, v).unwrap(), d[j]);
                let fewest = g.fewest_hops_path(u, v).unwrap().map(|p| p.hops as u32);
                assert_eq!(fewest, d[j]);
            }
        }
    }
}

#[test]
fn neighborhoods_match_arc_scan() {
    let (_, g) = random_directed(7, 25);
    let arcs: Vec<_> = g.arcs().collect();
    for &v in g.ids() {
        let nb = g.neighborhoods(v).unwrap();
        let inc: BTreeSet<NodeId> = arcs.iter().filter(|a| a.1 == v).map(|a| a.0).collect();
        let out: BTreeSet<NodeId> = arcs.iter().filter(|a| a.0 == v).map(|a| a.1).collect();
        assert_eq!(nb.incoming, inc);
        assert_eq!(nb.outgoing, out);
        assert_eq!(nb.union, inc.union(&out).copied().collect());
        assert_eq!((nb.in_degree, nb.out_degree), (inc.len(), out.len()));
    }
}

#[test]
fn set_distance_is_minimum_over_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..20 {
        let (_, g) = random_directed(300 + seed, 15);
        let fw = floyd_warshall(&g);
        let ids = g.ids().to_vec();
        let pick = |rng: &mut ChaCha8Rng| -> Vec<NodeId> {
            let k = rng.gen_range(1..4);
            (0..k).map(|_| ids[rng.gen_range(0..ids.len())]).collect()
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let mut best = f64::INFINITY;
        for &x in &a {
            for &y in &b {
                best = best.min(fw[pos(&ids, x)][pos(&ids, y)]);
            }
        }
        let got = g.set_distance(&a, &b).unwrap();
        match got {
            None => assert!(best.is_infinite()),
            Some(d) => assert!((d - best).abs() < 1e-9),
        }
    }
}

fn lattice(side: u32) -> Vec<NodePos> {
    (0..side * side)
        .map(|i| NodePos::new(i, (i % side) as f64 * 10.0, (i / side) as f64 * 10.0, 10.0))
        .collect()
}

#[test]
fn five_by_five_lattice_has_eighty_arcs() {
    let g = build_unit_disk_digraph(&lattice(5), true, WeightMode::Euclidean).unwrap();
    assert_eq!(g.vertex_count(), 25);
    assert_eq!(g.arc_count(), 80);
    assert!(g.is_strongly_connected());
}

#[test]
fn quadrant_dual_matches_brute_force() {
    let side = 6;
    let g = build_unit_disk_digraph(&lattice(side), true, WeightMode::Unit).unwrap();
    let at = |x: u32, y: u32| NodeId(y * side + x);
    let seeds = RegionSeedSet::new([at(1, 1), at(4, 1), at(1, 4), at(4, 4)]).unwrap();
    let cells = compute_boundary_cells(&g, &seeds, Metric::Hops).unwrap();
    for &v in g.ids() {
        let (x, y) = (v.0 % side, v.0 / side);
        let expect = at(if x < 3 { 1 } else { 4 }, if y < 3 { 1 } else { 4 });
        assert_eq!(cells.canonical_owner(v), Some(expect));
    }
    let dual = build_boundary_dual_graph(&g, &cells).unwrap();
    assert_eq!(dual.arc_count(), 8);

    // In-cell distances from Floyd–Warshall over each cell's induced arcs.
    let ids = g.ids().to_vec();
    let owner: BTreeMap<NodeId, NodeId> = ids.iter().map(|&v| (v, cells.canonical_owner(v).unwrap())).collect();
    let arcs: Vec<_> = g.arcs().collect();
    let in_cell = |s: NodeId| {
        let cell_arcs: Vec<_> = arcs
            .iter()
            .filter(|a| owner[&a.0] == s && owner[&a.1] == s)
            .copied()
            .collect();
        let members: Vec<NodeId> = ids.iter().copied().filter(|v| owner[v] == s).collect();
        let sub = Digraph::from_arcs(members.clone(), cell_arcs, WeightMode::Unit).unwrap();
        (members, floyd_warshall(&sub))
    };
    let tables: BTreeMap<NodeId, _> = seeds.as_slice().iter().map(|&s| (s, in_cell(s))).collect();
    let dist = |s: NodeId, a: NodeId, b: NodeId| {
        let (m, d) = &tables[&s];
        d[pos(m, a)][pos(m, b)]
    };
    let mut expected: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    for &(a, b, w) in &arcs {
        let (si, sj) = (owner[&a], owner[&b]);
        if si == sj {
            continue;
        }
        let c = dist(si, si, a) + w + dist(sj, b, sj);
        let e = expected.entry((si, sj)).or_insert(f64::INFINITY);
        *e = e.min(c);
    }
    assert_eq!(expected.len(), 8);
    for arc in dual.arcs() {
        assert_eq!(expected[&(arc.from, arc.to)], arc.weight, "{} -> {}", arc.from, arc.to);
        let (a, b) = arc.crossing;
        assert_eq!(
            dist(arc.from, arc.from, a) + g.weight(a, b).unwrap() + dist(arc.to, b, arc.to),
            arc.weight
        );
    }
}

#[test]
fn flood_labels_match_multi_source_bfs() {
    for inst in suite(60, WeightMode::Unit) {
        let seeds = RegionSeedSet::new(inst.seeds.clone()).unwrap();
        let oracle = nearest_seeds(&inst.graph, &inst.seeds);
        for schedule in [Schedule::Synchronous, Schedule::Asynchronous { seed: inst.seed }] {
            let out = init_flood(&inst.graph, &seeds).unwrap().run(schedule, None);
            for (i, &v) in inst.graph.ids().iter().enumerate() {
                let st = out.state(v).unwrap();
                let (d, set) = oracle[i].clone().unwrap();
                assert_eq!(st.distance, Some(d), "graph {} node {v}", inst.seed);
                assert_eq!(st.regions, set, "graph {} node {v}", inst.seed);
            }
        }
    }
}

#[test]
fn flood_on_disconnected_graph_leaves_unreached_nodes_unlabelled() {
    let mut nodes: Vec<NodePos> = (0..4).map(|i| NodePos::new(i, i as f64 * 10.0, 0.0, 12.0)).collect();
    nodes.push(NodePos::new(4, 500.0, 0.0, 12.0));
    let g = build_unit_disk_digraph(&nodes, true, WeightMode::Unit).unwrap();
    let out = run_flood(&g, &RegionSeedSet::new([NodeId(0)]).unwrap()).unwrap();
    assert_eq!(out.unreachable, vec![NodeId(4)]);
    assert_eq!(out.state(NodeId(3)).unwrap().distance, Some(3));
}

/// Cheapest simple path by exhaustive enumeration.
fn exhaustive_min(cost: &dyn Fn(usize, usize) -> Option<f64>, n: usize, s: usize, t: usize) -> f64 {
    fn go(
        cost: &dyn Fn(usize, usize) -> Option<f64>,
        n: usize,
        u: usize,
        t: usize,
        seen: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
    ) {
        if u == t {
            *best = best.min(acc);
            return;
        }
        for v in 0..n {
            if seen[v] {
                continue;
            }
            if let Some(c) = cost(u, v) {
                seen[v] = true;
                go(cost, n, v, t, seen, acc + c, best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; n];
    seen[s] = true;
    let mut best = f64::INFINITY;
    go(cost, n, s, t, &mut seen, 0.0, &mut best);
    best
}

#[test]
fn or_and_mte_match_exhaustive_search() {
    let params = EnergyParams::default();
    for seed in 0..15 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<NodePos> = (0..7)
            .map(|i| NodePos::new(i, rng.gen_range(0.0..160.0), rng.gen_range(0.0..160.0), 60.0))
            .collect();
        let g = build_unit_disk_digraph(&nodes, true, WeightMode::Euclidean).unwrap();
        let d = |a: usize, b: usize| nodes[a].distance_to(&nodes[b]);
        let or = Router::new(Protocol::Or, &nodes, &g, &params, 1024, None).unwrap();
        let mte = Router::new(Protocol::Mte, &nodes, &g, &params, 1024, None).unwrap();
        for s in 0..7 {
            for t in 0..7 {
                if s == t {
                    continue;
                }
                let or_cost = |a: usize, b: usize| params.hop_energy(1024, d(a, b));
                let best = exhaustive_min(&or_cost, 7, s, t);
                let got = or.route(NodeId(s as u32), NodeId(t as u32));
                match got {
                    Ok(r) => assert!((r.packet_energy_j(&params, 1024) - best).abs() < 1e-12),
                    Err(_) => assert!(best.is_infinite()),
                }
                let mte_cost = |a: usize, b: usize| (d(a, b) <= 60.0).then(|| d(a, b).powi(2));
                let best = exhaustive_min(&mte_cost, 7, s, t);
                match mte.route(NodeId(s as u32), NodeId(t as u32)) {
                    Ok(r) => {
                        let c: f64 = r.hop_lengths.iter().map(|h| h * h).sum();
                        assert!((c - best).abs() < 1e-9 * best.max(1.0));
                    }
                    Err(_) => assert!(best.is_infinite()),
                }
            }
        }
    }
}

#[test]
fn instance_generator_is_connected() {
    let inst = instance(9, 30, 3, WeightMode::Unit);
    assert!(inst.graph.is_strongly_connected());
    assert_eq!(inst.seeds.len(), 3);
}
