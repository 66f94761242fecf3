//! Brute-force reference algorithms shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regionsim_core::graph::{build_unit_disk_digraph, random_connected_nodes, Digraph, NodeId, NodePos, WeightMode};

/// All-pairs weighted distances by Floyd–Warshall, indexed by position in `g.ids()`.
pub fn floyd_warshall(g: &Digraph) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let ids = g.ids();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, v, w) in g.arcs() {
        let (i, j) = (pos(ids, u), pos(ids, v));
        d[i][j] = d[i][j].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn pos(ids: &[NodeId], v: NodeId) -> usize {
    ids.iter().position(|&x| x == v).expect("vertex")
}

/// Adjacency lists rebuilt from the arc iterator.
pub fn adjacency(g: &Digraph) -> Vec<Vec<usize>> {
    let ids = g.ids();
    let mut adj = vec![Vec::new(); ids.len()];
    for (u, v, _) in g.arcs() {
        adj[pos(ids, u)].push(pos(ids, v));
    }
    adj
}

/// Hop counts from a set of roots along arcs.
pub fn multi_source_bfs(adj: &[Vec<usize>], roots: &[usize]) -> Vec<Option<u32>> {
    let mut d = vec![None; adj.len()];
    let mut q = VecDeque::new();
    for &r in roots {
        d[r] = Some(0);
        q.push_back(r);
    }
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if d[v].is_none() {
                d[v] = Some(d[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    d
}

/// Per node: nearest-seed hop distance and the set of seeds attaining it,
/// from one BFS per seed.
pub fn nearest_seeds(g: &Digraph, seeds: &[NodeId]) -> Vec<Option<(u32, BTreeSet<NodeId>)>> {
    let adj = adjacency(g);
    let per_seed: Vec<Vec<Option<u32>>> = seeds
        .iter()
        .map(|&s| multi_source_bfs(&adj, &[pos(g.ids(), s)]))
        .collect();
    (0..g.vertex_count())
        .map(|v| {
            let best = per_seed.iter().filter_map(|d| d[v]).min()?;
            let set = seeds
                .iter()
                .zip(&per_seed)
                .filter(|(_, d)| d[v] == Some(best))
                .map(|(&s, _)| s)
                .collect();
            Some((best, set))
        })
        .collect()
}

/// Connected unit-disk instance with `k` random seeds.
pub struct Instance {
    pub seed: u64,
    pub nodes: Vec<NodePos>,
    pub graph: Digraph,
    pub seeds: Vec<NodeId>,
}

pub fn instance(seed: u64, n: usize, k: usize, mode: WeightMode) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 20.0 * (n as f64).sqrt();
    let nodes = random_connected_nodes(&mut rng, n, side, 35.0, 10_000).expect("connected layout");
    let graph = build_unit_disk_digraph(&nodes, true, mode).unwrap();
    let mut seeds: Vec<NodeId> = rand::seq::index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| NodeId(i as u32))
        .collect();
    seeds.sort();
    Instance {
        seed,
        nodes,
        graph,
        seeds,
    }
}

/// The standard suite: `count` graphs of 10–50 nodes with 1–5 seeds.
pub fn suite(count: usize, mode: WeightMode) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(10..=50);
            let k = rng.gen_range(1..=5);
            instance(1000 + i as u64, n, k, mode)
        })
        .collect()
}
