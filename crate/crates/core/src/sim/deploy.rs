//! Node placement: sensors spread round-robin over a grid of square regions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeId, NodePos};
use crate::sim::scenario::ScenarioConfig;

/// Axis-aligned square region of the deployment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub id: u32,
    pub x0: f64,
    pub y0: f64,
    pub size: f64,
}

impl Region {
    pub fn center(&self) -> (f64, f64) {
        (self.x0 + self.size / 2.0, self.y0 + self.size / 2.0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x0..=self.x0 + self.size).contains(&x) && (self.y0..=self.y0 + self.size).contains(&y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    /// Sensors `0..count`, then the sink with id `count`.
    pub nodes: Vec<NodePos>,
    pub sink: NodeId,
    pub regions: Vec<Region>,
}

impl Deployment {
    pub fn sensors(&self) -> &[NodePos] {
        &self.nodes[..self.nodes.len() - 1]
    }

    pub fn node(&self, id: NodeId) -> &NodePos {
        &self.nodes[id.0 as usize]
    }

    pub fn boundary_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.is_boundary_node)
            .map(|n| n.id)
            .collect()
    }

    /// Alive sensor of `region` closest to its center, ties to the smaller id.
    pub fn pick_boundary(&self, region: u32, alive: &[bool]) -> Option<NodeId> {
        let (cx, cy) = self.regions[region as usize].center();
        self.sensors()
            .iter()
            .filter(|n| n.region_id == Some(region) && alive[n.id.0 as usize])
            .map(|n| ((n.x - cx).hypot(n.y - cy), n.id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }
}

pub fn grid_regions(cfg: &ScenarioConfig) -> Vec<Region> {
    let a = &cfg.area;
    let cols = a.columns();
    (0..a.region_count())
        .map(|i| Region {
            id: i as u32,
            x0: (i % cols) as f64 * a.region_size_m,
            y0: (i / cols) as f64 * a.region_size_m,
            size: a.region_size_m,
        })
        .collect()
}

/// Places sensor `i` uniformly inside region `i mod R` and marks one boundary
/// node per region.
pub fn deploy(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Deployment {
    let regions = grid_regions(cfg);
    let range = cfg.nodes.radio_range_m;
    let mut nodes: Vec<NodePos> = (0..cfg.nodes.count)
        .map(|i| {
            let r = &regions[i % regions.len()];
            let mut n = NodePos::new(
                i as u32,
                r.x0 + rng.gen::<f64>() * r.size,
                r.y0 + rng.gen::<f64>() * r.size,
                range,
            );
            n.region_id = Some(r.id);
            n
        })
        .collect();
    let (sx, sy) = (cfg.area.sink_x_m, cfg.area.sink_y_m);
    let mut sink = NodePos::new(cfg.nodes.count as u32, sx, sy, range);
    sink.region_id = regions.iter().find(|r| r.contains(sx, sy)).map(|r| r.id);
    nodes.push(sink);
    let mut d = Deployment {
        sink: NodeId(cfg.nodes.count as u32),
        nodes,
        regions,
    };
    let alive = vec![true; d.nodes.len()];
    for r in 0..d.regions.len() as u32 {
        if let Some(b) = d.pick_boundary(r, &alive) {
            d.nodes[b.0 as usize].is_boundary_node = true;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_robin_fill_and_one_boundary_per_region() {
        let cfg = ScenarioConfig::default();
        let d = deploy(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(d.nodes.len(), 141);
        assert_eq!(d.sink, NodeId(140));
        assert_eq!(d.node(d.sink).region_id, Some(7));
        for r in &d.regions {
            let members: Vec<_> = d.sensors().iter().filter(|n| n.region_id == Some(r.id)).collect();
            assert!(members.len() == 8 || members.len() == 9);
            assert!(members.iter().all(|n| r.contains(n.x, n.y)));
            assert_eq!(members.iter().filter(|n| n.is_boundary_node).count(), 1);
        }
    }

    #[test]
    fn same_seed_same_layout() {
        let cfg = ScenarioConfig::default();
        let a = deploy(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = deploy(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
