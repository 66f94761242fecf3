//! Monte Carlo sensing coverage, updated incrementally as sensors die.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::NodePos;

#[derive(Debug, Clone)]
pub struct CoverageTracker {
    /// Sample point indices each sensor covers.
    covers: Vec<Vec<u32>>,
    counts: Vec<u32>,
    covered: usize,
}

impl CoverageTracker {
    /// `sensors[i]` must have id `i`.
    pub fn new(
        sensors: &[NodePos],
        width: f64,
        height: f64,
        sensing_range: f64,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let points: Vec<(f64, f64)> = (0..samples)
            .map(|_| (rng.gen::<f64>() * width, rng.gen::<f64>() * height))
            .collect();
        let r2 = sensing_range * sensing_range;
        let covers: Vec<Vec<u32>> = sensors
            .iter()
            .map(|s| {
                points
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| (p.0 - s.x).powi(2) + (p.1 - s.y).powi(2) <= r2)
                    .map(|(i, _)| i as u32)
                    .collect()
            })
            .collect();
        let mut counts = vec![0u32; samples];
        for c in &covers {
            for &p in c {
                counts[p as usize] += 1;
            }
        }
        let covered = counts.iter().filter(|&&c| c > 0).count();
        Self {
            covers,
            counts,
            covered,
        }
    }

    pub fn remove(&mut self, sensor: usize) {
        for &p in &std::mem::take(&mut self.covers[sensor]) {
            let c = &mut self.counts[p as usize];
            *c -= 1;
            if *c == 0 {
                self.covered -= 1;
            }
        }
    }

    /// Percentage of sample points within sensing range of a live sensor.
    pub fn percent(&self) -> f64 {
        100.0 * self.covered as f64 / self.counts.len() as f64
    }
}
