//! Run and batch reports.

use rayon::prelude::*;

use crate::energy::{EnergyTotals, LedgerRow};
use crate::flood::{FloodTotals, FloodTraceRecord};
use crate::graph::NodeId;
use crate::routing::Protocol;
use crate::sim::engine::{run, SimError};
use crate::sim::scenario::ScenarioConfig;

/// State of the network at one report instant.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub index: u32,
    pub time_s: f64,
    pub alive: usize,
    pub coverage_pct: f64,
    pub energy: EnergyTotals,
    pub total_energy_j: f64,
    pub generated: u64,
    pub delivered: u64,
    pub ledger: Vec<LedgerRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub index: usize,
    pub source: NodeId,
    pub sink: NodeId,
    /// Route chosen at setup; empty if none existed.
    pub initial_route: Vec<NodeId>,
    pub packet_energy_j: Option<f64>,
    /// Per-packet energy every protocol would spend on this session at setup.
    pub protocol_energy_j: Vec<(Protocol, Option<f64>)>,
    pub generated: u64,
    pub delivered: u64,
    pub reroutes: u32,
}

impl SessionRecord {
    pub fn energy_for(&self, p: Protocol) -> Option<f64> {
        self.protocol_energy_j
            .iter()
            .find(|(q, _)| *q == p)
            .and_then(|(_, e)| *e)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub node_count: usize,
    pub duration_s: f64,
    pub intervals: Vec<IntervalReport>,
    pub sessions: Vec<SessionRecord>,
    /// Flood traffic summed over the initial setup and every rebuild.
    pub flood: FloodTotals,
    pub floods: u32,
    pub flood_trace: Option<Vec<FloodTraceRecord>>,
    pub energy: EnergyTotals,
    pub total_energy_j: f64,
    pub final_ledger: Vec<LedgerRow>,
    pub max_conservation_error_j: f64,
    pub generated: u64,
    pub delivered: u64,
    pub first_death_s: Option<f64>,
    pub deaths: usize,
    pub characteristic_distance_m: Option<f64>,
    pub events: u64,
    pub event_digest: u64,
}

impl RunReport {
    /// Delivered over generated packets; 1 when nothing was generated.
    pub fn delivery_ratio(&self) -> f64 {
        if self.generated == 0 {
            1.0
        } else {
            self.delivered as f64 / self.generated as f64
        }
    }

    /// Transmit plus receive energy, control traffic included.
    pub fn radio_energy_j(&self) -> f64 {
        self.energy.tx_j + self.energy.rx_j
    }

    /// Time of the first sensor death, or the run length if none died.
    pub fn lifetime_s(&self) -> f64 {
        self.first_death_s.unwrap_or(self.duration_s)
    }

    pub fn mean_node_energy_j(&self) -> f64 {
        if self.node_count == 0 {
            0.0
        } else {
            self.total_energy_j / self.node_count as f64
        }
    }

    pub fn final_coverage_pct(&self) -> f64 {
        self.intervals.last().map_or(0.0, |i| i.coverage_pct)
    }

    /// Mean setup-time per-packet energy over sessions that had a route.
    pub fn mean_packet_energy_j(&self) -> f64 {
        let e: Vec<f64> = self.sessions.iter().filter_map(|s| s.packet_energy_j).collect();
        if e.is_empty() {
            0.0
        } else {
            e.iter().sum::<f64>() / e.len() as f64
        }
    }

    /// Scalar metrics in a fixed order, as aggregated by batches.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("total_energy_j", self.total_energy_j),
            ("tx_j", self.energy.tx_j),
            ("rx_j", self.energy.rx_j),
            ("sense_j", self.energy.sense_j),
            ("sleep_j", self.energy.sleep_j),
            ("radio_energy_j", self.radio_energy_j()),
            ("mean_node_energy_j", self.mean_node_energy_j()),
            ("mean_packet_energy_j", self.mean_packet_energy_j()),
            ("generated", self.generated as f64),
            ("delivered", self.delivered as f64),
            ("delivery_ratio", self.delivery_ratio()),
            ("flood_tx", self.flood.tx as f64),
            ("flood_broadcasts", self.flood.broadcasts as f64),
            ("floods", self.floods as f64),
            ("deaths", self.deaths as f64),
            ("lifetime_s", self.lifetime_s()),
            ("final_coverage_pct", self.final_coverage_pct()),
        ]
    }
}

/// `(time_s, coverage_pct)` at every report instant.
pub fn coverage_series(report: &RunReport) -> Vec<(f64, f64)> {
    report.intervals.iter().map(|i| (i.time_s, i.coverage_pct)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricStat {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub protocol: Protocol,
    pub base_seed: u64,
    pub runs: Vec<RunReport>,
    pub metrics: Vec<MetricStat>,
    /// `(time_s, mean, std)` of coverage per report instant.
    pub coverage: Vec<(f64, f64, f64)>,
}

impl BatchReport {
    pub fn from_runs(protocol: Protocol, base_seed: u64, runs: Vec<RunReport>) -> Self {
        let names: Vec<&str> = runs
            .first()
            .map(|r| r.metrics().into_iter().map(|(n, _)| n).collect())
            .unwrap_or_default();
        let metrics = names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let values: Vec<f64> = runs.iter().map(|r| r.metrics()[k].1).collect();
                let (mean, std) = mean_std(&values);
                MetricStat {
                    name: name.to_string(),
                    mean,
                    std,
                }
            })
            .collect();
        let slots = runs.iter().map(|r| r.intervals.len()).min().unwrap_or(0);
        let coverage = (0..slots)
            .map(|k| {
                let values: Vec<f64> = runs.iter().map(|r| r.intervals[k].coverage_pct).collect();
                let (mean, std) = mean_std(&values);
                (runs[0].intervals[k].time_s, mean, std)
            })
            .collect();
        Self {
            protocol,
            base_seed,
            runs,
            metrics,
            coverage,
        }
    }

    pub fn metric(&self, name: &str) -> Option<&MetricStat> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

/// Runs seeds `seed..seed + runs` of the configured protocol in parallel.
pub fn run_batch(cfg: &ScenarioConfig) -> Result<BatchReport, SimError> {
    let base = cfg.traffic.seed;
    let runs = (0..cfg.traffic.runs as u64)
        .into_par_iter()
        .map(|k| run(cfg, base.wrapping_add(k)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BatchReport::from_runs(cfg.routing.protocol, base, runs))
}
