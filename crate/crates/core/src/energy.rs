//! Radio and mode energy accounting.
//!
//! Transmit draw interpolates linearly in radiated milliwatts between a fixed
//! electronics floor at the lowest power level and the maximum communication
//! draw at the highest. Receive draw is constant. Sense and sleep accrue per
//! second of residence in the mode.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;

/// Number of discrete transmit power levels.
pub const POWER_LEVELS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("packet must carry at least one bit")]
    ZeroBits,
    #[error("power level {0} outside 0..{POWER_LEVELS}")]
    InvalidLevel(usize),
    #[error("duration {0} s is negative")]
    NegativeDuration(f64),
    #[error("node {0} has no ledger entry")]
    UnknownNode(NodeId),
    #[error("area {area} m^2 and range {range} m must both be positive")]
    NonPositiveArea { area: f64, range: f64 },
    #[error("sensing range {range} m is not smaller than the area side {side} m")]
    RangeTooLarge { range: f64, side: f64 },
    #[error("need at least 3 batch points, got {0}")]
    InsufficientPoints(usize),
    #[error("baseline energy is zero")]
    ZeroBaseline,
}

/// Radio and battery constants. Powers are in milliwatts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub p_comm_max_mw: f64,
    pub p_tx_floor_mw: f64,
    pub p_rx_mw: f64,
    pub p_sense_mw: f64,
    pub p_sleep_mw: f64,
    pub bandwidth_bps: f64,
    pub min_dbm: f64,
    pub max_dbm: f64,
    pub battery_j: f64,
    /// Reach of a transmission at the highest power level.
    pub max_tx_range_m: f64,
    pub path_loss_exponent: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            p_comm_max_mw: 160.0,
            p_tx_floor_mw: 60.0,
            p_rx_mw: 120.0,
            p_sense_mw: 12.0,
            p_sleep_mw: 0.5,
            bandwidth_bps: 50_000.0,
            min_dbm: -20.0,
            max_dbm: 12.0,
            battery_j: 100.0,
            max_tx_range_m: 250.0,
            path_loss_exponent: 2.0,
        }
    }
}

impl EnergyParams {
    /// Checks the invariants; returns the offending field name and reason.
    pub fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        let positive = [
            ("p_comm_max_mw", self.p_comm_max_mw),
            ("p_tx_floor_mw", self.p_tx_floor_mw),
            ("p_rx_mw", self.p_rx_mw),
            ("p_sense_mw", self.p_sense_mw),
            ("p_sleep_mw", self.p_sleep_mw),
            ("bandwidth_bps", self.bandwidth_bps),
            ("battery_j", self.battery_j),
            ("max_tx_range_m", self.max_tx_range_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err((name, "must be positive"));
            }
        }
        if self.p_tx_floor_mw >= self.p_comm_max_mw {
            return Err(("p_tx_floor_mw", "must be below p_comm_max_mw"));
        }
        if !(self.min_dbm < self.max_dbm) {
            return Err(("max_dbm", "must exceed min_dbm"));
        }
        if !(2.0..=4.0).contains(&self.path_loss_exponent) {
            return Err(("path_loss_exponent", "must lie in 2..=4"));
        }
        Ok(())
    }

    pub fn level_dbm(&self, level: usize) -> f64 {
        self.min_dbm + level as f64 * (self.max_dbm - self.min_dbm) / (POWER_LEVELS - 1) as f64
    }

    pub fn radiated_mw(&self, level: usize) -> f64 {
        10f64.powf(self.level_dbm(level) / 10.0)
    }

    /// Total transmit draw at `level`, in watts.
    pub fn draw_w(&self, level: usize) -> Result<f64, EnergyError> {
        if level >= POWER_LEVELS {
            return Err(EnergyError::InvalidLevel(level));
        }
        let lo = self.radiated_mw(0);
        let hi = self.radiated_mw(POWER_LEVELS - 1);
        let frac = (self.radiated_mw(level) - lo) / (hi - lo);
        Ok((self.p_tx_floor_mw + frac * (self.p_comm_max_mw - self.p_tx_floor_mw)) / 1000.0)
    }

    /// Reach at `level` under log-distance path loss anchored at the maximum.
    pub fn level_range_m(&self, level: usize) -> f64 {
        let db_below_max = self.max_dbm - self.level_dbm(level);
        self.max_tx_range_m * 10f64.powf(-db_below_max / (10.0 * self.path_loss_exponent))
    }

    /// Lowest level whose reach covers `distance`; `None` beyond max range.
    pub fn level_for_distance(&self, distance: f64) -> Option<usize> {
        (0..POWER_LEVELS).find(|&k| self.level_range_m(k) >= distance * (1.0 - 1e-12))
    }

    pub fn airtime_s(&self, bits: u64) -> f64 {
        bits as f64 / self.bandwidth_bps
    }

    pub fn tx_energy(&self, bits: u64, level: usize) -> Result<f64, EnergyError> {
        if bits == 0 {
            return Err(EnergyError::ZeroBits);
        }
        Ok(self.draw_w(level)? * self.airtime_s(bits))
    }

    pub fn rx_energy(&self, bits: u64) -> Result<f64, EnergyError> {
        if bits == 0 {
            return Err(EnergyError::ZeroBits);
        }
        Ok(self.p_rx_mw / 1000.0 * self.airtime_s(bits))
    }

    /// Transmit at the lowest sufficient level plus one reception.
    pub fn hop_energy(&self, bits: u64, distance: f64) -> Option<f64> {
        let level = self.level_for_distance(distance)?;
        Some(self.tx_energy(bits, level).ok()? + self.rx_energy(bits).ok()?)
    }

    pub fn mode_power_w(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Sense => self.p_sense_mw / 1000.0,
            Mode::Sleep => self.p_sleep_mw / 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Sense,
    Sleep,
}

/// Entry on a node's mode timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChange {
    Enter(Mode),
    Death,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeLedger {
    pub tx_j: f64,
    pub rx_j: f64,
    pub sense_j: f64,
    pub sleep_j: f64,
    pub budget_j: f64,
    pub remaining_j: f64,
    pub timeline: Vec<(f64, ModeChange)>,
}

impl NodeLedger {
    fn new(budget_j: f64) -> Self {
        Self {
            tx_j: 0.0,
            rx_j: 0.0,
            sense_j: 0.0,
            sleep_j: 0.0,
            budget_j,
            remaining_j: budget_j,
            timeline: Vec::new(),
        }
    }

    pub fn spent_j(&self) -> f64 {
        self.tx_j + self.rx_j + self.sense_j + self.sleep_j
    }

    pub fn is_depleted(&self) -> bool {
        self.remaining_j <= 0.0
    }

    /// `|budget - (remaining + spent)|`.
    pub fn conservation_error(&self) -> f64 {
        (self.budget_j - (self.remaining_j + self.spent_j())).abs()
    }
}

/// One row of a ledger snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub node: NodeId,
    pub tx_j: f64,
    pub rx_j: f64,
    pub sense_j: f64,
    pub sleep_j: f64,
    pub remaining_j: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyTotals {
    pub tx_j: f64,
    pub rx_j: f64,
    pub sense_j: f64,
    pub sleep_j: f64,
}

impl EnergyTotals {
    pub fn total_j(&self) -> f64 {
        self.tx_j + self.rx_j + self.sense_j + self.sleep_j
    }
}

/// Per-node energy accounts for one simulation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    ids: Vec<NodeId>,
    nodes: Vec<NodeLedger>,
    sense_w: f64,
    sleep_w: f64,
}

impl EnergyLedger {
    pub fn new<I: IntoIterator<Item = NodeId>>(ids: I, params: &EnergyParams) -> Self {
        let ids: Vec<NodeId> = ids.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let nodes = ids.iter().map(|_| NodeLedger::new(params.battery_j)).collect();
        Self {
            ids,
            nodes,
            sense_w: params.mode_power_w(Mode::Sense),
            sleep_w: params.mode_power_w(Mode::Sleep),
        }
    }

    fn slot(&mut self, node: NodeId) -> Result<&mut NodeLedger, EnergyError> {
        let i = self
            .ids
            .binary_search(&node)
            .map_err(|_| EnergyError::UnknownNode(node))?;
        Ok(&mut self.nodes[i])
    }

    pub fn node(&self, node: NodeId) -> Option<&NodeLedger> {
        self.ids.binary_search(&node).ok().map(|i| &self.nodes[i])
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &NodeLedger)> {
        self.ids.iter().copied().zip(&self.nodes)
    }

    /// Charges residence in `mode` for `duration` seconds.
    pub fn mode_accrual(&mut self, node: NodeId, mode: Mode, duration: f64) -> Result<(), EnergyError> {
        if duration < 0.0 {
            return Err(EnergyError::NegativeDuration(duration));
        }
        if duration == 0.0 {
            return Ok(());
        }
        let (sense_w, sleep_w) = (self.sense_w, self.sleep_w);
        let slot = self.slot(node)?;
        let joules = match mode {
            Mode::Sense => sense_w * duration,
            Mode::Sleep => sleep_w * duration,
        };
        match mode {
            Mode::Sense => slot.sense_j += joules,
            Mode::Sleep => slot.sleep_j += joules,
        }
        slot.remaining_j -= joules;
        Ok(())
    }

    pub fn charge_tx(&mut self, node: NodeId, joules: f64) -> Result<(), EnergyError> {
        let slot = self.slot(node)?;
        slot.tx_j += joules;
        slot.remaining_j -= joules;
        Ok(())
    }

    pub fn charge_rx(&mut self, node: NodeId, joules: f64) -> Result<(), EnergyError> {
        let slot = self.slot(node)?;
        slot.rx_j += joules;
        slot.remaining_j -= joules;
        Ok(())
    }

    pub fn log(&mut self, node: NodeId, time: f64, change: ModeChange) -> Result<(), EnergyError> {
        self.slot(node)?.timeline.push((time, change));
        Ok(())
    }

    pub fn totals(&self) -> EnergyTotals {
        self.nodes.iter().fold(EnergyTotals::default(), |acc, n| EnergyTotals {
            tx_j: acc.tx_j + n.tx_j,
            rx_j: acc.rx_j + n.rx_j,
            sense_j: acc.sense_j + n.sense_j,
            sleep_j: acc.sleep_j + n.sleep_j,
        })
    }

    /// Sum of every node's spent energy, in node-id order.
    pub fn total_spent_j(&self) -> f64 {
        self.nodes.iter().map(NodeLedger::spent_j).sum()
    }

    pub fn max_conservation_error(&self) -> f64 {
        self.nodes
            .iter()
            .map(NodeLedger::conservation_error)
            .fold(0.0, f64::max)
    }

    pub fn snapshot(&self) -> Vec<LedgerRow> {
        self.iter()
            .map(|(node, n)| LedgerRow {
                node,
                tx_j: n.tx_j,
                rx_j: n.rx_j,
                sense_j: n.sense_j,
                sleep_j: n.sleep_j,
                remaining_j: n.remaining_j,
            })
            .collect()
    }
}

/// Minimum sensor count `ceil(2πA / (3πR²))` for coverage and connectivity of
/// a square area `area_m2` with sensing range `range_m`.
pub fn min_sensor_count(area_m2: f64, range_m: f64) -> Result<u64, EnergyError> {
    if !(area_m2 > 0.0 && range_m > 0.0) {
        return Err(EnergyError::NonPositiveArea {
            area: area_m2,
            range: range_m,
        });
    }
    let side = area_m2.sqrt();
    if range_m >= side {
        return Err(EnergyError::RangeTooLarge { range: range_m, side });
    }
    // The π factors cancel; dividing them out avoids a spurious ulp above an integer.
    let raw = 2.0 * area_m2 / (3.0 * range_m * range_m);
    Ok((raw - 1e-9).ceil().max(1.0) as u64)
}

/// One batch measurement for the lifetime/per-node-energy diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub node_count: usize,
    pub lifetime_s: f64,
    /// Mean energy spent per node.
    pub mean_node_energy_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub intercept: f64,
    pub slope: f64,
    /// Largest least-squares residual relative to mean lifetime.
    pub max_relative_residual: f64,
    pub lifetime_linear: bool,
    /// Coefficient of variation of mean per-node energy across batches.
    pub energy_cv: f64,
    pub energy_constant: bool,
}

impl ScalingReport {
    pub fn passed(&self) -> bool {
        self.lifetime_linear && self.energy_constant
    }
}

/// Checks that lifetime is at most linear in node count and that mean
/// per-node energy stays roughly constant, both against `tolerance`.
pub fn scaling_diagnostics(points: &[ScalingPoint], tolerance: f64) -> Result<ScalingReport, EnergyError> {
    if points.len() < 3 {
        return Err(EnergyError::InsufficientPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean = |f: &dyn Fn(&ScalingPoint) -> f64| points.iter().map(f).sum::<f64>() / n;
    let mx = mean(&|p| p.node_count as f64);
    let my = mean(&|p| p.lifetime_s);
    let sxx: f64 = points.iter().map(|p| (p.node_count as f64 - mx).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.node_count as f64 - mx) * (p.lifetime_s - my))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let scale = my.abs().max(f64::MIN_POSITIVE);
    let max_relative_residual = points
        .iter()
        .map(|p| (p.lifetime_s - (intercept + slope * p.node_count as f64)).abs() / scale)
        .fold(0.0, f64::max);

    let me = mean(&|p| p.mean_node_energy_j);
    let var = points
        .iter()
        .map(|p| (p.mean_node_energy_j - me).powi(2))
        .sum::<f64>()
        / n;
    let energy_cv = if me.abs() > 0.0 { var.sqrt() / me.abs() } else { 0.0 };

    Ok(ScalingReport {
        intercept,
        slope,
        max_relative_residual,
        lifetime_linear: max_relative_residual <= tolerance,
        energy_cv,
        energy_constant: energy_cv <= tolerance,
    })
}

/// Percentage of baseline energy saved by the candidate.
pub fn energy_savings(candidate_j: f64, baseline_j: f64) -> Result<f64, EnergyError> {
    if baseline_j == 0.0 {
        return Err(EnergyError::ZeroBaseline);
    }
    Ok(100.0 * (1.0 - candidate_j / baseline_j))
}
