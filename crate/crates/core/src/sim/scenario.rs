//! Scenario files (TOML) and their validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::graph::{Metric, WeightMode};
use crate::routing::Protocol;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario field `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },
}

fn invalid(field: &str, constraint: &str) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        constraint: constraint.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    pub width_m: f64,
    pub height_m: f64,
    /// Side of the square regions the area is tiled with.
    pub region_size_m: f64,
    pub sink_x_m: f64,
    pub sink_y_m: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        Self {
            width_m: 160.0,
            height_m: 160.0,
            region_size_m: 40.0,
            sink_x_m: 140.0,
            sink_y_m: 60.0,
        }
    }
}

impl AreaConfig {
    pub fn columns(&self) -> usize {
        (self.width_m / self.region_size_m).round() as usize
    }

    pub fn rows(&self) -> usize {
        (self.height_m / self.region_size_m).round() as usize
    }

    pub fn region_count(&self) -> usize {
        self.columns() * self.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodesConfig {
    /// Sensors, not counting the sink.
    pub count: usize,
    pub radio_range_m: f64,
    pub sensing_range_m: f64,
    pub weight_mode: WeightMode,
}

impl Default for NodesConfig {
    fn default() -> Self {
        Self {
            count: 140,
            radio_range_m: 60.0,
            sensing_range_m: 20.0,
            weight_mode: WeightMode::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub sessions: usize,
    pub packet_bits: u64,
    pub packet_rate_hz: f64,
    /// Size of flood and route-discovery messages.
    pub control_bits: u64,
    /// Sensing time before each packet a source sends.
    pub sense_time_s: f64,
    pub sim_duration_s: f64,
    pub init_phase_s: f64,
    pub report_interval_s: f64,
    pub coverage_samples: usize,
    pub seed: u64,
    pub runs: usize,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            sessions: 15,
            packet_bits: 1024,
            packet_rate_hz: 1.0,
            control_bits: 64,
            sense_time_s: 0.1,
            sim_duration_s: 8400.0,
            init_phase_s: 30.0,
            report_interval_s: 1200.0,
            coverage_samples: 10_000,
            seed: 1,
            runs: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Smallest node id wins among equal-cost choices.
    #[default]
    Lexicographic,
    /// Arc weights get a small seeded jitter so ties disappear.
    Perturbed,
}

/// Mode the comparator protocols keep sensors in outside transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DutyPolicy {
    /// Every live sensor stays in sense mode for the whole run.
    #[default]
    AlwaysActive,
    /// Sensors sleep except while a source senses its next packet.
    SenseOnDemand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingConfig {
    pub protocol: Protocol,
    pub cell_metric: Metric,
    pub tie_break: TieBreak,
    pub perturbation: f64,
    pub comparator_duty: DutyPolicy,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Res,
            cell_metric: Metric::Hops,
            tie_break: TieBreak::Lexicographic,
            perturbation: 1e-6,
            comparator_duty: DutyPolicy::AlwaysActive,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area: AreaConfig,
    pub nodes: NodesConfig,
    pub energy: EnergyParams,
    pub traffic: TrafficConfig,
    pub routing: RoutingConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Whether sensors running `protocol` sleep between duties.
    pub fn duty_cycled(&self, protocol: Protocol) -> bool {
        protocol == Protocol::Res || self.routing.comparator_duty == DutyPolicy::SenseOnDemand
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let a = &self.area;
        for (field, v) in [
            ("area.width_m", a.width_m),
            ("area.height_m", a.height_m),
            ("area.region_size_m", a.region_size_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, "must be positive"));
            }
        }
        let divides = |side: f64| {
            let q = side / a.region_size_m;
            (q - q.round()).abs() < 1e-9 && q.round() >= 1.0
        };
        if !divides(a.width_m) || !divides(a.height_m) {
            return Err(invalid("area.region_size_m", "must divide the area width and height"));
        }
        if !(0.0..=a.width_m).contains(&a.sink_x_m) {
            return Err(invalid("area.sink_x_m", "must lie within 0..=width_m"));
        }
        if !(0.0..=a.height_m).contains(&a.sink_y_m) {
            return Err(invalid("area.sink_y_m", "must lie within 0..=height_m"));
        }

        let n = &self.nodes;
        if n.count < a.region_count() {
            return Err(invalid("nodes.count", "must be at least the number of regions"));
        }
        if n.count >= u32::MAX as usize {
            return Err(invalid("nodes.count", "must fit a 32-bit node id"));
        }
        if !(n.radio_range_m.is_finite() && n.radio_range_m > 0.0) {
            return Err(invalid("nodes.radio_range_m", "must be positive"));
        }
        if n.radio_range_m > self.energy.max_tx_range_m {
            return Err(invalid("nodes.radio_range_m", "must not exceed energy.max_tx_range_m"));
        }
        if !(n.sensing_range_m.is_finite() && n.sensing_range_m > 0.0) {
            return Err(invalid("nodes.sensing_range_m", "must be positive"));
        }

        if let Err((field, constraint)) = self.energy.validate() {
            return Err(invalid(&format!("energy.{field}"), constraint));
        }

        let t = &self.traffic;
        if t.packet_bits == 0 {
            return Err(invalid("traffic.packet_bits", "must be positive"));
        }
        if t.control_bits == 0 {
            return Err(invalid("traffic.control_bits", "must be positive"));
        }
        if !(t.packet_rate_hz.is_finite() && t.packet_rate_hz > 0.0) {
            return Err(invalid("traffic.packet_rate_hz", "must be positive"));
        }
        if !(t.sense_time_s.is_finite() && t.sense_time_s >= 0.0) {
            return Err(invalid("traffic.sense_time_s", "must be non-negative"));
        }
        if !(t.init_phase_s.is_finite() && t.init_phase_s >= 0.0) {
            return Err(invalid("traffic.init_phase_s", "must be non-negative"));
        }
        if !(t.sim_duration_s.is_finite() && t.sim_duration_s > t.init_phase_s) {
            return Err(invalid("traffic.sim_duration_s", "must exceed traffic.init_phase_s"));
        }
        if !(t.report_interval_s.is_finite() && t.report_interval_s > 0.0) {
            return Err(invalid("traffic.report_interval_s", "must be positive"));
        }
        if t.coverage_samples == 0 {
            return Err(invalid("traffic.coverage_samples", "must be positive"));
        }
        if t.runs == 0 {
            return Err(invalid("traffic.runs", "must be at least 1"));
        }
        if t.sessions > n.count {
            return Err(invalid("traffic.sessions", "must not exceed nodes.count"));
        }

        let r = &self.routing;
        if !(r.perturbation.is_finite() && r.perturbation > 0.0) {
            return Err(invalid("routing.perturbation", "must be positive"));
        }
        Ok(())
    }
}
