//! Deterministic discrete-event simulation of region-partitioned wireless
//! sensor networks.
//!
//! Modules, bottom up:
//! * [`graph`]: weighted digraphs, unit-disk construction, shortest paths.
//! * [`region`]: boundary cells, the boundary dual graph and boundary routes.
//! * [`flood`]: the region flooding protocol.
//! * [`routing`]: RES relay tables and the DT, MTE, MERR and OR comparators.
//! * [`energy`]: radio power levels and the per-node energy ledger.
//! * [`sim`]: scenarios, the event loop, reports and output files.

pub mod energy;
pub mod flood;
pub mod graph;
pub mod region;
pub mod routing;
pub mod sim;

pub use energy::{EnergyError, EnergyLedger, EnergyParams, Mode};
pub use flood::{run_flood, FloodError, FloodOutcome, FloodState, Schedule};
pub use graph::{build_unit_disk_digraph, Digraph, GraphError, Metric, NodeId, NodePos, PathResult, WeightMode};
pub use region::{
    boundary_route, build_boundary_dual_graph, compute_boundary_cells, verify_cell_containment, BoundaryCellMap,
    BoundaryDualGraph, RegionError, RegionSeedSet,
};
pub use routing::{build_res_tables, walk_table, Protocol, Router, RoutingError, RoutingTable, SessionRoute};
