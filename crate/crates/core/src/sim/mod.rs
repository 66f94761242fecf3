//! Simulation harness: scenarios, deployment, the event loop and outputs.

pub mod coverage;
pub mod deploy;
pub mod engine;
pub mod lemmas;
pub mod output;
pub mod report;
pub mod scenario;

pub use deploy::{deploy, Deployment, Region};
pub use engine::{run, run_traced, ModuleError, SimError};
pub use lemmas::{check_lemmas, LemmaSuiteReport};
pub use output::{emit_batch_outputs, emit_outputs};
pub use report::{coverage_series, run_batch, BatchReport, IntervalReport, MetricStat, RunReport, SessionRecord};
pub use scenario::{DutyPolicy, ScenarioConfig, ScenarioError, TieBreak};
