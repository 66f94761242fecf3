//! `regionsim`: run, batch and compare simulations, or check the structural
//! properties of cells and floods on random graphs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use regionsim_core::energy::energy_savings;
use regionsim_core::routing::Protocol;
use regionsim_core::sim::lemmas::check_lemmas;
use regionsim_core::sim::{emit_batch_outputs, emit_outputs, run_batch, run_traced, BatchReport, ScenarioConfig, SimError};

#[derive(Parser)]
#[command(name = "regionsim", version, about = "Region-partitioned sensor network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one seed and write its outputs.
    Run {
        /// Scenario TOML file; built-in defaults if omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// res, dt, mte, merr, or, or all.
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the initial flood's message trace.
        #[arg(long)]
        trace: bool,
    },
    /// Simulate consecutive seeds and aggregate them.
    Batch {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Batch several protocols on identical deployments.
    Compare {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "res,dt,mte,merr,or")]
        protocols: Vec<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check flood labels, cell containment and route stretch on random graphs.
    CheckLemmas {
        #[arg(long, value_delimiter = ',', default_value = "10,20,50")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Graphs generated per size.
        #[arg(long, default_value_t = 20)]
        graphs: usize,
    },
}

/// Error with the process exit code for its category.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::Scenario(_) => 3,
            SimError::Io { .. } => 4,
            SimError::Run { .. } => 5,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => ScenarioConfig::load(p).map_err(|e| Failure::from(SimError::from(e))),
        None => Ok(ScenarioConfig::default()),
    }
}

fn protocols(tags: &[String]) -> Result<Vec<Protocol>, Failure> {
    let mut out = Vec::new();
    for tag in tags {
        if tag.eq_ignore_ascii_case("all") {
            out.extend(Protocol::ALL);
        } else {
            out.push(tag.parse().map_err(Failure::config)?);
        }
    }
    out.dedup();
    Ok(out)
}

fn configure(
    scenario: Option<&Path>,
    seed: Option<u64>,
    runs: Option<usize>,
) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load(scenario)?;
    if let Some(s) = seed {
        cfg.traffic.seed = s;
    }
    if let Some(r) = runs {
        cfg.traffic.runs = r;
    }
    cfg.validate().map_err(|e| Failure::from(SimError::from(e)))?;
    Ok(cfg)
}

fn batch_line(b: &BatchReport) -> String {
    let m = |name: &str| b.metric(name).map_or((0.0, 0.0), |s| (s.mean, s.std));
    let (e, es) = m("total_energy_j");
    let (d, _) = m("delivery_ratio");
    let (c, _) = m("final_coverage_pct");
    format!(
        "{:<5} energy {e:.3} ± {es:.3} J  delivery {d:.4}  coverage {c:.2}%  ({} runs)",
        b.protocol.tag(),
        b.runs.len()
    )
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            protocol,
            out,
            trace,
        } => {
            let cfg = configure(scenario.as_deref(), seed, None)?;
            let list = match protocol {
                Some(p) => protocols(&[p])?,
                None => vec![cfg.routing.protocol],
            };
            let nested = list.len() > 1;
            for p in list {
                let mut c = cfg.clone();
                c.routing.protocol = p;
                let report = run_traced(&c, c.traffic.seed, trace)?;
                let dir = if nested { out.join(p.tag()) } else { out.clone() };
                emit_outputs(&report, &dir)?;
                println!(
                    "{:<5} seed {}  energy {:.3} J  delivery {:.4}  coverage {:.2}%  -> {}",
                    p.tag(),
                    report.seed,
                    report.total_energy_j,
                    report.delivery_ratio(),
                    report.final_coverage_pct(),
                    dir.display()
                );
            }
        }
        Command::Batch {
            scenario,
            runs,
            seed,
            protocol,
            out,
        } => {
            let mut cfg = configure(scenario.as_deref(), seed, runs)?;
            if let Some(p) = protocol {
                cfg.routing.protocol = p.parse().map_err(Failure::config)?;
            }
            let b = run_batch(&cfg)?;
            emit_batch_outputs(&b, &out)?;
            println!("{}", batch_line(&b));
        }
        Command::Compare {
            scenario,
            protocols: tags,
            runs,
            seed,
            out,
        } => {
            let cfg = configure(scenario.as_deref(), seed, runs)?;
            let mut batches = Vec::new();
            for p in protocols(&tags)? {
                let mut c = cfg.clone();
                c.routing.protocol = p;
                let b = run_batch(&c)?;
                emit_batch_outputs(&b, &out.join(p.tag()))?;
                println!("{}", batch_line(&b));
                batches.push(b);
            }
            let res = batches
                .iter()
                .find(|b| b.protocol == Protocol::Res)
                .and_then(|b| b.metric("total_energy_j"))
                .map(|m| m.mean);
            let mut csv = String::from(
                "protocol,total_energy_j_mean,total_energy_j_std,radio_energy_j_mean,delivery_ratio_mean,final_coverage_pct_mean,res_savings_pct\n",
            );
            for b in &batches {
                let m = |n: &str| b.metric(n).map_or(0.0, |s| s.mean);
                let e = b.metric("total_energy_j").map_or((0.0, 0.0), |s| (s.mean, s.std));
                let savings = res
                    .and_then(|r| energy_savings(r, e.0).ok())
                    .map(|s| s.to_string())
                    .unwrap_or_default();
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    b.protocol.tag(),
                    e.0,
                    e.1,
                    m("radio_energy_j"),
                    m("delivery_ratio"),
                    m("final_coverage_pct"),
                    savings
                ));
            }
            let path = out.join("compare.csv");
            std::fs::write(&path, csv).map_err(|source| Failure::from(SimError::Io { path, source }))?;
        }
        Command::CheckLemmas { sizes, seed, graphs } => {
            let rep = check_lemmas(&sizes, graphs, seed).map_err(|e| Failure {
                code: 6,
                message: e.to_string(),
            })?;
            println!("graphs checked       {} ({} nodes)", rep.graphs, rep.nodes);
            println!("flood label errors   {}", rep.flood_mismatches.len());
            println!(
                "containment failures {} ({} nodes with ties)",
                rep.containment_failures.len(),
                rep.tie_nodes
            );
            println!(
                "stretch violations   {} of {} routes (max ratio {:.4})",
                rep.bound_violations.len(),
                rep.routes,
                rep.max_ratio
            );
            for w in &rep.worst_case {
                println!(
                    "worst case e={} eps={}: ratio {:.9} expected {:.9} {}",
                    w.arcs,
                    w.epsilon,
                    w.ratio,
                    w.expected,
                    if w.passed() { "ok" } else { "MISMATCH" }
                );
            }
            if !rep.passed() {
                return Err(Failure {
                    code: 6,
                    message: "property checks failed".into(),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
