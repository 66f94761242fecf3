//! CSV and text outputs for runs and batches.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::flood::write_trace_csv;
use crate::routing::Protocol;
use crate::sim::engine::SimError;
use crate::sim::report::{BatchReport, RunReport};

fn write(path: PathBuf, body: &str) -> Result<PathBuf, SimError> {
    fs::write(&path, body).map_err(|source| SimError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(r: &RunReport) -> String {
    let mut s = String::from("interval,time_s,metric,value\n");
    for i in &r.intervals {
        let ratio = if i.generated == 0 {
            1.0
        } else {
            i.delivered as f64 / i.generated as f64
        };
        let rows: [(&str, f64); 10] = [
            ("alive_nodes", i.alive as f64),
            ("coverage_pct", i.coverage_pct),
            ("tx_j", i.energy.tx_j),
            ("rx_j", i.energy.rx_j),
            ("sense_j", i.energy.sense_j),
            ("sleep_j", i.energy.sleep_j),
            ("total_energy_j", i.total_energy_j),
            ("generated", i.generated as f64),
            ("delivered", i.delivered as f64),
            ("delivery_ratio", ratio),
        ];
        for (name, v) in rows {
            writeln!(s, "{},{},{},{}", i.index, i.time_s, name, v).unwrap();
        }
    }
    s
}

pub fn sessions_csv(r: &RunReport) -> String {
    let mut s = String::from("session,source,sink,hops,route,packet_energy_j,generated,delivered,reroutes");
    for p in Protocol::ALL {
        write!(s, ",{}_packet_j", p.tag()).unwrap();
    }
    s.push('\n');
    for rec in &r.sessions {
        let route: Vec<String> = rec.initial_route.iter().map(|v| v.to_string()).collect();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            rec.index,
            rec.source,
            rec.sink,
            rec.initial_route.len().saturating_sub(1),
            route.join(" "),
            opt(rec.packet_energy_j),
            rec.generated,
            rec.delivered,
            rec.reroutes
        )
        .unwrap();
        for p in Protocol::ALL {
            write!(s, ",{}", opt(rec.energy_for(p))).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn ledger_csv(r: &RunReport) -> String {
    let mut s = String::from("interval,time_s,node_id,tx_J,rx_J,sense_J,sleep_J,remaining_J\n");
    for i in &r.intervals {
        for l in &i.ledger {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                i.index, i.time_s, l.node, l.tx_j, l.rx_j, l.sense_j, l.sleep_j, l.remaining_j
            )
            .unwrap();
        }
    }
    s
}

pub fn report_text(r: &RunReport) -> String {
    let mut s = String::new();
    writeln!(s, "protocol            {}", r.protocol).unwrap();
    writeln!(s, "seed                {}", r.seed).unwrap();
    writeln!(s, "sensors             {}", r.node_count).unwrap();
    writeln!(s, "duration_s          {}", r.duration_s).unwrap();
    writeln!(s, "total_energy_j      {:.6}", r.total_energy_j).unwrap();
    writeln!(
        s,
        "  tx/rx/sense/sleep {:.6} / {:.6} / {:.6} / {:.6}",
        r.energy.tx_j, r.energy.rx_j, r.energy.sense_j, r.energy.sleep_j
    )
    .unwrap();
    writeln!(s, "packets             {} generated, {} delivered", r.generated, r.delivered).unwrap();
    writeln!(s, "delivery_ratio      {:.6}", r.delivery_ratio()).unwrap();
    writeln!(
        s,
        "floods              {} ({} messages, {} broadcasts)",
        r.floods, r.flood.tx, r.flood.broadcasts
    )
    .unwrap();
    writeln!(s, "deaths              {}", r.deaths).unwrap();
    match r.first_death_s {
        Some(t) => writeln!(s, "first_death_s       {t:.3}").unwrap(),
        None => writeln!(s, "first_death_s       none").unwrap(),
    }
    if let Some(d) = r.characteristic_distance_m {
        writeln!(s, "d_char_m            {d:.1}").unwrap();
    }
    writeln!(s, "final_coverage_pct  {:.3}", r.final_coverage_pct()).unwrap();
    writeln!(s, "events              {}", r.events).unwrap();
    writeln!(s, "event_digest        {:016x}", r.event_digest).unwrap();
    s
}

/// Writes `summary.csv`, `sessions.csv`, `ledger.csv`, `report.txt` and, if
/// the run traced its flood, `flood_trace.csv`.
pub fn emit_outputs(r: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(out_dir).map_err(|source| SimError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut files = vec![
        write(out_dir.join("summary.csv"), &summary_csv(r))?,
        write(out_dir.join("sessions.csv"), &sessions_csv(r))?,
        write(out_dir.join("ledger.csv"), &ledger_csv(r))?,
        write(out_dir.join("report.txt"), &report_text(r))?,
    ];
    if let Some(trace) = &r.flood_trace {
        let mut buf = Vec::new();
        write_trace_csv(trace, &mut buf).expect("writing to memory");
        files.push(write(
            out_dir.join("flood_trace.csv"),
            std::str::from_utf8(&buf).expect("ascii"),
        )?);
    }
    Ok(files)
}

pub fn batch_summary_csv(b: &BatchReport) -> String {
    let mut s = String::from("metric,mean,std,runs\n");
    let n = b.runs.len();
    for m in &b.metrics {
        writeln!(s, "{},{},{},{}", m.name, m.mean, m.std, n).unwrap();
    }
    for (t, mean, std) in &b.coverage {
        writeln!(s, "coverage_pct@{t},{mean},{std},{n}").unwrap();
    }
    s
}

/// Per-run outputs under `seed_<n>/` plus `batch_summary.csv`.
pub fn emit_batch_outputs(b: &BatchReport, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    let mut files = Vec::new();
    for r in &b.runs {
        files.extend(emit_outputs(r, &out_dir.join(format!("seed_{}", r.seed)))?);
    }
    files.push(write(out_dir.join("batch_summary.csv"), &batch_summary_csv(b))?);
    Ok(files)
}
