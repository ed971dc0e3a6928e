//! Single runs and their output files.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rpm3_core::master::{run_protocol, RunMetrics};
use rpm3_core::simnet::TraceEvent;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::scenario::Scenario;

/// Contents of `<name>_metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub scenario: String,
    pub seed: u64,
    pub q: u64,
    /// Decoded product compared equal to a direct multiplication.
    pub verified: bool,
    pub metrics: RunMetrics,
}

/// One line of the metrics CSV. Column order is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario: String,
    pub seed: u64,
    pub n: usize,
    pub z: usize,
    pub m: usize,
    pub k: usize,
    pub c: usize,
    #[serde(rename = "N")]
    pub responses: u64,
    pub epsilon: f64,
    pub rho: f64,
    pub rho_predicted: Option<f64>,
    #[serde(rename = "rho_I")]
    pub rho_improved: f64,
    pub sim_time: f64,
}

impl From<&MetricsFile> for CsvRow {
    fn from(f: &MetricsFile) -> Self {
        let m = &f.metrics;
        CsvRow {
            scenario: f.scenario.clone(),
            seed: f.seed,
            n: m.n,
            z: m.z,
            m: m.m,
            k: m.k,
            c: m.clusters,
            responses: m.responses,
            epsilon: m.epsilon,
            rho: m.rho,
            rho_predicted: m.rho_predicted,
            rho_improved: m.rho_improved,
            sim_time: m.sim_time,
        }
    }
}

pub struct RunOutput {
    pub file: MetricsFile,
    pub trace: Vec<TraceEvent>,
}

/// Runs a scenario once and checks the decoded product against `A * B`.
pub fn execute(sc: &Scenario, seed: u64, trace: bool) -> Result<RunOutput> {
    let mut cfg = sc.protocol_config()?;
    cfg.record_trace = trace;
    let (a, b) = sc.inputs(seed)?;
    let out = run_protocol(&cfg, &a, &b, seed)?;
    if out.c != a.matmul(&b)? {
        return Err(CliError::Decode(format!(
            "{} (seed {seed}): decoded product differs from A*B",
            sc.name
        )));
    }
    Ok(RunOutput {
        file: MetricsFile {
            scenario: sc.name.clone(),
            seed,
            q: sc.q,
            verified: true,
            metrics: out.metrics,
        },
        trace: out.trace,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, events: &[TraceEvent]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// `mk/N`, not reduced, as the rate is usually read.
pub fn rate_fraction(m: &RunMetrics) -> String {
    format!("{}/{}", m.m * m.k, m.responses)
}

pub fn summary(f: &MetricsFile) -> String {
    let m = &f.metrics;
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (seed {}, q = {})", f.scenario, f.seed, f.q);
    let _ = writeln!(s, "  decoded C matches A*B : {}", f.verified);
    let _ = writeln!(s, "  N (responses)         : {}", m.responses);
    let reduced = if m.rho_den != m.responses {
        format!(" = {}/{}", m.rho_num, m.rho_den)
    } else {
        String::new()
    };
    let _ = writeln!(
        s,
        "  rho                   : {}{} ~ {:.6}",
        rate_fraction(m),
        reduced,
        m.rho
    );
    let predicted = m.rho_predicted.map_or_else(
        || "n/a".to_string(),
        |r| format!("{r:.6} (N = {})", m.predicted_responses.unwrap_or(0)),
    );
    let _ = writeln!(s, "  rho predicted         : {predicted}");
    let _ = writeln!(
        s,
        "  rho_I                 : {}/{} ~ {:.6} (rho_I / rho = {:.6})",
        m.rho_improved_num, m.rho_improved_den, m.rho_improved, m.improved_over_rho
    );
    let _ = writeln!(s, "  epsilon               : {:.6} ({} symbols)", m.epsilon, m.symbols);
    let tau: Vec<String> = m.tau.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(s, "  tau per cluster       : [{}]", tau.join(", "));
    let _ = writeln!(s, "  clusters (max)        : {}", m.clusters);
    let _ = writeln!(s, "  interpolations        : {}", m.interpolations.len());
    let _ = writeln!(s, "  simulated time        : {}", m.sim_time);
    s
}

/// Paths written for a run with the given file stem.
pub fn output_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("{stem}_metrics.json")),
        dir.join(format!("{stem}_metrics.csv")),
        dir.join(format!("{stem}_trace.jsonl")),
    )
}
