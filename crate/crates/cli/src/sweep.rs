//! Parameter sweeps over a base scenario.
//!
//! A sweep file names a base scenario (inline or by path) and assignments
//! keyed by JSON pointers into it. `grid` takes the cartesian product of its
//! value lists; `points` lists explicit assignments. When both are given,
//! every point is combined with every grid entry.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::report::{execute, CsvRow};
use crate::scenario::Scenario;

pub const DEFAULT_MAX_RUNS: usize = 10_000;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    #[serde(default)]
    pub base: Option<Value>,
    #[serde(default)]
    pub base_path: Option<PathBuf>,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub points: Vec<BTreeMap<String, Value>>,
    /// Cap on grid points times seeds.
    #[serde(default)]
    pub max_runs: Option<usize>,
}

/// One expanded grid point.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub label: String,
    pub scenario: std::result::Result<Scenario, String>,
}

pub fn load(path: &Path) -> Result<(SweepConfig, Value, Option<PathBuf>)> {
    let text = fs::read_to_string(path)?;
    let cfg: SweepConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf);
    let base = match (&cfg.base, &cfg.base_path) {
        (Some(v), None) => v.clone(),
        (None, Some(p)) => {
            let full = dir.as_ref().map_or_else(|| p.clone(), |d| d.join(p));
            serde_json::from_str(&fs::read_to_string(&full)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", full.display())))?
        }
        _ => {
            return Err(CliError::Config(
                "a sweep needs exactly one of base and base_path".into(),
            ))
        }
    };
    Ok((cfg, base, dir))
}

fn set_pointer(doc: &mut Value, pointer: &str, value: Value) -> Result<()> {
    if let Some(slot) = doc.pointer_mut(pointer) {
        *slot = value;
        return Ok(());
    }
    let (parent, key) = pointer
        .rsplit_once('/')
        .ok_or_else(|| CliError::Config(format!("{pointer:?} is not a JSON pointer")))?;
    match doc.pointer_mut(parent) {
        Some(Value::Object(map)) => {
            map.insert(key.replace("~1", "/").replace("~0", "~"), value);
            Ok(())
        }
        _ => Err(CliError::Config(format!(
            "sweep key {pointer:?} does not address the scenario"
        ))),
    }
}

fn describe(assign: &[(String, Value)]) -> String {
    assign
        .iter()
        .map(|(k, v)| format!("{}={}", k.trim_start_matches('/'), v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Expands the sweep into scenarios; points that fail validation carry the
/// reason instead.
pub fn expand(cfg: &SweepConfig, base: &Value, dir: Option<&Path>) -> Result<Vec<SweepPoint>> {
    let mut grid_rows: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for (key, values) in &cfg.grid {
        if values.is_empty() {
            return Err(CliError::Config(format!("grid entry {key:?} has no values")));
        }
        grid_rows = grid_rows
            .into_iter()
            .flat_map(|row| {
                values.iter().map(move |v| {
                    let mut r = row.clone();
                    r.push((key.clone(), v.clone()));
                    r
                })
            })
            .collect();
    }
    let explicit: Vec<Vec<(String, Value)>> = if cfg.points.is_empty() {
        vec![Vec::new()]
    } else {
        cfg.points
            .iter()
            .map(|p| p.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
            .collect()
    };

    let base_name = base
        .get("name")
        .and_then(Value::as_str)
        .unwrap_or(&cfg.name)
        .to_string();
    let mut out = Vec::new();
    for pt in &explicit {
        for row in &grid_rows {
            let assign: Vec<(String, Value)> = pt.iter().chain(row).cloned().collect();
            let mut doc = base.clone();
            for (k, v) in &assign {
                set_pointer(&mut doc, k, v.clone())?;
            }
            let label = if assign.is_empty() {
                base_name.clone()
            } else {
                format!("{base_name}[{}]", describe(&assign))
            };
            if let Value::Object(map) = &mut doc {
                map.insert("name".into(), Value::String(base_name.clone()));
            }
            let scenario = Scenario::from_value(doc, dir).map_err(|e| e.to_string());
            out.push(SweepPoint { label, scenario });
        }
    }
    Ok(out)
}

pub struct SweepResult {
    pub rows: Vec<CsvRow>,
    pub skipped: Vec<(String, String)>,
}

/// Runs every feasible point for every seed, in parallel, returning rows in
/// grid order then seed order.
pub fn run(points: &[SweepPoint], seeds: &[u64], max_runs: usize) -> Result<SweepResult> {
    let total = points.len() * seeds.len();
    if total > max_runs {
        return Err(CliError::Config(format!(
            "sweep has {total} runs, above the cap of {max_runs}"
        )));
    }
    let skipped: Vec<(String, String)> = points
        .iter()
        .filter_map(|p| p.scenario.as_ref().err().map(|e| (p.label.clone(), e.clone())))
        .collect();
    let jobs: Vec<(&String, &Scenario, u64)> = points
        .iter()
        .filter_map(|p| p.scenario.as_ref().ok().map(|s| (&p.label, s)))
        .flat_map(|(label, sc)| seeds.iter().map(move |&seed| (label, sc, seed)))
        .collect();
    let results: Vec<Result<CsvRow>> = jobs
        .par_iter()
        .map(|(label, sc, seed)| {
            let out = execute(sc, *seed, false)?;
            let mut row = CsvRow::from(&out.file);
            row.scenario = (*label).clone();
            Ok(row)
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows, skipped })
}
