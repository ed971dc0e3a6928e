//! The `audit` command: exhaustive view-distribution check plus randomness
//! recovery on simulated runs.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpm3_core::master::{run_protocol, ProtocolConfig};
use rpm3_core::privacy::{combinations, recover_from_pair, uniformity_audit, AuditReport};
use rpm3_core::simnet::WorkerModel;
use rpm3_core::{MatrixFq, PrimeField, DEFAULT_MODULUS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn default_small_q() -> u64 {
    5
}

fn default_q() -> u64 {
    DEFAULT_MODULUS
}

fn two() -> usize {
    2
}

fn three() -> u64 {
    3
}

/// Protocol runs whose transcripts are checked for recoverable randomness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySpec {
    #[serde(default = "default_q")]
    pub q: u64,
    /// Workers; `2z + 3` when absent.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "two")]
    pub m: usize,
    #[serde(default = "two")]
    pub k: usize,
    #[serde(default = "three")]
    pub seeds: u64,
}

impl Default for RecoverySpec {
    fn default() -> Self {
        Self {
            q: default_q(),
            n: None,
            m: 2,
            k: 2,
            seeds: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub name: String,
    #[serde(default = "default_small_q")]
    pub q: u64,
    pub z: usize,
    pub n: usize,
    #[serde(default)]
    pub recovery: RecoverySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub runs: u64,
    pub subsets: u64,
    pub failures: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditOutput {
    pub name: String,
    pub uniformity: AuditReport,
    pub recovery: RecoveryReport,
}

impl AuditOutput {
    pub fn passed(&self) -> bool {
        self.uniformity.is_private() && self.recovery.failures == 0
    }
}

pub fn load(path: &Path) -> Result<AuditConfig> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Runs the protocol on a few seeds and tries every `z`-subset of every
/// cluster's tasks.
pub fn check_recovery(z: usize, opts: &RecoverySpec) -> Result<RecoveryReport> {
    let field = PrimeField::new(opts.q)?;
    let n = opts.n.unwrap_or(2 * z + 3);
    // staggered speeds so later rounds split into several clusters
    let workers: Vec<WorkerModel> = (0..n)
        .map(|i| WorkerModel::shifted_exp(0.5 + (i % 3) as f64, 2.0))
        .collect();
    let mut cfg = ProtocolConfig::new(field, z, opts.m, opts.k, workers);
    cfg.record_transcript = true;
    let mut report = RecoveryReport {
        runs: 0,
        subsets: 0,
        failures: 0,
    };
    for seed in 0..opts.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let a = MatrixFq::random(field, 2 * opts.m, 3, &mut rng);
        let b = MatrixFq::random(field, 3, 2 * opts.k, &mut rng);
        let out = run_protocol(&cfg, &a, &b, seed)?;
        report.runs += 1;
        for round in &out.transcript {
            for cl in &round.clusters {
                let Some(pair) = &cl.pair else { continue };
                for subset in combinations(cl.tasks.len(), z) {
                    let view: Vec<_> = subset.iter().map(|&i| cl.tasks[i].clone()).collect();
                    report.subsets += 1;
                    match recover_from_pair(&view, pair) {
                        Ok(rec) if rec.r == round.r && rec.s == round.s => {}
                        _ => report.failures += 1,
                    }
                }
            }
        }
    }
    Ok(report)
}

pub fn run_audit(cfg: &AuditConfig, leak: bool) -> Result<AuditOutput> {
    let uniformity = uniformity_audit(cfg.q, cfg.z, cfg.n, leak)?;
    let recovery = check_recovery(cfg.z, &cfg.recovery)?;
    Ok(AuditOutput {
        name: cfg.name.clone(),
        uniformity,
        recovery,
    })
}

pub fn summary(out: &AuditOutput) -> String {
    let u = &out.uniformity;
    let mut s = format!(
        "audit {} (q = {}, z = {}, n = {}{})\n",
        out.name,
        u.q,
        u.z,
        u.n,
        if u.leak { ", sabotaged" } else { "" }
    );
    s += &format!(
        "  colluding sets        : {}\n  max total variation   : {}/{}\n",
        u.subsets.len(),
        u.tv_num,
        u.tv_den
    );
    s += &format!(
        "  randomness recovered  : {} of {} sets over {} runs\n",
        out.recovery.subsets - out.recovery.failures,
        out.recovery.subsets,
        out.recovery.runs
    );
    s += &format!(
        "  result                : {}\n",
        if out.passed() { "private" } else { "LEAK" }
    );
    s
}
