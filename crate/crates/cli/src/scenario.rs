//! Scenario files: protocol parameters, worker speed models and inputs.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rpm3_core::fountain::{CoefVector, SolitonParams};
use rpm3_core::master::{CoefOverride, ProtocolConfig};
use rpm3_core::simnet::WorkerModel;
use rpm3_core::{MatrixFq, PrimeField, DEFAULT_MODULUS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::matrix_io::read_matrix;

/// `count` workers sharing one speed model. At most one group may leave
/// `count` out; it receives the workers not claimed by the others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerGroup {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(flatten)]
    pub model: WorkerModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSpec {
    pub round: usize,
    pub cluster: usize,
    pub slot: usize,
    pub a: Vec<u8>,
    pub b: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImprovedSpec {
    pub m_i: usize,
    pub k_i: usize,
}

fn default_q() -> u64 {
    DEFAULT_MODULUS
}

fn default_delta() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_q")]
    pub q: u64,
    pub n: usize,
    pub z: usize,
    pub m: usize,
    pub k: usize,
    pub r: usize,
    pub s: usize,
    pub l: usize,
    pub workers: Vec<WorkerGroup>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub soliton: Option<SolitonParams>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub systematic_first_round: bool,
    #[serde(default)]
    pub systematic_cover: bool,
    #[serde(default)]
    pub max_d: Option<usize>,
    #[serde(default)]
    pub initial_clusters: Option<Vec<Vec<usize>>>,
    #[serde(default = "yes")]
    pub recluster: bool,
    #[serde(default)]
    pub coef_overrides: Vec<OverrideSpec>,
    #[serde(default)]
    pub improved: Option<ImprovedSpec>,
    #[serde(default)]
    pub matrix_a: Option<PathBuf>,
    #[serde(default)]
    pub matrix_b: Option<PathBuf>,
}

/// Reads and validates a scenario; relative matrix paths are resolved
/// against the file's directory.
pub fn load(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Scenario::from_value(value, path.parent())
}

fn bits(v: &[u8], what: &str) -> Result<CoefVector> {
    if v.iter().any(|&b| b > 1) {
        return Err(CliError::Config(format!("{what} coefficients must be 0 or 1")));
    }
    Ok(CoefVector::new(v.iter().map(|&b| b == 1).collect())?)
}

impl Scenario {
    pub fn from_value(value: serde_json::Value, base_dir: Option<&Path>) -> Result<Self> {
        let mut sc: Scenario = serde_json::from_value(value)?;
        if let Some(dir) = base_dir {
            for p in [&mut sc.matrix_a, &mut sc.matrix_b].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn field(&self) -> Result<PrimeField> {
        Ok(PrimeField::new(self.q)?)
    }

    pub fn worker_models(&self) -> Result<Vec<WorkerModel>> {
        let fixed: usize = self.workers.iter().filter_map(|g| g.count).sum();
        let open = self.workers.iter().filter(|g| g.count.is_none()).count();
        if open > 1 {
            return Err(CliError::Config("only one worker group may omit its count".into()));
        }
        if fixed > self.n || (open == 0 && fixed != self.n) {
            return Err(CliError::Config(format!(
                "worker groups describe {fixed} workers for n = {}",
                self.n
            )));
        }
        let mut out = Vec::with_capacity(self.n);
        for g in &self.workers {
            let count = g.count.unwrap_or(self.n - fixed);
            out.extend(std::iter::repeat_n(g.model.clone(), count));
        }
        Ok(out)
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let mut cfg = ProtocolConfig::new(self.field()?, self.z, self.m, self.k, self.worker_models()?);
        cfg.n = self.n;
        cfg.delta = self.delta;
        cfg.soliton = self.soliton.unwrap_or_default();
        cfg.systematic_first_round = self.systematic_first_round;
        cfg.systematic_cover = self.systematic_cover;
        cfg.max_d = self.max_d;
        cfg.initial_clusters = self.initial_clusters.clone();
        cfg.recluster = self.recluster;
        cfg.improved = self.improved.map(|i| (i.m_i, i.k_i));
        cfg.coef_overrides = self
            .coef_overrides
            .iter()
            .map(|o| {
                Ok(CoefOverride {
                    round: o.round,
                    cluster: o.cluster,
                    slot: o.slot,
                    a: bits(&o.a, "A-side")?,
                    b: bits(&o.b, "B-side")?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!(
                "scenario name {:?} is not a plain file stem",
                self.name
            )));
        }
        if [self.r, self.s, self.l].contains(&0) {
            return Err(CliError::Config("matrix dimensions must be positive".into()));
        }
        if self.m > self.r || self.k > self.l {
            return Err(CliError::Config(format!(
                "cannot split {} rows into m = {} blocks or {} columns into k = {}",
                self.r, self.m, self.l, self.k
            )));
        }
        self.protocol_config()?.validate()?;
        Ok(())
    }

    /// Input matrices: from the configured files, or drawn from `seed` on a
    /// stream the protocol itself does not use.
    pub fn inputs(&self, seed: u64) -> Result<(MatrixFq, MatrixFq)> {
        let field = self.field()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let a = match &self.matrix_a {
            Some(p) => read_matrix(p, field)?,
            None => MatrixFq::random(field, self.r, self.s, &mut rng),
        };
        let b = match &self.matrix_b {
            Some(p) => read_matrix(p, field)?,
            None => MatrixFq::random(field, self.s, self.l, &mut rng),
        };
        if a.shape() != (self.r, self.s) || b.shape() != (self.s, self.l) {
            return Err(CliError::Config(format!(
                "input shapes {:?} and {:?} do not match r = {}, s = {}, l = {}",
                a.shape(),
                b.shape(),
                self.r,
                self.s,
                self.l
            )));
        }
        Ok((a, b))
    }
}
