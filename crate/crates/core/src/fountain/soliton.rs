use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// Robust soliton parameters `(c, delta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolitonParams {
    pub c: f64,
    pub delta: f64,
}

impl Default for SolitonParams {
    fn default() -> Self {
        Self { c: 0.03, delta: 0.5 }
    }
}

impl SolitonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "soliton parameters need c > 0 and 0 < delta < 1, got c={}, delta={}",
                self.c,
                self.delta
            )));
        }
        Ok(())
    }
}

/// Robust soliton degree distribution over `1..=k`.
#[derive(Clone, Debug)]
pub struct RobustSoliton {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl RobustSoliton {
    pub fn new(k: usize, params: SolitonParams) -> Result<Self> {
        params.validate()?;
        if k == 0 {
            return Err(Error::InvalidArgument("robust soliton over zero symbols".into()));
        }
        let kf = k as f64;
        let spike_mass = params.c * libm::log(kf / params.delta) * libm::sqrt(kf);
        let pivot = if spike_mass > 0.0 {
            libm::floor(kf / spike_mass) as usize
        } else {
            usize::MAX
        };
        let mut raw = Vec::with_capacity(k);
        for d in 1..=k {
            let ideal = if d == 1 {
                1.0 / kf
            } else {
                1.0 / (d as f64 * (d as f64 - 1.0))
            };
            let tau = if d < pivot {
                spike_mass / (d as f64 * kf)
            } else if d == pivot {
                // can be negative when spike_mass < delta; the spike is then dropped
                (spike_mass * libm::log(spike_mass / params.delta) / kf).max(0.0)
            } else {
                0.0
            };
            raw.push(ideal + tau);
        }
        let total: f64 = raw.iter().sum();
        let pmf: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let mut cdf = Vec::with_capacity(k);
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self { pmf, cdf })
    }

    /// Probability of degree `d` (one-based); zero outside `1..=k`.
    pub fn pmf(&self, d: usize) -> f64 {
        if d == 0 || d > self.pmf.len() {
            0.0
        } else {
            self.pmf[d - 1]
        }
    }

    pub fn support(&self) -> usize {
        self.pmf.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.pmf.len() - 1) + 1
    }
}
