//! Closed-form rate expressions used to cross-check simulated runs.

use alloc::format;
use alloc::vec::Vec;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Responses predicted for a run whose clusters keep integer round ratios.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProportionalPrediction {
    /// `gamma[u] = tau[u] / tau[last]`.
    pub gamma: Vec<u64>,
    pub responses: f64,
    pub rate: f64,
}

/// Round ratios of every cluster relative to the last one.
///
/// Fails if the last cluster completed no round or a ratio is not an integer.
pub fn round_ratios(tau: &[u64]) -> Result<Vec<u64>> {
    let last = *tau.last().ok_or_else(|| Error::InvalidArgument("no clusters".into()))?;
    if last == 0 {
        return Err(Error::AssumptionViolated("last cluster completed no round".into()));
    }
    tau.iter()
        .map(|&t| {
            if t % last == 0 {
                Ok(t / last)
            } else {
                Err(Error::AssumptionViolated(format!(
                    "round counts {t} and {last} are not in integer ratio"
                )))
            }
        })
        .collect()
}

/// Responses `2 mk (1 + eps) + (z - 1) tau_c sum_u gamma_u + z tau_c gamma_1`.
pub fn proportional_responses(m: usize, k: usize, eps: f64, z: usize, tau: &[u64]) -> Result<ProportionalPrediction> {
    if m == 0 || k == 0 || z == 0 {
        return Err(Error::InvalidArgument("m, k and z must be positive".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "overhead must be non-negative, got {eps}"
        )));
    }
    let gamma = round_ratios(tau)?;
    let tau_c = *tau.last().expect("checked non-empty") as f64;
    let sum: u64 = gamma.iter().sum();
    let mk = (m * k) as f64;
    let responses = 2.0 * mk * (1.0 + eps) + (z as f64 - 1.0) * tau_c * sum as f64 + z as f64 * tau_c * gamma[0] as f64;
    Ok(ProportionalPrediction {
        rate: mk / responses,
        gamma,
        responses,
    })
}

/// Predicted rate of a proportional run, `mk / responses`.
pub fn proportional_rate(m: usize, k: usize, eps: f64, z: usize, tau: &[u64]) -> Result<f64> {
    proportional_responses(m, k, eps, z, tau).map(|p| p.rate)
}

/// Integer form of [`proportional_responses`] given the number of product
/// symbols `mk (1 + eps)` actually consumed.
pub fn proportional_responses_exact(symbols: u64, z: usize, tau: &[u64]) -> Result<u64> {
    let gamma = round_ratios(tau)?;
    let tau_c = *tau.last().expect("checked non-empty");
    let z = z as u64;
    Ok(2 * symbols + (z - 1) * tau_c * gamma.iter().sum::<u64>() + z * tau_c * gamma[0])
}

/// Rate of the coefficient-aligned comparison scheme,
/// `ceil(mk / (m_i k_i)) * m_i k_i / ((m_i + z)(k_i + 1) - 1)`, not clamped.
pub fn improved_scheme_rate(m: usize, k: usize, m_i: usize, k_i: usize, z: usize) -> Result<Ratio<u64>> {
    if [m, k, m_i, k_i, z].contains(&0) {
        return Err(Error::InvalidArgument("all arguments must be positive".into()));
    }
    let (mk, block) = ((m * k) as u64, (m_i * k_i) as u64);
    let reps = mk.div_ceil(block);
    let den = ((m_i + z) * (k_i + 1) - 1) as u64;
    Ok(Ratio::new(reps * block, den))
}

/// `rho_improved / rho`.
pub fn rate_ratio(rho_improved: Ratio<u64>, rho: Ratio<u64>) -> Result<Ratio<u64>> {
    if *rho.numer() == 0 {
        return Err(Error::DivisionByZero);
    }
    Ok(rho_improved / rho)
}

pub fn to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
