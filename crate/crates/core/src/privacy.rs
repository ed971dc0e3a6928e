//! Executable privacy checks.
//!
//! [`recover_randomness`] shows that `z` colluding workers who also knew the
//! coded blocks could solve for the round's random matrices, which is the
//! step that makes their view independent of the data. [`uniformity_audit`]
//! enumerates every input and every random choice on a tiny field and
//! measures how far the colluders' view distribution moves with the input.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gf::{lagrange_weights, PrimeField};
use crate::lagrange::{RoundPolynomialPair, TaskShare};
use crate::matrix::MatrixFq;

/// Random matrices recovered from a colluding set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredRandomness {
    pub r: Vec<MatrixFq>,
    pub s: Vec<MatrixFq>,
}

/// Solves `sum_zeta L_zeta(x_i) X_zeta = Y_i` for the `z` unknown matrices,
/// using the first `z` rows and checking the rest for consistency.
fn solve_randomness(field: PrimeField, coeffs: &[Vec<u64>], rhs: &[MatrixFq], z: usize) -> Result<Vec<MatrixFq>> {
    let mut a: Vec<Vec<u64>> = coeffs[..z].iter().map(|r| r[..z].to_vec()).collect();
    let mut b: Vec<MatrixFq> = rhs[..z].to_vec();
    for col in 0..z {
        let pivot = (col..z)
            .find(|&r| a[r][col] != 0)
            .ok_or_else(|| Error::Protocol("colluder evaluation system is singular".into()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = field.inv(a[col][col])?;
        for v in a[col].iter_mut() {
            *v = field.mul(*v, inv);
        }
        b[col] = b[col].scale(inv);
        for r in 0..z {
            if r != col && a[r][col] != 0 {
                let factor = a[r][col];
                let pivot = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(&pivot) {
                    *x = field.sub(*x, field.mul(factor, *p));
                }
                let pivot_row = b[col].clone();
                b[r].add_scaled(field.neg(factor), &pivot_row)?;
            }
        }
    }
    for (row, y) in coeffs.iter().zip(rhs).skip(z) {
        let mut acc = MatrixFq::zeros(field, y.rows(), y.cols());
        for (zeta, x) in b.iter().enumerate() {
            acc.add_scaled(row[zeta], x)?;
        }
        if acc != *y {
            return Err(Error::Protocol("colluder evaluations are inconsistent".into()));
        }
    }
    Ok(b)
}

/// Recovers `R_1..R_z` and `S_1..S_z` of a cluster's polynomial pair from at
/// least `z` task shares, given the coded blocks the pair interpolates at its
/// data nodes.
pub fn recover_randomness(
    view: &[TaskShare],
    coded_a: &[MatrixFq],
    coded_b: &[MatrixFq],
    nodes: &[u64],
    z: usize,
) -> Result<RecoveredRandomness> {
    if z == 0 || view.len() < z {
        return Err(Error::InvalidArgument(format!(
            "need at least z = {z} shares, got {}",
            view.len()
        )));
    }
    if coded_a.len() != coded_b.len() || nodes.len() != z + coded_a.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} nodes for z = {z} and {} / {} coded blocks",
            nodes.len(),
            coded_a.len(),
            coded_b.len()
        )));
    }
    let field = view[0].f.field();
    let mut coeffs = Vec::with_capacity(view.len());
    let mut ya = Vec::with_capacity(view.len());
    let mut yb = Vec::with_capacity(view.len());
    for share in view {
        let w = lagrange_weights(&field, nodes, share.x)?;
        let mut fa = share.f.clone();
        let mut gb = share.g.clone();
        for (kappa, (ca, cb)) in coded_a.iter().zip(coded_b).enumerate() {
            let l = field.neg(w[z + kappa]);
            fa.add_scaled(l, ca)?;
            gb.add_scaled(l, cb)?;
        }
        coeffs.push(w[..z].to_vec());
        ya.push(fa);
        yb.push(gb);
    }
    Ok(RecoveredRandomness {
        r: solve_randomness(field, &coeffs, &ya, z)?,
        s: solve_randomness(field, &coeffs, &yb, z)?,
    })
}

/// [`recover_randomness`] with the coded blocks and nodes taken from `pair`.
pub fn recover_from_pair(view: &[TaskShare], pair: &RoundPolynomialPair) -> Result<RecoveredRandomness> {
    let ca: Vec<MatrixFq> = pair.coded_a().iter().map(|c| c.data.clone()).collect();
    let cb: Vec<MatrixFq> = pair.coded_b().iter().map(|c| c.data.clone()).collect();
    recover_randomness(view, &ca, &cb, pair.nodes(), pair.z())
}

/// Audit outcome for one colluding set.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetAudit {
    pub workers: Vec<usize>,
    /// Largest total-variation distance to the view distribution of the
    /// all-zero input, as `tv_num / tv_den`.
    pub tv_num: u64,
    pub tv_den: u64,
    /// The view is uniform over all outcomes for every input.
    pub uniform: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuditReport {
    pub q: u64,
    pub z: usize,
    pub n: usize,
    pub leak: bool,
    pub subsets: Vec<SubsetAudit>,
    pub tv_num: u64,
    pub tv_den: u64,
}

impl AuditReport {
    pub fn max_tv(&self) -> f64 {
        self.tv_num as f64 / self.tv_den as f64
    }

    pub fn is_private(&self) -> bool {
        self.tv_num == 0
    }
}

/// Enumeration budget of [`uniformity_audit`] in elementary evaluations.
pub const AUDIT_BUDGET: u64 = 200_000_000;

/// Exhaustive check that any `z` of `n` workers see a view whose distribution
/// does not depend on the scalar inputs `(A, B)`.
///
/// Uses one coded product (`d = 1`), nodes `0..=z` and worker points
/// `z + 1, ..., z + n`, so `n <= q - z - 1`. With `leak` the first random
/// value on the A side is forced to zero, which must expose `A`.
pub fn uniformity_audit(q: u64, z: usize, n: usize, leak: bool) -> Result<AuditReport> {
    let field = PrimeField::new(q)?;
    if z == 0 || n < z {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= z <= n, got z = {z}, n = {n}"
        )));
    }
    if (z + 1 + n) as u64 > q {
        return Err(Error::Infeasible(format!(
            "q = {q} has room for at most {} workers with z = {z}",
            q.saturating_sub(z as u64 + 1)
        )));
    }
    let free = if leak { 2 * z - 1 } else { 2 * z };
    let tuples = checked_pow(q, free as u32)?;
    let outcomes = checked_pow(q, 2 * z as u32)?;
    let subsets = binomial(n, z);
    let cost = tuples
        .checked_mul(q * q)
        .and_then(|c| c.checked_mul(subsets))
        .and_then(|c| c.checked_mul(z as u64))
        .ok_or_else(|| Error::TooLarge("enumeration size overflows".into()))?;
    if cost > AUDIT_BUDGET {
        return Err(Error::TooLarge(format!(
            "{cost} evaluations exceed the budget of {AUDIT_BUDGET}"
        )));
    }
    if outcomes > 1 << 24 {
        return Err(Error::TooLarge(format!("{outcomes} view outcomes")));
    }

    let nodes: Vec<u64> = (0..=z as u64).collect();
    let xs: Vec<u64> = (0..n as u64).map(|i| z as u64 + 1 + i).collect();
    let weights: Vec<Vec<u64>> = xs
        .iter()
        .map(|&x| lagrange_weights(&field, &nodes, x))
        .collect::<Result<_>>()?;

    let mut report = AuditReport {
        q,
        z,
        n,
        leak,
        subsets: Vec::new(),
        tv_num: 0,
        tv_den: tuples,
    };
    for subset in combinations(n, z) {
        let mut reference: Option<Vec<u32>> = None;
        let mut worst = 0u64;
        let mut uniform = true;
        for a in 0..q {
            for b in 0..q {
                let hist = view_histogram(&field, &weights, &subset, z, a, b, leak, outcomes as usize);
                uniform &= !leak && hist.iter().all(|&c| c as u64 * outcomes == tuples);
                match &reference {
                    None => reference = Some(hist),
                    Some(r) => {
                        let diff: u64 = r
                            .iter()
                            .zip(&hist)
                            .map(|(&x, &y)| (x as i64 - y as i64).unsigned_abs())
                            .sum();
                        worst = worst.max(diff / 2);
                    }
                }
            }
        }
        report.tv_num = report.tv_num.max(worst);
        report.subsets.push(SubsetAudit {
            workers: subset,
            tv_num: worst,
            tv_den: tuples,
            uniform,
        });
    }
    Ok(report)
}

/// Histogram over encoded views `(f(x_i), g(x_i))_{i in subset}` for inputs
/// `(a, b)`, enumerating every random tuple.
#[allow(clippy::too_many_arguments)]
fn view_histogram(
    field: &PrimeField,
    weights: &[Vec<u64>],
    subset: &[usize],
    z: usize,
    a: u64,
    b: u64,
    leak: bool,
    outcomes: usize,
) -> Vec<u32> {
    let q = field.modulus();
    let mut hist = vec![0u32; outcomes];
    let mut r = vec![0u64; z];
    let mut s = vec![0u64; z];
    let free = if leak { 2 * z - 1 } else { 2 * z };
    let mut digits = vec![0u64; free];
    loop {
        // digits fill R (minus R_1 when leaking) then S
        let offset = usize::from(leak);
        for (zeta, slot) in r.iter_mut().enumerate() {
            *slot = if leak && zeta == 0 { 0 } else { digits[zeta - offset] };
        }
        s.copy_from_slice(&digits[z - offset..]);
        let mut code = 0usize;
        for &w in subset {
            let lw = &weights[w];
            let f = eval_scalar(field, lw, &r, a);
            let g = eval_scalar(field, lw, &s, b);
            code = (code * q as usize + f as usize) * q as usize + g as usize;
        }
        hist[code] += 1;

        let mut pos = 0;
        loop {
            if pos == free {
                return hist;
            }
            digits[pos] += 1;
            if digits[pos] < q {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn eval_scalar(field: &PrimeField, weights: &[u64], random: &[u64], data: u64) -> u64 {
    let z = random.len();
    let mut acc = field.mul(weights[z], data);
    for (w, v) in weights.iter().zip(random) {
        acc = field.add(acc, field.mul(*w, *v));
    }
    acc
}

fn checked_pow(base: u64, exp: u32) -> Result<u64> {
    base.checked_pow(exp)
        .ok_or_else(|| Error::TooLarge(format!("{base}^{exp} overflows")))
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
        assert_eq!(combinations(4, 1), vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(binomial(7, 2), 21);
    }

    #[test]
    fn audit_z1_is_private() {
        let rep = uniformity_audit(5, 1, 3, false).unwrap();
        assert!(rep.is_private());
        assert_eq!(rep.subsets.len(), 3);
        assert!(rep.subsets.iter().all(|s| s.uniform));
    }

    #[test]
    fn audit_leak_detected() {
        let rep = uniformity_audit(5, 1, 3, true).unwrap();
        assert!(!rep.is_private());
        assert!(rep.max_tv() > 0.0);
    }

    #[test]
    fn audit_rejects_crowded_field() {
        assert!(matches!(uniformity_audit(5, 2, 3, false), Err(Error::Infeasible(_))));
        assert!(uniformity_audit(4, 1, 1, false).is_err());
    }
}
