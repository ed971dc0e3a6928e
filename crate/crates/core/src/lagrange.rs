//! Per-round, per-cluster Lagrange polynomial pairs `(f, g)`.
//!
//! `f` interpolates the z random matrices `R_1..R_z` at `alpha_1..alpha_z`
//! and the coded blocks `A~_1..A~_d` at `alpha_{z+1}..alpha_{z+d}`; `g` does
//! the same with `S` and `B~`. A worker at `beta_i` returns
//! `h(beta_i) = f(beta_i) g(beta_i)`, and `h(alpha_{z+kappa}) = A~_kappa B~_kappa`,
//! `h(alpha_zeta) = R_zeta S_zeta` for every cluster of the round.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fountain::{CodedBlock, ProductSymbol};
use crate::gf::{lagrange_weights, PrimeField};
use crate::matrix::MatrixFq;

/// Worker index, zero-based.
pub type WorkerId = usize;

/// The alpha nodes (randomness then data) and the per-worker beta points.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalPointSet {
    field: PrimeField,
    alphas: Vec<u64>,
    betas: Vec<u64>,
}

impl EvalPointSet {
    pub fn new(field: PrimeField, alphas: Vec<u64>, betas: Vec<u64>) -> Result<Self> {
        let alphas: Vec<u64> = alphas.into_iter().map(|x| field.reduce(x)).collect();
        let betas: Vec<u64> = betas.into_iter().map(|x| field.reduce(x)).collect();
        let mut all: Vec<u64> = alphas.iter().chain(&betas).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidEvaluationSet(
                "alphas and betas must be pairwise distinct and disjoint".into(),
            ));
        }
        Ok(Self { field, alphas, betas })
    }

    /// `alpha_delta = delta - 1` for `delta = 1..=alpha_count`, then
    /// `beta_i = alpha_count - 1 + i` for `i = 1..=n`.
    pub fn consecutive(field: PrimeField, alpha_count: usize, n: usize) -> Result<Self> {
        if (alpha_count + n) as u128 > field.modulus() as u128 {
            return Err(Error::Infeasible(format!(
                "GF({}) has fewer than {} distinct points",
                field.modulus(),
                alpha_count + n
            )));
        }
        let alphas = (0..alpha_count as u64).collect();
        let betas = (alpha_count as u64..(alpha_count + n) as u64).collect();
        Self::new(field, alphas, betas)
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn alphas(&self) -> &[u64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[u64] {
        &self.betas
    }

    pub fn beta(&self, worker: WorkerId) -> Result<u64> {
        self.betas
            .get(worker)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no evaluation point for worker {worker}")))
    }
}

/// Evaluates `sum_i basis_i(x) values_i` entry-wise.
fn combine(field: &PrimeField, nodes: &[u64], values: &[&MatrixFq], x: u64) -> Result<MatrixFq> {
    let weights = lagrange_weights(field, nodes, x)?;
    let (r, c) = values[0].shape();
    let mut out = MatrixFq::zeros(*field, r, c);
    for (w, v) in weights.iter().zip(values) {
        out.add_scaled(*w, v)?;
    }
    Ok(out)
}

/// The pair `(f_t^(u), g_t^(u))` of one cluster in one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundPolynomialPair {
    pub round: usize,
    pub cluster: usize,
    field: PrimeField,
    z: usize,
    nodes: Vec<u64>,
    randomness_a: Vec<MatrixFq>,
    randomness_b: Vec<MatrixFq>,
    coded_a: Vec<CodedBlock>,
    coded_b: Vec<CodedBlock>,
}

/// Builds the pair from `d` coded blocks per side and the round's `z` random
/// matrices per side. `coded_a[kappa]` is paired with `coded_b[kappa]`.
pub fn build_pair(
    round: usize,
    cluster: usize,
    coded_a: Vec<CodedBlock>,
    coded_b: Vec<CodedBlock>,
    r: Vec<MatrixFq>,
    s: Vec<MatrixFq>,
    points: &EvalPointSet,
) -> Result<RoundPolynomialPair> {
    let d = coded_a.len();
    let z = r.len();
    if d == 0 || coded_b.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "need the same nonzero number of coded blocks per side, got {d} and {}",
            coded_b.len()
        )));
    }
    if z == 0 || s.len() != z {
        return Err(Error::ShapeMismatch(format!(
            "need z >= 1 random matrices per side, got {z} and {}",
            s.len()
        )));
    }
    if d + z > points.alphas().len() {
        return Err(Error::Infeasible(format!(
            "d + z = {} exceeds the {} available alpha points",
            d + z,
            points.alphas().len()
        )));
    }
    let a_shape = r[0].shape();
    let b_shape = s[0].shape();
    if r.iter().any(|m| m.shape() != a_shape) || coded_a.iter().any(|c| c.data.shape() != a_shape) {
        return Err(Error::ShapeMismatch(
            "A-side blocks and randomness differ in shape".into(),
        ));
    }
    if s.iter().any(|m| m.shape() != b_shape) || coded_b.iter().any(|c| c.data.shape() != b_shape) {
        return Err(Error::ShapeMismatch(
            "B-side blocks and randomness differ in shape".into(),
        ));
    }
    if a_shape.1 != b_shape.0 {
        return Err(Error::ShapeMismatch(format!(
            "A-side {a_shape:?} cannot multiply B-side {b_shape:?}"
        )));
    }
    Ok(RoundPolynomialPair {
        round,
        cluster,
        field: points.field(),
        z,
        nodes: points.alphas()[..d + z].to_vec(),
        randomness_a: r,
        randomness_b: s,
        coded_a,
        coded_b,
    })
}

impl RoundPolynomialPair {
    pub fn d(&self) -> usize {
        self.coded_a.len()
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// `alpha_1..alpha_{d+z}`.
    pub fn nodes(&self) -> &[u64] {
        &self.nodes
    }

    pub fn randomness_a(&self) -> &[MatrixFq] {
        &self.randomness_a
    }

    pub fn randomness_b(&self) -> &[MatrixFq] {
        &self.randomness_b
    }

    pub fn coded_a(&self) -> &[CodedBlock] {
        &self.coded_a
    }

    pub fn coded_b(&self) -> &[CodedBlock] {
        &self.coded_b
    }

    fn f_values(&self) -> Vec<&MatrixFq> {
        self.randomness_a
            .iter()
            .chain(self.coded_a.iter().map(|c| &c.data))
            .collect()
    }

    fn g_values(&self) -> Vec<&MatrixFq> {
        self.randomness_b
            .iter()
            .chain(self.coded_b.iter().map(|c| &c.data))
            .collect()
    }

    pub fn eval_f(&self, x: u64) -> Result<MatrixFq> {
        combine(&self.field, &self.nodes, &self.f_values(), x)
    }

    pub fn eval_g(&self, x: u64) -> Result<MatrixFq> {
        combine(&self.field, &self.nodes, &self.g_values(), x)
    }

    /// The task `(f(beta_i), g(beta_i))` for worker `i`.
    pub fn eval_task(&self, worker: WorkerId, points: &EvalPointSet) -> Result<TaskShare> {
        let x = points.beta(worker)?;
        if points.alphas().contains(&x) {
            return Err(Error::InvalidEvaluationSet(format!(
                "beta of worker {worker} collides with an alpha"
            )));
        }
        Ok(TaskShare {
            worker,
            round: self.round,
            cluster: self.cluster,
            x,
            f: self.eval_f(x)?,
            g: self.eval_g(x)?,
        })
    }

    /// Ground-truth coded products `A~_kappa B~_kappa`.
    pub fn coded_products(&self) -> Result<Vec<MatrixFq>> {
        self.coded_a
            .iter()
            .zip(&self.coded_b)
            .map(|(a, b)| a.data.matmul(&b.data))
            .collect()
    }
}

/// What a worker receives in one round.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskShare {
    pub worker: WorkerId,
    pub round: usize,
    pub cluster: usize,
    pub x: u64,
    pub f: MatrixFq,
    pub g: MatrixFq,
}

impl TaskShare {
    /// The worker's computation `H = F G`.
    pub fn compute(&self) -> Result<ResultShare> {
        Ok(ResultShare {
            worker: self.worker,
            round: self.round,
            cluster: self.cluster,
            x: self.x,
            h: self.f.matmul(&self.g)?,
        })
    }
}

/// What a worker sends back: `h(beta_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResultShare {
    pub worker: WorkerId,
    pub round: usize,
    pub cluster: usize,
    pub x: u64,
    pub h: MatrixFq,
}

/// Matrix polynomial in point-value form, of degree < number of points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpolatedH {
    field: PrimeField,
    xs: Vec<u64>,
    ys: Vec<MatrixFq>,
}

impl InterpolatedH {
    pub fn degree_bound(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn points(&self) -> &[u64] {
        &self.xs
    }

    pub fn eval(&self, x: u64) -> Result<MatrixFq> {
        let vals: Vec<&MatrixFq> = self.ys.iter().collect();
        combine(&self.field, &self.xs, &vals, x)
    }

    /// Entry-wise monomial coefficients, lowest degree first.
    pub fn coefficients(&self) -> Result<Vec<MatrixFq>> {
        let (r, c) = self.ys[0].shape();
        let n = self.xs.len();
        let mut out: Vec<MatrixFq> = (0..n).map(|_| MatrixFq::zeros(self.field, r, c)).collect();
        for row in 0..r {
            for col in 0..c {
                let samples: Vec<(u64, u64)> = self
                    .xs
                    .iter()
                    .zip(&self.ys)
                    .map(|(&x, y)| (x, y.get(row, col)))
                    .collect();
                let p = crate::gf::interpolate(&self.field, &samples)?;
                for (deg, &coef) in p.coeffs().iter().enumerate() {
                    out[deg].set(row, col, coef);
                }
            }
        }
        Ok(out)
    }

    /// Whether an extra evaluation lies on this polynomial.
    pub fn agrees_with(&self, x: u64, value: &MatrixFq) -> Result<bool> {
        Ok(self.eval(x)? == *value)
    }
}

/// Number of evaluations needed to interpolate `h` of a cluster with `d`
/// coded products: `2d + 2z - 1`.
pub fn evaluations_needed(d: usize, z: usize) -> usize {
    2 * d + 2 * z - 1
}

/// Interpolates `h = f g` from worker results plus, for clusters after the
/// first, the `z` shared evaluations `(alpha_zeta, R_zeta S_zeta)`.
///
/// Uses all shared points and the first worker results needed to reach
/// `2d + 2z - 1` points.
pub fn interpolate_h(shares: &[ResultShare], shared: &[(u64, MatrixFq)], d: usize, z: usize) -> Result<InterpolatedH> {
    let need = evaluations_needed(d, z);
    let have = shares.len() + shared.len();
    if have < need {
        return Err(Error::NotReady { have, need });
    }
    let field = shares
        .first()
        .map(|s| s.h.field())
        .or_else(|| shared.first().map(|s| s.1.field()))
        .ok_or(Error::NotReady { have: 0, need })?;
    let take = need.saturating_sub(shared.len());
    let mut xs = Vec::with_capacity(need);
    let mut ys = Vec::with_capacity(need);
    for (x, y) in shared.iter().take(need) {
        xs.push(*x);
        ys.push(y.clone());
    }
    for s in shares.iter().take(take) {
        xs.push(s.x);
        ys.push(s.h.clone());
    }
    let mut sorted = xs.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidEvaluationSet("duplicate evaluation point for h".into()));
    }
    Ok(InterpolatedH { field, xs, ys })
}

/// `[h(alpha_1), ..., h(alpha_z)]`, each equal to `R_zeta S_zeta`.
pub fn extract_shared(h: &InterpolatedH, z: usize, points: &EvalPointSet) -> Result<Vec<MatrixFq>> {
    points.alphas()[..z].iter().map(|&a| h.eval(a)).collect()
}

/// `h(alpha_{z+kappa}) = A~_kappa B~_kappa` for `kappa = 1..=d`, tagged with
/// the pair's coefficient vectors.
pub fn extract_products(h: &InterpolatedH, pair: &RoundPolynomialPair) -> Result<Vec<ProductSymbol>> {
    let z = pair.z();
    (0..pair.d())
        .map(|kappa| {
            Ok(ProductSymbol {
                coef_a: pair.coded_a[kappa].coef.clone(),
                coef_b: pair.coded_b[kappa].coef.clone(),
                value: h.eval(pair.nodes[z + kappa])?,
            })
        })
        .collect()
}
