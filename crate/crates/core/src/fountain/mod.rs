//! Rateless (LT-style) coding of the A and B blocks and decoding of the mk
//! products `C_ij = A_i B_j` from products of coded blocks.

mod peel;
mod soliton;

pub use peel::{ge_fallback, DecodeStatus, PeelingDecoder};
pub use soliton::{RobustSoliton, SolitonParams};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::MatrixFq;

/// Binary selection vector over the source blocks, at least one bit set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefVector {
    bits: Vec<bool>,
}

impl CoefVector {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if !bits.iter().any(|&b| b) {
            return Err(Error::InvalidArgument("coefficient vector has no bit set".into()));
        }
        Ok(Self { bits })
    }

    /// Unit vector `e_index` of length `len`.
    pub fn unit(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidArgument(format!("unit index {index} >= {len}")));
        }
        let mut bits = vec![false; len];
        bits[index] = true;
        Ok(Self { bits })
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; len];
        for &i in indices {
            if i >= len {
                return Err(Error::InvalidArgument(format!("index {i} >= {len}")));
            }
            bits[i] = true;
        }
        Self::new(bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Draws a degree from the robust soliton over `source_count`, then a
/// uniformly random support of that size.
pub fn draw_coef<R: Rng + ?Sized>(source_count: usize, params: SolitonParams, rng: &mut R) -> Result<CoefVector> {
    let dist = RobustSoliton::new(source_count, params)?;
    Ok(draw_with(&dist, rng))
}

/// Same as [`draw_coef`] with a prebuilt distribution.
pub fn draw_with<R: Rng + ?Sized>(dist: &RobustSoliton, rng: &mut R) -> CoefVector {
    let n = dist.support();
    let d = dist.sample(rng);
    let picked = rand::seq::index::sample(rng, n, d);
    let mut bits = vec![false; n];
    for i in picked.iter() {
        bits[i] = true;
    }
    CoefVector { bits }
}

/// A coded block `sum_i b_i X_i` together with its coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodedBlock {
    pub coef: CoefVector,
    pub data: MatrixFq,
}

/// Sums the source blocks selected by `coef`.
pub fn encode_block(sources: &[MatrixFq], coef: &CoefVector) -> Result<CodedBlock> {
    if coef.len() != sources.len() {
        return Err(Error::ShapeMismatch(format!(
            "coefficient length {} for {} sources",
            coef.len(),
            sources.len()
        )));
    }
    let first = sources
        .first()
        .ok_or_else(|| Error::InvalidArgument("no source blocks".into()))?;
    let mut data = MatrixFq::zeros(first.field(), first.rows(), first.cols());
    for i in coef.support() {
        data.add_assign(&sources[i])?;
    }
    Ok(CodedBlock {
        coef: coef.clone(),
        data,
    })
}

/// A decoded product of coded blocks, `value = (sum_i a_i A_i)(sum_j b_j B_j)`,
/// i.e. the sum of `C_ij` over the outer-product support of `(coef_a, coef_b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProductSymbol {
    pub coef_a: CoefVector,
    pub coef_b: CoefVector,
    pub value: MatrixFq,
}

impl ProductSymbol {
    /// Flattened unknown indices `i * k + j` covered by this symbol.
    pub fn unknowns(&self) -> Vec<usize> {
        let k = self.coef_b.len();
        let mut out = Vec::with_capacity(self.coef_a.degree() * self.coef_b.degree());
        for i in self.coef_a.support() {
            for j in self.coef_b.support() {
                out.push(i * k + j);
            }
        }
        out
    }
}
