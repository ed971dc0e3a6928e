//! Dense matrices over GF(q) and the row/column block partition of A and B.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf::PrimeField;

/// Row-major matrix with entries canonical in [0, q).
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatrixFq {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl MatrixFq {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds from row-major data, reducing each entry mod q.
    pub fn from_vec(field: PrimeField, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let data = data.into_iter().map(|x| field.reduce(x)).collect();
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn random<R: Rng + ?Sized>(field: PrimeField, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        Self {
            field,
            rows,
            cols,
            data,
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = self.field.reduce(v);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn same_field(&self, other: &MatrixFq) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            });
        }
        Ok(())
    }

    fn same_shape(&self, other: &MatrixFq) -> Result<()> {
        self.same_field(other)?;
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &MatrixFq) -> Result<MatrixFq> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &MatrixFq) -> Result<MatrixFq> {
        let mut out = self.clone();
        out.sub_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &MatrixFq) -> Result<()> {
        self.same_shape(other)?;
        let f = self.field;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = f.add(*a, b);
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &MatrixFq) -> Result<()> {
        self.same_shape(other)?;
        let f = self.field;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = f.sub(*a, b);
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: u64, other: &MatrixFq) -> Result<()> {
        self.same_shape(other)?;
        let f = self.field;
        if scale == 0 {
            return Ok(());
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = f.add(*a, f.mul(scale, b));
        }
        Ok(())
    }

    pub fn scale(&self, s: u64) -> MatrixFq {
        let f = self.field;
        let data = self.data.iter().map(|&x| f.mul(s, x)).collect();
        MatrixFq { data, ..*self }
    }

    /// Exact product over GF(q).
    pub fn matmul(&self, other: &MatrixFq) -> Result<MatrixFq> {
        self.same_field(other)?;
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let q = f.modulus() as u128;
        let (n, p) = (self.cols, other.cols);
        let mut out = vec![0u64; self.rows * p];
        // Accumulate in u128 and reduce when the next term could overflow.
        let mut acc = vec![0u128; p];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            let row = &self.data[i * n..(i + 1) * n];
            for (t, &a) in row.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let orow = &other.data[t * p..(t + 1) * p];
                for (slot, &b) in acc.iter_mut().zip(orow) {
                    let prod = a as u128 * b as u128;
                    *slot = match slot.checked_add(prod) {
                        Some(v) => v,
                        None => (*slot % q) + prod,
                    };
                }
            }
            for (j, a) in acc.iter().enumerate() {
                out[i * p + j] = (a % q) as u64;
            }
        }
        Ok(MatrixFq {
            field: f,
            rows: self.rows,
            cols: p,
            data: out,
        })
    }

    /// Rows `[start, start + count)`, zero-filled past the last row.
    fn row_block(&self, start: usize, count: usize) -> MatrixFq {
        let mut out = MatrixFq::zeros(self.field, count, self.cols);
        for r in 0..count {
            if start + r < self.rows {
                let src = &self.data[(start + r) * self.cols..(start + r + 1) * self.cols];
                out.data[r * self.cols..(r + 1) * self.cols].copy_from_slice(src);
            }
        }
        out
    }

    /// Columns `[start, start + count)`, zero-filled past the last column.
    fn col_block(&self, start: usize, count: usize) -> MatrixFq {
        let mut out = MatrixFq::zeros(self.field, self.rows, count);
        for r in 0..self.rows {
            for c in 0..count {
                if start + c < self.cols {
                    out.data[r * count + c] = self.data[r * self.cols + start + c];
                }
            }
        }
        out
    }

    /// Top-left `rows x cols` sub-matrix.
    pub fn truncate(&self, rows: usize, cols: usize) -> MatrixFq {
        let mut out = MatrixFq::zeros(self.field, rows, cols);
        for r in 0..rows.min(self.rows) {
            for c in 0..cols.min(self.cols) {
                out.data[r * cols + c] = self.get(r, c);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Axis {
    Rows,
    Cols,
}

/// Splits `mat` into `parts` equal blocks along `axis`, zero-padding the last.
pub fn partition(mat: &MatrixFq, parts: usize, axis: Axis) -> Result<Vec<MatrixFq>> {
    let dim = match axis {
        Axis::Rows => mat.rows,
        Axis::Cols => mat.cols,
    };
    if parts == 0 || parts > dim {
        return Err(Error::InvalidArgument(format!(
            "cannot split dimension {dim} into {parts} blocks"
        )));
    }
    let size = dim.div_ceil(parts);
    Ok((0..parts)
        .map(|p| match axis {
            Axis::Rows => mat.row_block(p * size, size),
            Axis::Cols => mat.col_block(p * size, size),
        })
        .collect())
}

/// Inverse of [`partition`]: stacks blocks and strips padding to `len`.
pub fn concat(blocks: &[MatrixFq], axis: Axis, len: usize) -> Result<MatrixFq> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no blocks".into()))?;
    let (br, bc) = first.shape();
    if blocks.iter().any(|b| b.shape() != (br, bc)) {
        return Err(Error::ShapeMismatch("blocks differ in shape".into()));
    }
    let field = first.field;
    match axis {
        Axis::Rows => {
            let mut out = MatrixFq::zeros(field, len, bc);
            for r in 0..len {
                let b = &blocks[r / br];
                let src = &b.data[(r % br) * bc..(r % br + 1) * bc];
                out.data[r * bc..(r + 1) * bc].copy_from_slice(src);
            }
            Ok(out)
        }
        Axis::Cols => {
            let mut out = MatrixFq::zeros(field, br, len);
            for r in 0..br {
                for c in 0..len {
                    out.data[r * len + c] = blocks[c / bc].get(r, c % bc);
                }
            }
            Ok(out)
        }
    }
}

/// How A (r x s) and B (s x l) are cut into m row blocks and k column blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockPartition {
    pub m: usize,
    pub k: usize,
    pub rows: usize,
    pub inner: usize,
    pub cols: usize,
    /// Row count of A after padding to a multiple of m.
    pub padded_rows: usize,
    /// Column count of B after padding to a multiple of k.
    pub padded_cols: usize,
}

impl BlockPartition {
    pub fn new(rows: usize, inner: usize, cols: usize, m: usize, k: usize) -> Result<Self> {
        if m == 0 || k == 0 || m > rows || k > cols || inner == 0 {
            return Err(Error::InvalidArgument(format!(
                "cannot partition {rows}x{inner}x{cols} into m={m}, k={k}"
            )));
        }
        Ok(Self {
            m,
            k,
            rows,
            inner,
            cols,
            padded_rows: rows.div_ceil(m) * m,
            padded_cols: cols.div_ceil(k) * k,
        })
    }

    pub fn a_block_shape(&self) -> (usize, usize) {
        (self.padded_rows / self.m, self.inner)
    }

    pub fn b_block_shape(&self) -> (usize, usize) {
        (self.inner, self.padded_cols / self.k)
    }

    pub fn c_block_shape(&self) -> (usize, usize) {
        (self.padded_rows / self.m, self.padded_cols / self.k)
    }

    pub fn split_a(&self, a: &MatrixFq) -> Result<Vec<MatrixFq>> {
        if a.shape() != (self.rows, self.inner) {
            return Err(Error::ShapeMismatch(format!("A is {:?}", a.shape())));
        }
        partition(a, self.m, Axis::Rows)
    }

    pub fn split_b(&self, b: &MatrixFq) -> Result<Vec<MatrixFq>> {
        if b.shape() != (self.inner, self.cols) {
            return Err(Error::ShapeMismatch(format!("B is {:?}", b.shape())));
        }
        partition(b, self.k, Axis::Cols)
    }
}

/// Reassembles C from its mk blocks `C_ij` (zero-based keys) and strips padding.
pub fn assemble_c(blocks: &BTreeMap<(usize, usize), MatrixFq>, part: &BlockPartition) -> Result<MatrixFq> {
    let (br, bc) = part.c_block_shape();
    let first = blocks.values().next().ok_or(Error::IncompleteDecode(0, 0))?;
    let field = first.field();
    let mut out = MatrixFq::zeros(field, part.rows, part.cols);
    for i in 0..part.m {
        for j in 0..part.k {
            let blk = blocks.get(&(i, j)).ok_or(Error::IncompleteDecode(i, j))?;
            if blk.shape() != (br, bc) {
                return Err(Error::ShapeMismatch(format!(
                    "block ({i}, {j}) is {:?}, expected {:?}",
                    blk.shape(),
                    (br, bc)
                )));
            }
            for r in 0..br {
                let gr = i * br + r;
                if gr >= part.rows {
                    break;
                }
                for c in 0..bc {
                    let gc = j * bc + c;
                    if gc >= part.cols {
                        break;
                    }
                    out.data[gr * part.cols + gc] = blk.get(r, c);
                }
            }
        }
    }
    Ok(out)
}
