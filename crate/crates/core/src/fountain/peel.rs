use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::ProductSymbol;
use crate::error::{Error, Result};
use crate::gf::PrimeField;
use crate::matrix::MatrixFq;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeStatus {
    Incomplete { resolved: usize },
    Complete,
}

#[derive(Clone, Debug)]
struct Pending {
    remaining: Vec<usize>,
    residual: MatrixFq,
}

/// Incremental row echelon basis, used only to know when the accumulated
/// coefficient rows reach full rank.
#[derive(Clone, Debug)]
struct RankTracker {
    field: PrimeField,
    width: usize,
    rows: Vec<(usize, Vec<u64>)>,
}

impl RankTracker {
    fn new(field: PrimeField, width: usize) -> Self {
        Self {
            field,
            width,
            rows: Vec::new(),
        }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Returns true when `row` increased the rank.
    fn insert(&mut self, mut row: Vec<u64>) -> bool {
        let f = self.field;
        for (pivot, basis) in &self.rows {
            let c = row[*pivot];
            if c != 0 {
                for (x, &b) in row.iter_mut().zip(basis) {
                    *x = f.sub(*x, f.mul(c, b));
                }
            }
        }
        let Some(pivot) = row.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = f.inv(row[pivot]).expect("nonzero pivot");
        for x in row.iter_mut() {
            *x = f.mul(*x, inv);
        }
        // keep the basis fully reduced on its pivot columns
        for (_, basis) in self.rows.iter_mut() {
            let c = basis[pivot];
            if c != 0 {
                for (x, &r) in basis.iter_mut().zip(&row) {
                    *x = f.sub(*x, f.mul(c, r));
                }
            }
        }
        self.rows.push((pivot, row));
        debug_assert!(self.rows.len() <= self.width);
        true
    }
}

/// Peeling decoder over the `m * k` unknown blocks `C_ij`.
///
/// Symbols whose outer-product support has a single unresolved block resolve
/// it; resolutions cascade. When peeling stalls and the coefficient rows have
/// reached full rank, [`ge_fallback`] solves the accumulated system.
#[derive(Clone, Debug)]
pub struct PeelingDecoder {
    m: usize,
    k: usize,
    shape: Option<(usize, usize)>,
    resolved: Vec<Option<MatrixFq>>,
    resolved_count: usize,
    pending: Vec<Option<Pending>>,
    touching: Vec<Vec<usize>>,
    history: Vec<ProductSymbol>,
    consumed: usize,
    complete: bool,
    fallback: bool,
    used_fallback: bool,
    rank: Option<RankTracker>,
}

impl PeelingDecoder {
    pub fn new(m: usize, k: usize) -> Self {
        let mk = m * k;
        Self {
            m,
            k,
            shape: None,
            resolved: vec![None; mk],
            resolved_count: 0,
            pending: Vec::new(),
            touching: vec![Vec::new(); mk],
            history: Vec::new(),
            consumed: 0,
            complete: false,
            fallback: true,
            used_fallback: false,
            rank: None,
        }
    }

    /// Pure peeling, no Gaussian-elimination fallback.
    pub fn peeling_only(m: usize, k: usize) -> Self {
        Self {
            fallback: false,
            ..Self::new(m, k)
        }
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn resolved_count(&self) -> usize {
        self.resolved_count
    }

    /// Symbols accepted before (and including) the one that completed decoding.
    pub fn symbols_consumed(&self) -> usize {
        self.consumed
    }

    pub fn used_fallback(&self) -> bool {
        self.used_fallback
    }

    pub fn status(&self) -> DecodeStatus {
        if self.complete {
            DecodeStatus::Complete
        } else {
            DecodeStatus::Incomplete {
                resolved: self.resolved_count,
            }
        }
    }

    /// Fountain overhead `consumed / mk - 1`.
    pub fn measured_overhead(&self) -> Result<f64> {
        if !self.complete {
            return Err(Error::State("overhead requested before decoding completed".into()));
        }
        let mk = (self.m * self.k) as f64;
        let eps = self.consumed as f64 / mk - 1.0;
        assert!(eps >= 0.0, "decoded with fewer than mk symbols");
        Ok(eps)
    }

    /// The decoded blocks keyed by zero-based `(i, j)`.
    pub fn blocks(&self) -> Result<BTreeMap<(usize, usize), MatrixFq>> {
        let mut out = BTreeMap::new();
        for (idx, blk) in self.resolved.iter().enumerate() {
            let (i, j) = (idx / self.k, idx % self.k);
            out.insert((i, j), blk.clone().ok_or(Error::IncompleteDecode(i, j))?);
        }
        Ok(out)
    }

    /// Feeds one symbol. Symbols arriving after completion are ignored.
    pub fn push(&mut self, sym: ProductSymbol) -> Result<DecodeStatus> {
        if self.complete {
            return Ok(DecodeStatus::Complete);
        }
        if sym.coef_a.len() != self.m || sym.coef_b.len() != self.k {
            return Err(Error::ShapeMismatch(format!(
                "symbol over {}x{} blocks, decoder expects {}x{}",
                sym.coef_a.len(),
                sym.coef_b.len(),
                self.m,
                self.k
            )));
        }
        match self.shape {
            None => self.shape = Some(sym.value.shape()),
            Some(s) if s != sym.value.shape() => {
                return Err(Error::ShapeMismatch(format!(
                    "symbol value {:?}, expected {:?}",
                    sym.value.shape(),
                    s
                )))
            }
            _ => {}
        }
        self.consumed += 1;
        let unknowns = sym.unknowns();

        let mut residual = sym.value.clone();
        let mut remaining = Vec::with_capacity(unknowns.len());
        for &u in &unknowns {
            match &self.resolved[u] {
                Some(v) => residual.sub_assign(v)?,
                None => remaining.push(u),
            }
        }
        if self.fallback {
            let field = sym.value.field();
            let width = self.m * self.k;
            let tracker = self.rank.get_or_insert_with(|| RankTracker::new(field, width));
            let mut row = vec![0u64; width];
            for &u in &unknowns {
                row[u] = 1;
            }
            tracker.insert(row);
        }
        self.history.push(sym);

        let mut queue = Vec::new();
        match remaining.len() {
            0 => {
                if !residual.is_zero() {
                    return Err(Error::Corruption(
                        "redundant symbol disagrees with resolved blocks".into(),
                    ));
                }
            }
            1 => queue.push((remaining[0], residual)),
            _ => {
                let id = self.pending.len();
                for &u in &remaining {
                    self.touching[u].push(id);
                }
                self.pending.push(Some(Pending { remaining, residual }));
            }
        }
        self.cascade(queue)?;

        if !self.complete && self.fallback && self.rank.as_ref().map_or(0, |r| r.rank()) == self.m * self.k {
            let solved = ge_fallback(&self.history, self.m, self.k)?;
            for ((i, j), blk) in solved {
                let idx = i * self.k + j;
                match &self.resolved[idx] {
                    Some(v) if *v != blk => {
                        return Err(Error::Corruption(format!(
                            "elimination disagrees with peeled block ({i}, {j})"
                        )))
                    }
                    Some(_) => {}
                    None => {
                        self.resolved[idx] = Some(blk);
                        self.resolved_count += 1;
                    }
                }
            }
            self.used_fallback = true;
            self.complete = true;
            self.pending.clear();
        }
        Ok(self.status())
    }

    fn cascade(&mut self, mut queue: Vec<(usize, MatrixFq)>) -> Result<()> {
        while let Some((u, value)) = queue.pop() {
            if let Some(existing) = &self.resolved[u] {
                if *existing != value {
                    return Err(Error::Corruption(format!(
                        "block ({}, {}) resolved to two different values",
                        u / self.k,
                        u % self.k
                    )));
                }
                continue;
            }
            for id in core::mem::take(&mut self.touching[u]) {
                let Some(p) = self.pending[id].as_mut() else {
                    continue;
                };
                p.residual.sub_assign(&value)?;
                p.remaining.retain(|&x| x != u);
                match p.remaining.len() {
                    0 => {
                        if !p.residual.is_zero() {
                            return Err(Error::Corruption("peeled symbol left a nonzero residual".into()));
                        }
                        self.pending[id] = None;
                    }
                    1 => {
                        let p = self.pending[id].take().expect("present");
                        queue.push((p.remaining[0], p.residual));
                    }
                    _ => {}
                }
            }
            self.resolved[u] = Some(value);
            self.resolved_count += 1;
        }
        if self.resolved_count == self.m * self.k {
            self.complete = true;
        }
        Ok(())
    }
}

/// Solves the accumulated symbols for all `m * k` blocks by Gaussian
/// elimination over GF(q).
///
/// Fails with [`Error::NeedMoreSymbols`] when the coefficient rank is below
/// `m * k`, and with [`Error::Corruption`] if the system is inconsistent.
pub fn ge_fallback(symbols: &[ProductSymbol], m: usize, k: usize) -> Result<BTreeMap<(usize, usize), MatrixFq>> {
    let mk = m * k;
    let Some(first) = symbols.first() else {
        return Err(Error::NeedMoreSymbols { rank: 0, needed: mk });
    };
    let field = first.value.field();
    let mut rows: Vec<(Vec<u64>, MatrixFq)> = symbols
        .iter()
        .map(|s| {
            let mut row = vec![0u64; mk];
            for u in s.unknowns() {
                row[u] = 1;
            }
            (row, s.value.clone())
        })
        .collect();

    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(mk);
    for col in 0..mk {
        let Some(sel) = (pivot_row..rows.len()).find(|&r| rows[r].0[col] != 0) else {
            continue;
        };
        rows.swap(pivot_row, sel);
        let inv = field.inv(rows[pivot_row].0[col])?;
        {
            let (coef, rhs) = &mut rows[pivot_row];
            for x in coef.iter_mut() {
                *x = field.mul(*x, inv);
            }
            *rhs = rhs.scale(inv);
        }
        let (pc, pr) = rows[pivot_row].clone();
        for (r, (coef, rhs)) in rows.iter_mut().enumerate() {
            if r == pivot_row || coef[col] == 0 {
                continue;
            }
            let c = coef[col];
            for (x, &p) in coef.iter_mut().zip(&pc) {
                *x = field.sub(*x, field.mul(c, p));
            }
            rhs.add_scaled(field.neg(c), &pr)?;
        }
        pivots.push(col);
        pivot_row += 1;
    }
    if pivots.len() < mk {
        return Err(Error::NeedMoreSymbols {
            rank: pivots.len(),
            needed: mk,
        });
    }
    if rows[mk..].iter().any(|(_, rhs)| !rhs.is_zero()) {
        return Err(Error::Corruption("inconsistent product symbols".into()));
    }
    Ok(rows
        .into_iter()
        .take(mk)
        .zip(pivots)
        .map(|((_, rhs), col)| ((col / k, col % k), rhs))
        .collect())
}
