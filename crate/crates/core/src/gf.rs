//! Arithmetic in a prime field GF(q), q < 2^64, plus Lagrange interpolation.
//!
//! [`PrimeField`] works on raw canonical `u64` representatives and is what the
//! matrix code uses on its hot paths. [`Fe`] is a self-describing element that
//! carries its modulus and refuses to mix fields.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use rand::Rng;

use crate::error::{Error, Result};

/// The Mersenne prime 2^31 - 1.
pub const DEFAULT_MODULUS: u64 = 2_147_483_647;

/// A prime field GF(q).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    /// Builds GF(q) after a deterministic primality check.
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Reduces an arbitrary integer to its canonical representative.
    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.q
    }

    /// Canonical representative of a signed integer.
    pub fn from_i64(&self, x: i64) -> u64 {
        let r = (x as i128).rem_euclid(self.q as i128);
        r as u64
    }

    pub fn elem(&self, x: u64) -> Fe {
        Fe {
            value: self.reduce(x),
            q: self.q,
        }
    }

    pub fn zero(&self) -> Fe {
        self.elem(0)
    }

    pub fn one(&self) -> Fe {
        self.elem(1)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        let q = self.q as u128;
        (if s >= q { s - q } else { s }) as u64
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            (a as u128 + self.q as u128 - b as u128) as u64
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: u64) -> Result<u64> {
        let a = self.reduce(a);
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.q - 2))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Uniformly random element.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.q)
    }
}

/// A field element tagged with its modulus.
///
/// The operator impls panic when the moduli differ; use the `try_*` methods
/// to get an [`Error::FieldMismatch`] instead.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fe {
    value: u64,
    q: u64,
}

impl Fe {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check(&self, rhs: &Fe) -> Result<PrimeField> {
        if self.q != rhs.q {
            return Err(Error::FieldMismatch {
                left: self.q,
                right: rhs.q,
            });
        }
        Ok(self.field())
    }

    pub fn try_add(self, rhs: Fe) -> Result<Fe> {
        let f = self.check(&rhs)?;
        Ok(Fe {
            value: f.add(self.value, rhs.value),
            q: self.q,
        })
    }

    pub fn try_sub(self, rhs: Fe) -> Result<Fe> {
        let f = self.check(&rhs)?;
        Ok(Fe {
            value: f.sub(self.value, rhs.value),
            q: self.q,
        })
    }

    pub fn try_mul(self, rhs: Fe) -> Result<Fe> {
        let f = self.check(&rhs)?;
        Ok(Fe {
            value: f.mul(self.value, rhs.value),
            q: self.q,
        })
    }

    pub fn inv(self) -> Result<Fe> {
        Ok(Fe {
            value: self.field().inv(self.value)?,
            q: self.q,
        })
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.q)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for Fe {
    type Output = Fe;
    fn add(self, rhs: Fe) -> Fe {
        self.try_add(rhs).expect("field mismatch")
    }
}

impl Sub for Fe {
    type Output = Fe;
    fn sub(self, rhs: Fe) -> Fe {
        self.try_sub(rhs).expect("field mismatch")
    }
}

impl Mul for Fe {
    type Output = Fe;
    fn mul(self, rhs: Fe) -> Fe {
        self.try_mul(rhs).expect("field mismatch")
    }
}

impl Neg for Fe {
    type Output = Fe;
    fn neg(self) -> Fe {
        Fe {
            value: self.field().neg(self.value),
            q: self.q,
        }
    }
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let f = PrimeField { q: n };
    'witness: for a in SMALL {
        let mut x = f.pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = f.mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Polynomial over GF(q), coefficients in ascending degree order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    field: PrimeField,
    coeffs: Vec<u64>,
}

impl Polynomial {
    pub fn new(field: PrimeField, mut coeffs: Vec<u64>) -> Self {
        for c in coeffs.iter_mut() {
            *c = field.reduce(*c);
        }
        let mut p = Self { field, coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Coefficients without trailing zeros; the zero polynomial is empty.
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: u64) -> u64 {
        let f = self.field;
        self.coeffs.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }
}

fn ensure_distinct(field: &PrimeField, points: &[u64]) -> Result<()> {
    let mut sorted: Vec<u64> = points.iter().map(|&p| field.reduce(p)).collect();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidEvaluationSet(alloc::format!(
            "duplicate point among {} points",
            points.len()
        )));
    }
    Ok(())
}

/// Value at `x` of the Lagrange basis polynomial attached to `points[index]`
/// (zero-based), i.e. prod_{j != index} (x - p_j) / (p_index - p_j).
pub fn lagrange_basis(field: &PrimeField, points: &[u64], index: usize, x: u64) -> Result<u64> {
    if index >= points.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "basis index {index} out of range for {} points",
            points.len()
        )));
    }
    ensure_distinct(field, points)?;
    let pi = points[index];
    let mut num = 1;
    let mut den = 1;
    for (j, &pj) in points.iter().enumerate() {
        if j != index {
            num = field.mul(num, field.sub(x, pj));
            den = field.mul(den, field.sub(pi, pj));
        }
    }
    field.div(num, den)
}

/// All basis values at `x`: entry `i` is `lagrange_basis(points, i, x)`.
///
/// O(k^2) with a single field inversion.
pub fn lagrange_weights(field: &PrimeField, points: &[u64], x: u64) -> Result<Vec<u64>> {
    ensure_distinct(field, points)?;
    let k = points.len();
    let mut dens = vec![1u64; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                dens[i] = field.mul(dens[i], field.sub(points[i], points[j]));
            }
        }
    }
    // x coincides with a node: Kronecker delta
    if let Some(hit) = points.iter().position(|&p| field.reduce(p) == field.reduce(x)) {
        let mut w = vec![0; k];
        w[hit] = 1;
        return Ok(w);
    }
    let diffs: Vec<u64> = points.iter().map(|&p| field.sub(x, p)).collect();
    let full = diffs.iter().fold(1, |acc, &d| field.mul(acc, d));
    // w_i = full / ((x - p_i) * den_i); batch the inversions
    let denoms: Vec<u64> = (0..k).map(|i| field.mul(diffs[i], dens[i])).collect();
    let invs = batch_inverse(field, &denoms)?;
    Ok(invs.into_iter().map(|inv| field.mul(full, inv)).collect())
}

/// Inverts every entry with one field inversion (Montgomery's trick).
pub fn batch_inverse(field: &PrimeField, values: &[u64]) -> Result<Vec<u64>> {
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = 1;
    for &v in values {
        if v == 0 {
            return Err(Error::DivisionByZero);
        }
        prefix.push(acc);
        acc = field.mul(acc, v);
    }
    let mut inv = field.inv(acc)?;
    let mut out = vec![0; values.len()];
    for i in (0..values.len()).rev() {
        out[i] = field.mul(inv, prefix[i]);
        inv = field.mul(inv, values[i]);
    }
    Ok(out)
}

/// The unique polynomial of degree < `samples.len()` through the samples.
///
/// Newton divided differences, then expansion into monomial coefficients.
pub fn interpolate(field: &PrimeField, samples: &[(u64, u64)]) -> Result<Polynomial> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to interpolate".into()));
    }
    let xs: Vec<u64> = samples.iter().map(|s| field.reduce(s.0)).collect();
    ensure_distinct(field, &xs)?;
    let n = samples.len();
    let mut dd: Vec<u64> = samples.iter().map(|s| field.reduce(s.1)).collect();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = field.sub(dd[i], dd[i - 1]);
            let den = field.sub(xs[i], xs[i - level]);
            dd[i] = field.div(num, den)?;
        }
    }
    // Horner over the Newton basis: p = dd[n-1]; p = p*(x - x_i) + dd[i]
    let mut coeffs = vec![0u64; n];
    coeffs[0] = dd[n - 1];
    for (len, i) in (1..).zip((0..n - 1).rev()) {
        // multiply by (x - xs[i])
        for j in (0..len).rev() {
            let c = coeffs[j];
            coeffs[j + 1] = field.add(coeffs[j + 1], c);
            coeffs[j] = field.mul(field.neg(xs[i]), c);
        }
        coeffs[0] = field.add(coeffs[0], dd[i]);
    }
    Ok(Polynomial::new(*field, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f7() -> PrimeField {
        PrimeField::new(7).unwrap()
    }

    #[test]
    fn small_examples() {
        let f = f7();
        assert_eq!(f.add(3, 5), 1);
        assert_eq!(f.add(6, 1), 0);
        assert_eq!(f.add(0, 4), 4);
        assert_eq!(f.mul(3, 5), 1);
        assert_eq!(f.mul(1, 6), 6);
        assert_eq!(f.inv(3).unwrap(), 5);
        assert_eq!(f.inv(1).unwrap(), 1);
        assert_eq!(f.inv(0), Err(Error::DivisionByZero));
        assert_eq!(f.sub(2, 5), 4);
        assert_eq!(f.neg(0), 0);

        let m = PrimeField::new(DEFAULT_MODULUS).unwrap();
        assert_eq!(m.mul(DEFAULT_MODULUS - 1, DEFAULT_MODULUS - 1), 1);
    }

    #[test]
    fn large_modulus_no_overflow() {
        let q = 18_446_744_073_709_551_557; // largest 64-bit prime
        let f = PrimeField::new(q).unwrap();
        assert_eq!(f.mul(q - 1, q - 1), 1);
        assert_eq!(f.add(q - 1, q - 1), q - 2);
        assert_eq!(f.mul(f.inv(q - 2).unwrap(), q - 2), 1);
    }

    #[test]
    fn inverse_exhaustive_257() {
        let f = PrimeField::new(257).unwrap();
        for a in 1..257 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "a = {a}");
        }
    }

    #[test]
    fn primality() {
        assert!(!is_prime(0));
        assert!(!is_prime(1));
        assert!(is_prime(2));
        assert!(is_prime(5));
        assert!(is_prime(257));
        assert!(is_prime(DEFAULT_MODULUS));
        assert!(!is_prime(561)); // Carmichael
        assert!(!is_prime(DEFAULT_MODULUS - 2));
        assert!(matches!(PrimeField::new(8), Err(Error::NotPrime(8))));
    }

    #[test]
    fn tagged_elements() {
        let f = f7();
        let g = PrimeField::new(11).unwrap();
        assert_eq!(f.elem(3) + f.elem(5), f.elem(1));
        assert_eq!((f.elem(3) * f.elem(5)).value(), 1);
        assert_eq!(-f.elem(2), f.elem(5));
        assert_eq!(f.elem(3).inv().unwrap(), f.elem(5));
        assert_eq!(
            f.elem(1).try_add(g.elem(1)),
            Err(Error::FieldMismatch { left: 7, right: 11 })
        );
        assert!(f.elem(1).try_mul(g.elem(1)).is_err());
    }

    #[test]
    fn basis_delta_and_duplicates() {
        let f = f7();
        let pts = [0, 1, 3];
        for i in 0..3 {
            for j in 0..3 {
                let v = lagrange_basis(&f, &pts, i, pts[j]).unwrap();
                assert_eq!(v, (i == j) as u64);
            }
        }
        assert!(matches!(
            lagrange_basis(&f, &[1, 2, 8], 0, 4),
            Err(Error::InvalidEvaluationSet(_))
        ));
        assert!(lagrange_basis(&f, &[1, 2], 2, 4).is_err());
    }

    #[test]
    fn weights_match_basis() {
        let f = PrimeField::new(257).unwrap();
        let pts = [3, 9, 27, 81, 243];
        for x in [0, 5, 9, 100] {
            let w = lagrange_weights(&f, &pts, x).unwrap();
            for (i, wi) in w.iter().enumerate() {
                assert_eq!(*wi, lagrange_basis(&f, &pts, i, x).unwrap());
            }
        }
    }

    #[test]
    fn interpolate_examples() {
        let f = f7();
        let p = interpolate(&f, &[(1, 4), (2, 4), (5, 4)]).unwrap();
        assert_eq!(p.coeffs(), &[4]);

        let samples = [(1, 6), (2, 4), (3, 0)];
        let p = interpolate(&f, &samples).unwrap();
        assert!(p.degree().unwrap() <= 2);
        for (x, y) in samples {
            assert_eq!(p.eval(x), y);
        }

        assert!(matches!(interpolate(&f, &[]), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            interpolate(&f, &[(1, 2), (8, 3)]),
            Err(Error::InvalidEvaluationSet(_))
        ));
    }

    #[test]
    fn interpolate_random_quadratic_q7() {
        let f = f7();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let coeffs: Vec<u64> = (0..3).map(|_| f.random(&mut rng)).collect();
            let p = Polynomial::new(f, coeffs.clone());
            let samples: Vec<(u64, u64)> = [1, 2, 3].iter().map(|&x| (x, p.eval(x))).collect();
            let back = interpolate(&f, &samples).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn partition_of_unity_against_expansion() {
        // Expand every basis polynomial into coefficients independently and
        // check their sum is the constant 1.
        let f = PrimeField::new(257).unwrap();
        let pts = [2, 5, 11, 17, 42];
        let mut total = vec![0u64; pts.len()];
        for i in 0..pts.len() {
            let mut poly = vec![1u64];
            let mut den = 1;
            for (j, &pj) in pts.iter().enumerate() {
                if j == i {
                    continue;
                }
                let mut next = vec![0u64; poly.len() + 1];
                for (d, &c) in poly.iter().enumerate() {
                    next[d + 1] = f.add(next[d + 1], c);
                    next[d] = f.sub(next[d], f.mul(pj, c));
                }
                poly = next;
                den = f.mul(den, f.sub(pts[i], pj));
            }
            let inv = f.inv(den).unwrap();
            for (d, c) in poly.iter().enumerate() {
                total[d] = f.add(total[d], f.mul(*c, inv));
            }
        }
        assert_eq!(total[0], 1);
        assert!(total[1..].iter().all(|&c| c == 0));
    }
}
