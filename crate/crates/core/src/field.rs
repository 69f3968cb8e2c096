//! Exact arithmetic over prime fields F_q and the dense linear algebra
//! (rank, solve, row-space membership) the rest of the crate builds on.
//!
//! Elements are machine integers kept eagerly reduced into `[0, q)`. All
//! operations are pure; elimination uses first-nonzero pivot selection, so
//! results are deterministic functions of their inputs.

use crate::error::{Error, Result};

/// Primality by trial division. Fine at the field sizes this crate targets.
pub fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    if q.is_multiple_of(2) {
        return q == 2;
    }
    let mut f = 3u64;
    while f.checked_mul(f).is_some_and(|ff| ff <= q) {
        if q.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// An element of the prime field F_q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    /// Builds an element, reducing `value` modulo `modulus`.
    pub fn new(value: u64, modulus: u64) -> Result<Self> {
        if !is_prime(modulus) {
            return Err(Error::NotPrime(modulus));
        }
        Ok(FieldElement {
            value: value % modulus,
            modulus,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn same_field(&self, other: &Self) -> Result<Fq> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(Fq::new(self.modulus))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let fq = self.same_field(other)?;
        Ok(FieldElement {
            value: fq.add(self.value, other.value),
            modulus: self.modulus,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let fq = self.same_field(other)?;
        Ok(FieldElement {
            value: fq.sub(self.value, other.value),
            modulus: self.modulus,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let fq = self.same_field(other)?;
        Ok(FieldElement {
            value: fq.mul(self.value, other.value),
            modulus: self.modulus,
        })
    }

    /// Multiplicative inverse; rejects zero.
    pub fn inv(&self) -> Result<Self> {
        if self.value == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(FieldElement {
            value: Fq::new(self.modulus).inv(self.value),
            modulus: self.modulus,
        })
    }

    pub fn pow(&self, exp: u64) -> Self {
        FieldElement {
            value: Fq::new(self.modulus).pow(self.value, exp),
            modulus: self.modulus,
        }
    }
}

/// Raw modular arithmetic on already-reduced `u64` values. Internal helper
/// for loops where the shared modulus is guaranteed by a container invariant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Fq {
    q: u64,
}

impl Fq {
    pub(crate) fn new(q: u64) -> Self {
        Fq { q }
    }

    pub(crate) fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    pub(crate) fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.q - (b - a)
        }
    }

    pub(crate) fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub(crate) fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    // Fermat: a^(q-2), valid since q is prime and a != 0.
    pub(crate) fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.q - 2)
    }
}

/// A dense row-major matrix over one prime field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    modulus: u64,
    values: Vec<u64>,
}

impl FieldMatrix {
    /// Builds a matrix from raw values, reducing each modulo `q`.
    pub fn from_values(q: u64, rows: usize, cols: usize, values: Vec<u64>) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                values.len()
            )));
        }
        let values = values.into_iter().map(|v| v % q).collect();
        Ok(FieldMatrix {
            rows,
            cols,
            modulus: q,
            values,
        })
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows(q: u64, rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_values(q, rows.len(), cols, rows.concat())
    }

    pub fn zero(q: u64, rows: usize, cols: usize) -> Result<Self> {
        Self::from_values(q, rows, cols, vec![0; rows * cols])
    }

    pub fn identity(q: u64, n: usize) -> Result<Self> {
        let mut m = Self::zero(q, n, n)?;
        for i in 0..n {
            m.values[i * n + i] = 1 % q;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Raw value at `(r, c)`.
    pub fn value(&self, r: usize, c: usize) -> u64 {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        self.values[r * self.cols + c]
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        FieldElement {
            value: self.value(r, c),
            modulus: self.modulus,
        }
    }

    /// Row `r` as a value slice.
    pub fn row(&self, r: usize) -> &[u64] {
        assert!(r < self.rows, "row index out of range");
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    /// Matrix rank over F_q by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut work: Vec<Vec<u64>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        eliminate(&mut work, self.cols, Fq::new(self.modulus))
    }

    /// Determinant of a square matrix.
    pub fn determinant(&self) -> Result<FieldElement> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "determinant of {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let fq = Fq::new(self.modulus);
        let mut work: Vec<Vec<u64>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        let n = self.rows;
        let mut det = 1 % self.modulus;
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| work[r][col] != 0) else {
                return FieldElement::new(0, self.modulus);
            };
            if pivot != col {
                work.swap(pivot, col);
                det = fq.sub(0, det);
            }
            det = fq.mul(det, work[col][col]);
            let inv = fq.inv(work[col][col]);
            let pivot_row = std::mem::take(&mut work[col]);
            for row in work.iter_mut().skip(col + 1) {
                let factor = fq.mul(row[col], inv);
                if factor == 0 {
                    continue;
                }
                for (dst, &src) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *dst = fq.sub(*dst, fq.mul(factor, src));
                }
            }
            work[col] = pivot_row;
        }
        FieldElement::new(det, self.modulus)
    }

    /// Solves `self * x = rhs` for square nonsingular `self`.
    pub fn solve_square(&self, rhs: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "solve on {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if rhs.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} vs {} rows",
                rhs.len(),
                self.rows
            )));
        }
        for e in rhs {
            if e.modulus() != self.modulus {
                return Err(Error::ModulusMismatch(self.modulus, e.modulus()));
            }
        }
        let rhs_col: Vec<u64> = rhs.iter().map(FieldElement::value).collect();
        let solution = self.solve_columns(&[rhs_col])?;
        Ok(solution[0]
            .iter()
            .map(|&v| FieldElement {
                value: v,
                modulus: self.modulus,
            })
            .collect())
    }

    /// Solves `self * X = B` for several right-hand-side columns at once.
    /// Returns one solution vector per input column.
    pub(crate) fn solve_columns(&self, rhs_cols: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
        let n = self.rows;
        let fq = Fq::new(self.modulus);
        let width = rhs_cols.len();
        // Augmented rows: coefficients then one entry per right-hand side.
        let mut work: Vec<Vec<u64>> = (0..n)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                for col in rhs_cols {
                    row.push(col[r] % self.modulus);
                }
                row
            })
            .collect();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| work[r][col] != 0) else {
                return Err(Error::SingularMatrix);
            };
            work.swap(pivot, col);
            let inv = fq.inv(work[col][col]);
            let mut pivot_row = std::mem::take(&mut work[col]);
            for v in pivot_row[col..].iter_mut() {
                *v = fq.mul(*v, inv);
            }
            for (r, row) in work.iter_mut().enumerate() {
                if r == col || row[col] == 0 {
                    continue;
                }
                let factor = row[col];
                for (dst, &src) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *dst = fq.sub(*dst, fq.mul(factor, src));
                }
            }
            work[col] = pivot_row;
        }
        Ok((0..width)
            .map(|j| (0..n).map(|r| work[r][n + j]).collect())
            .collect())
    }

    /// Tests whether the unit vector `e_target` lies in the span of this
    /// matrix's rows together with the unit vectors `{e_s : s in units}`.
    pub fn in_rowspace_with_units(&self, units: &[usize], target: usize) -> Result<bool> {
        if target >= self.cols {
            return Err(Error::IndexOutOfRange {
                index: target,
                limit: self.cols,
            });
        }
        for &u in units {
            if u >= self.cols {
                return Err(Error::IndexOutOfRange {
                    index: u,
                    limit: self.cols,
                });
            }
        }
        let fq = Fq::new(self.modulus);
        let mut rows: Vec<Vec<u64>> = (0..self.rows).map(|r| self.row(r).to_vec()).collect();
        for &u in units {
            let mut e = vec![0u64; self.cols];
            e[u] = 1 % self.modulus;
            rows.push(e);
        }
        let base_rank = eliminate(&mut rows.clone(), self.cols, fq);
        let mut e = vec![0u64; self.cols];
        e[target] = 1 % self.modulus;
        rows.push(e);
        let extended_rank = eliminate(&mut rows, self.cols, fq);
        Ok(extended_rank == base_rank)
    }
}

/// Forward elimination in place; returns the rank. First nonzero pivot in
/// each column, scanning rows top-down.
fn eliminate(rows: &mut [Vec<u64>], cols: usize, fq: Fq) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = fq.inv(rows[rank][col]);
        let mut pivot_row = std::mem::take(&mut rows[rank]);
        for v in pivot_row[col..].iter_mut() {
            *v = fq.mul(*v, inv);
        }
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col] == 0 {
                continue;
            }
            let factor = row[col];
            for (dst, &src) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *dst = fq.sub(*dst, fq.mul(factor, src));
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}
