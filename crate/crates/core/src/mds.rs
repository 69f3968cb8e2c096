//! Construction and verification of the public code generator used for the
//! per-group linear combinations.
//!
//! The generator is a pure function of `(group_size, demand_per_group, q)`:
//! the all-ones row when one combination per group suffices, otherwise a
//! Vandermonde matrix on the first `group_size` field elements. Every square
//! submatrix of full height is nonsingular, so any `demand_per_group`
//! coordinates of a codeword determine the inputs.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::field::{is_prime, FieldMatrix, Fq};

/// Generator of a code whose every maximal square submatrix is nonsingular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    matrix: FieldMatrix,
    /// Distinct evaluation points of the Vandermonde construction; empty for
    /// the single-row (all-ones) case and for matrices adopted verbatim.
    points: Vec<u64>,
}

impl GeneratorMatrix {
    /// Adopts an existing matrix without checking the full-rank-submatrix
    /// property; run [`verify_mds`] to check it.
    pub fn from_matrix(matrix: FieldMatrix) -> Self {
        GeneratorMatrix {
            matrix,
            points: Vec::new(),
        }
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.matrix
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    /// Code length (columns).
    pub fn code_length(&self) -> usize {
        self.matrix.cols()
    }

    /// Code dimension (rows).
    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn modulus(&self) -> u64 {
        self.matrix.modulus()
    }
}

/// Builds the canonical generator for a length-`t`, dimension-`d` code over
/// F_q: the 1 x t all-ones row when `d = 1`, otherwise the d x t Vandermonde
/// matrix with column `j` equal to `(1, x_j, ..., x_j^(d-1))` on the points
/// `x_j = 0, 1, ..., t-1`.
pub fn build_generator(t: usize, d: usize, q: u64) -> Result<GeneratorMatrix> {
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    if d == 0 || d > t {
        return Err(Error::DimensionMismatch(format!(
            "code dimension {d} not in 1..={t}"
        )));
    }
    if d == 1 {
        let matrix = FieldMatrix::from_values(q, 1, t, vec![1; t])?;
        return Ok(GeneratorMatrix {
            matrix,
            points: Vec::new(),
        });
    }
    // d > 1 needs t distinct evaluation points.
    if q < t as u64 {
        return Err(Error::FieldTooSmall {
            q,
            t,
            d,
            min: t as u64,
        });
    }
    let fq = Fq::new(q);
    let points: Vec<u64> = (0..t as u64).collect();
    let mut values = Vec::with_capacity(d * t);
    for row in 0..d {
        for &x in &points {
            values.push(fq.pow(x, row as u64));
        }
    }
    let matrix = FieldMatrix::from_values(q, d, t, values)?;
    Ok(GeneratorMatrix { matrix, points })
}

/// Checks the defining property directly: every column-selected square
/// submatrix of full height has full rank.
pub fn verify_mds(g: &GeneratorMatrix) -> bool {
    let d = g.dimension();
    let t = g.code_length();
    if d == 0 || d > t {
        return false;
    }
    let m = g.matrix();
    (0..t).combinations(d).all(|cols| {
        let values: Vec<u64> = (0..d)
            .flat_map(|r| cols.iter().map(move |&c| m.value(r, c)))
            .collect();
        let sub = FieldMatrix::from_values(m.modulus(), d, d, values)
            .expect("submatrix dimensions are consistent");
        sub.rank() == d
    })
}
