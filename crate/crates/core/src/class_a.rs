//! Class A parity: a systematic Reed–Solomon code on every row of the data
//! block, with `tau` piggybacks added to the last `tau` parity columns.
//!
//! Parity `(i, u)` for `u >= n_A - tau` additionally carries the data symbol
//! `d((i + u - n_A + tau + 1) mod k, i)`, i.e. a symbol of node `i`.

use thiserror::Error;

use crate::gf::{Counting, Field, FieldElement};
use crate::linalg::{FieldMatrix, LinalgError};
use crate::model::{CodeParams, DataBlock, ParityEquation, SymbolPos};

/// Above this many `k`-subsets the MDS property is taken from the Vandermonde
/// structure instead of being enumerated.
const MDS_ENUMERATION_LIMIT: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassAError {
    #[error("GF(2^{width}) has fewer than {needed} distinct evaluation points")]
    FieldTooSmall { width: u8, needed: usize },
    #[error("generator is not MDS: rows {0:?} are dependent")]
    NotMds(Vec<usize>),
    #[error("column {0} carries no piggyback")]
    NotPiggybacked(usize),
    #[error("node {0} is not a data node")]
    NotDataNode(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `alpha(l, j)` for data column `l` and Class A column `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsCoefficients {
    k: usize,
    n_a: usize,
    /// k rows, n_A - k columns
    alpha: FieldMatrix,
}

impl MdsCoefficients {
    pub fn from_matrix(k: usize, n_a: usize, alpha: FieldMatrix) -> Self {
        assert_eq!((alpha.rows(), alpha.cols()), (k, n_a - k));
        Self { k, n_a, alpha }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn get(&self, l: usize, j: usize) -> FieldElement {
        self.alpha[(l, j - self.k)]
    }

    pub fn matrix(&self) -> &FieldMatrix {
        &self.alpha
    }

    /// The systematic generator `[I | alpha]` with one row per code symbol.
    pub fn generator(&self) -> FieldMatrix {
        let mut g = FieldMatrix::zeros(self.n_a, self.k);
        for i in 0..self.k {
            g[(i, i)] = FieldElement::ONE;
        }
        for j in self.k..self.n_a {
            for l in 0..self.k {
                g[(j, l)] = self.get(l, j);
            }
        }
        g
    }

    /// Every choice of `k` code symbols determines the data row.
    pub fn check_mds(&self, field: &Field) -> Result<(), ClassAError> {
        let g = self.generator();
        let mut rows: Vec<usize> = (0..self.k).collect();
        loop {
            if g.select_rows(&rows).rank(field) < self.k {
                return Err(ClassAError::NotMds(rows));
            }
            if !next_combination(&mut rows, self.n_a) {
                return Ok(());
            }
        }
    }
}

/// Advance to the next `rows.len()`-subset of `0..n` in lexicographic order.
pub(crate) fn next_combination(rows: &mut [usize], n: usize) -> bool {
    let r = rows.len();
    let Some(i) = (0..r).rev().find(|&i| rows[i] < n - r + i) else {
        return false;
    };
    rows[i] += 1;
    for j in i + 1..r {
        rows[j] = rows[j - 1] + 1;
    }
    true
}

pub(crate) fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Systematic Reed–Solomon coefficients over the evaluation points
/// `0, 1, …, n_A - 1`.
pub fn mds_coefficients(
    field: &Field,
    k: usize,
    n_a: usize,
) -> Result<MdsCoefficients, ClassAError> {
    if (field.order() as usize) < n_a {
        return Err(ClassAError::FieldTooSmall {
            width: field.width(),
            needed: n_a,
        });
    }
    let points: Vec<_> = (0..n_a as u16).map(FieldElement::from_raw).collect();
    let v = FieldMatrix::vandermonde(field, &points, k);
    let top: Vec<usize> = (0..k).collect();
    let g = v.mul(field, &v.select_rows(&top).inverse(field)?);

    let mut alpha = FieldMatrix::zeros(k, n_a - k);
    for j in k..n_a {
        for l in 0..k {
            alpha[(l, j - k)] = g[(j, l)];
        }
    }
    let coeffs = MdsCoefficients { k, n_a, alpha };
    if binomial(n_a, k) <= MDS_ENUMERATION_LIMIT {
        coeffs.check_mds(field)?;
    }
    Ok(coeffs)
}

/// Row offset of the piggyback carried by column `u`, if any.
pub fn piggyback_offset(params: &CodeParams, u: usize) -> Option<usize> {
    (params.first_piggybacked()..params.n_a())
        .contains(&u)
        .then(|| u + params.tau() + 1 - params.n_a())
}

/// Data position piggybacked onto parity `(i, u)`.
pub fn piggyback_term(params: &CodeParams, i: usize, u: usize) -> Option<SymbolPos> {
    piggyback_offset(params, u).map(|o| SymbolPos::new((i + o) % params.k(), i))
}

/// All `k·(n_A - k)` Class A equations, column by column.
pub fn class_a_equations(params: &CodeParams, coeffs: &MdsCoefficients) -> Vec<ParityEquation> {
    let k = params.k();
    let mut out = Vec::with_capacity(k * (params.n_a() - k));
    for j in k..params.n_a() {
        for i in 0..k {
            let mut terms: Vec<_> = (0..k)
                .map(|l| (SymbolPos::new(i, l), coeffs.get(l, j)))
                .collect();
            if let Some(pb) = piggyback_term(params, i, j) {
                terms.push((pb, FieldElement::ONE));
            }
            out.push(
                ParityEquation::new(k, SymbolPos::new(i, j), terms)
                    .expect("Class A terms are distinct data positions"),
            );
        }
    }
    out
}

/// Encode the Class A columns. Returns the `k×(n_A-k)` parities, row-major.
///
/// Each parity costs `k` multiplications and `k-1` additions, plus one
/// addition per piggyback.
pub fn encode_class_a(
    params: &CodeParams,
    coeffs: &MdsCoefficients,
    data: &DataBlock,
    ops: &mut Counting<'_>,
) -> Vec<Vec<FieldElement>> {
    let k = params.k();
    (0..k)
        .map(|i| {
            (k..params.n_a())
                .map(|j| {
                    let mut acc = ops.mul(coeffs.get(0, j), data.get(SymbolPos::new(i, 0)));
                    for l in 1..k {
                        let t = ops.mul(coeffs.get(l, j), data.get(SymbolPos::new(i, l)));
                        acc = ops.add(acc, t);
                    }
                    if let Some(pb) = piggyback_term(params, i, j) {
                        acc = ops.add(acc, data.get(pb));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// The `k×k²` matrix mapping the row-major data vector to the parities of
/// piggybacked column `u`.
pub fn piggyback_system_matrix(
    params: &CodeParams,
    coeffs: &MdsCoefficients,
    u: usize,
) -> Result<FieldMatrix, ClassAError> {
    let k = params.k();
    let offset = piggyback_offset(params, u).ok_or(ClassAError::NotPiggybacked(u))?;
    let mut g = FieldMatrix::zeros(k, k * k);
    for i in 0..k {
        for l in 0..k {
            g[(i, i * k + l)] = coeffs.get(l, u);
        }
        // unit vector u_i in block (i + offset)
        g[(i, ((i + offset) % k) * k + i)] = FieldElement::ONE;
    }
    Ok(g)
}

/// The `k×k` restriction of [`piggyback_system_matrix`] to the unknowns of
/// failed data node `r`: `alpha(r, u)` on the diagonal and a one at
/// `(r, r + offset)`.
pub fn piggyback_subsystem(
    params: &CodeParams,
    coeffs: &MdsCoefficients,
    u: usize,
    r: usize,
) -> Result<FieldMatrix, ClassAError> {
    let k = params.k();
    if r >= k {
        return Err(ClassAError::NotDataNode(r));
    }
    let g = piggyback_system_matrix(params, coeffs, u)?;
    let cols: Vec<usize> = (0..k).map(|l| l * k + r).collect();
    Ok(g.select_cols(&cols))
}
