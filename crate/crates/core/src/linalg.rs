//! Dense matrices over GF(2^w): rank, square solve, and consistent
//! overdetermined solve.

use thiserror::Error;

use crate::gf::{Field, FieldElement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is rank deficient ({rank} < {needed})")]
    Singular { rank: usize, needed: usize },
    #[error("system is inconsistent")]
    Inconsistent,
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = FieldElement::ONE;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, entries: Vec<FieldElement>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entries must be rows × cols");
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// `rows[i][j] = x_i^j` for the given evaluation points.
    pub fn vandermonde(field: &Field, points: &[FieldElement], cols: usize) -> Self {
        let mut m = Self::zeros(points.len(), cols);
        for (i, &x) in points.iter().enumerate() {
            let mut acc = FieldElement::ONE;
            for j in 0..cols {
                m[(i, j)] = acc;
                acc = field.mul(acc, x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Rows picked in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            entries.extend_from_slice(self.row(r));
        }
        Self::from_rows(rows.len(), self.cols, entries)
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                m[(i, jj)] = self[(i, j)];
            }
        }
        m
    }

    pub fn mul_vec(&self, field: &Field, x: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(FieldElement::ZERO, |acc, (&a, &b)| {
                        field.add(acc, field.mul(a, b))
                    })
            })
            .collect()
    }

    pub fn mul(&self, field: &Field, rhs: &FieldMatrix) -> FieldMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = field.add(out[(i, j)], field.mul(a, rhs[(l, j)]));
                }
            }
        }
        out
    }

    /// Rank by fraction-free elimination, first nonzero entry as pivot.
    pub fn rank(&self, field: &Field) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(rank, p);
            let pivot = m[(rank, col)];
            for r in rank + 1..m.rows {
                let f = m[(r, col)];
                if f.is_zero() {
                    continue;
                }
                // row_r <- pivot·row_r - f·row_rank
                for c in col..m.cols {
                    let v = field.add(field.mul(pivot, m[(r, c)]), field.mul(f, m[(rank, c)]));
                    m[(r, c)] = v;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn inverse(&self, field: &Field) -> Result<FieldMatrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Shape(format!(
                "inverse of {}×{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut cols = Vec::with_capacity(n);
        let mut e = vec![FieldElement::ZERO; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = FieldElement::ZERO);
            e[j] = FieldElement::ONE;
            cols.push(solve(field, self, &e)?);
        }
        let mut inv = Self::zeros(n, n);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl std::ops::Index<(usize, usize)> for FieldMatrix {
    type Output = FieldElement;
    fn index(&self, (i, j): (usize, usize)) -> &FieldElement {
        assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for FieldMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut FieldElement {
        assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

/// Solve the square system `a·x = b`.
pub fn solve(
    field: &Field,
    a: &FieldMatrix,
    b: &[FieldElement],
) -> Result<Vec<FieldElement>, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::Shape(format!(
            "solve needs a square matrix, got {}×{}",
            a.rows, a.cols
        )));
    }
    solve_consistent(field, a, b)
}

/// Solve `a·x = b` for a matrix with at least as many rows as columns.
///
/// Fails with `Singular` when the columns are not independent and with
/// `Inconsistent` when no exact solution exists.
pub fn solve_consistent(
    field: &Field,
    a: &FieldMatrix,
    b: &[FieldElement],
) -> Result<Vec<FieldElement>, LinalgError> {
    if b.len() != a.rows {
        return Err(LinalgError::Shape(format!(
            "rhs has {} entries for {} rows",
            b.len(),
            a.rows
        )));
    }
    let n = a.cols;
    let w = n + 1;
    let mut m = FieldMatrix::zeros(a.rows, w);
    for (i, &bi) in b.iter().enumerate() {
        m.entries[i * w..i * w + n].copy_from_slice(a.row(i));
        m.entries[i * w + n] = bi;
    }

    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
            return Err(LinalgError::Singular {
                rank: a.rank(field),
                needed: n,
            });
        };
        m.swap_rows(rank, p);
        let inv = field.inv(m[(rank, col)]).expect("pivot is nonzero");
        for c in col..w {
            m[(rank, c)] = field.mul(m[(rank, c)], inv);
        }
        for r in 0..m.rows {
            if r == rank {
                continue;
            }
            let f = m[(r, col)];
            if f.is_zero() {
                continue;
            }
            for c in col..w {
                let v = field.add(m[(r, c)], field.mul(f, m[(rank, c)]));
                m[(r, c)] = v;
            }
        }
        rank += 1;
    }
    if (rank..m.rows).any(|r| !m[(r, n)].is_zero()) {
        return Err(LinalgError::Inconsistent);
    }
    Ok((0..n).map(|i| m[(i, n)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(v: u16) -> FieldElement {
        FieldElement::from_raw(v)
    }

    #[test]
    fn rank_examples() {
        let f = Field::gf256();
        assert_eq!(FieldMatrix::identity(3).rank(&f), 3);
        assert_eq!(FieldMatrix::zeros(4, 6).rank(&f), 0);

        let points: Vec<_> = [3u16, 17, 99, 200, 254].map(e).to_vec();
        // determinant of a Vandermonde matrix is the product of pairwise differences
        let mut det = FieldElement::ONE;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                det = f.mul(det, f.add(points[i], points[j]));
            }
        }
        assert!(!det.is_zero());
        assert_eq!(FieldMatrix::vandermonde(&f, &points, 5).rank(&f), 5);
    }

    #[test]
    fn repeated_point_vandermonde_is_singular() {
        let f = Field::gf256();
        let points: Vec<_> = [3u16, 17, 3].map(e).to_vec();
        let v = FieldMatrix::vandermonde(&f, &points, 3);
        assert_eq!(v.rank(&f), 2);
        assert!(matches!(
            solve(&f, &v, &[e(1), e(2), e(3)]),
            Err(LinalgError::Singular { rank: 2, needed: 3 })
        ));
    }

    #[test]
    fn solve_examples() {
        let f = Field::gf256();
        let b = vec![e(9), e(0), e(0xAB)];
        assert_eq!(solve(&f, &FieldMatrix::identity(3), &b).unwrap(), b);
        assert!(matches!(
            solve(&f, &FieldMatrix::zeros(3, 3), &b),
            Err(LinalgError::Singular { .. })
        ));
        assert!(matches!(
            solve(&f, &FieldMatrix::zeros(2, 3), &b[..2]),
            Err(LinalgError::Shape(_))
        ));
    }

    #[test]
    fn overdetermined_inconsistent() {
        let f = Field::gf256();
        let a = FieldMatrix::from_rows(3, 2, vec![e(1), e(0), e(0), e(1), e(1), e(1)]);
        let x = solve_consistent(&f, &a, &[e(4), e(6), e(2)]).unwrap();
        assert_eq!(x, vec![e(4), e(6)]);
        assert_eq!(
            solve_consistent(&f, &a, &[e(4), e(6), e(3)]),
            Err(LinalgError::Inconsistent)
        );
    }

    #[test]
    fn inverse_round_trip() {
        let f = Field::gf256();
        let points: Vec<_> = (1..=6).map(e).collect();
        let v = FieldMatrix::vandermonde(&f, &points, 6);
        let inv = v.inverse(&f).unwrap();
        assert_eq!(v.mul(&f, &inv), FieldMatrix::identity(6));
    }

    fn matrix(max: usize) -> impl Strategy<Value = FieldMatrix> {
        (1..=max, 1..=max).prop_flat_map(|(r, c)| {
            // a sparse-ish distribution so that rank deficiency actually shows up
            prop::collection::vec(prop_oneof![3 => Just(0u16), 1 => 0u16..256], r * c)
                .prop_map(move |v| FieldMatrix::from_rows(r, c, v.into_iter().map(e).collect()))
        })
    }

    proptest! {
        #[test]
        fn rank_invariant_under_transpose(m in matrix(30)) {
            let f = Field::gf256();
            prop_assert_eq!(m.rank(&f), m.transpose().rank(&f));
        }

        #[test]
        fn solve_then_multiply_reproduces_rhs(
            n in 1usize..12,
            seed in prop::collection::vec(0u16..256, 144),
            rhs in prop::collection::vec(0u16..256, 12),
        ) {
            let f = Field::gf256();
            let a = FieldMatrix::from_rows(n, n, seed[..n * n].iter().copied().map(e).collect());
            let b: Vec<_> = rhs[..n].iter().copied().map(e).collect();
            match solve(&f, &a, &b) {
                Ok(x) => prop_assert_eq!(a.mul_vec(&f, &x), b),
                Err(LinalgError::Singular { rank, needed }) => {
                    prop_assert!(rank < needed);
                    prop_assert_eq!(rank, a.rank(&f));
                }
                Err(other) => prop_assert!(false, "unexpected {other:?}"),
            }
        }
    }
}
