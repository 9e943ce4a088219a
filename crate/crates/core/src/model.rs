//! Code parameters, array layout, the per-node index sets, and the symbolic
//! parity equation shared by encoding, cost analysis, and decoding.
//!
//! Data symbol `d(i, j)` is row `i` of data node `j`. All index arithmetic on
//! rows and columns of the data block is modulo `k`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Counting, Field, FieldElement, FieldSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("Class A length must satisfy k+2 <= n_A < 2k (k={k}, n_A={n_a})")]
    ClassALength { k: usize, n_a: usize },
    #[error("piggybacks per row must satisfy 1 <= tau <= n_A-k-1 (tau={tau}, max={max})")]
    Tau { tau: usize, max: usize },
    #[error("lengths must satisfy n = n_A + n_B - k (n={n}, n_A={n_a}, n_B={n_b}, k={k})")]
    Length {
        n: usize,
        k: usize,
        n_a: usize,
        n_b: usize,
    },
    #[error("at most k-tau-1 = {max} Class B nodes are supported, got {got}")]
    ClassBCount { got: usize, max: usize },
    #[error("field GF(2^{width}) is too small for n_A = {n_a} evaluation points")]
    FieldTooSmall { width: u8, n_a: usize },
    #[error("index {index} out of range 0..{bound}")]
    IndexOutOfRange { index: usize, bound: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct CodeParams {
    n: usize,
    k: usize,
    n_a: usize,
    n_b: usize,
    tau: usize,
    field: FieldSpec,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: usize,
    k: usize,
    n_a: usize,
    n_b: usize,
    tau: usize,
    field_width: u8,
    modulus: u32,
}

impl TryFrom<RawParams> for CodeParams {
    type Error = String;

    fn try_from(r: RawParams) -> Result<Self, String> {
        let field = FieldSpec::new(r.field_width, r.modulus).map_err(|e| e.to_string())?;
        CodeParams::new(r.n, r.k, r.n_a, r.n_b, r.tau, field).map_err(|e| e.to_string())
    }
}

impl From<CodeParams> for RawParams {
    fn from(p: CodeParams) -> Self {
        RawParams {
            n: p.n,
            k: p.k,
            n_a: p.n_a,
            n_b: p.n_b,
            tau: p.tau,
            field_width: p.field.width(),
            modulus: p.field.modulus(),
        }
    }
}

impl CodeParams {
    pub fn new(
        n: usize,
        k: usize,
        n_a: usize,
        n_b: usize,
        tau: usize,
        field: FieldSpec,
    ) -> Result<Self, ParamError> {
        let p = Self {
            n,
            k,
            n_a,
            n_b,
            tau,
            field,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for an `(n, k)` code built on an `(n_A, k)` Class A code;
    /// `n_B` follows from `n = n_A + n_B - k`.
    pub fn from_lengths(
        n: usize,
        k: usize,
        n_a: usize,
        tau: usize,
        field: FieldSpec,
    ) -> Result<Self, ParamError> {
        let n_b = (n + k)
            .checked_sub(n_a)
            .ok_or(ParamError::Length { n, k, n_a, n_b: 0 })?;
        Self::new(n, k, n_a, n_b, tau, field)
    }

    /// The same code with all `k-tau-1` Class B nodes.
    pub fn with_full_class_b(
        k: usize,
        n_a: usize,
        tau: usize,
        field: FieldSpec,
    ) -> Result<Self, ParamError> {
        let extra = k.saturating_sub(tau + 1);
        Self::from_lengths(n_a + extra, k, n_a, tau, field)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let Self {
            n,
            k,
            n_a,
            n_b,
            tau,
            field,
        } = *self;
        if n_a < k + 2 || n_a >= 2 * k {
            return Err(ParamError::ClassALength { k, n_a });
        }
        let max_tau = n_a - k - 1;
        if tau < 1 || tau > max_tau {
            return Err(ParamError::Tau { tau, max: max_tau });
        }
        if n + k != n_a + n_b {
            return Err(ParamError::Length { n, k, n_a, n_b });
        }
        let max_b = k - tau - 1;
        if n < n_a || n - n_a > max_b {
            return Err(ParamError::ClassBCount {
                got: n.saturating_sub(n_a),
                max: max_b,
            });
        }
        if (field.order() as usize) <= n_a {
            return Err(ParamError::FieldTooSmall {
                width: field.width(),
                n_a,
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn class_b_nodes(&self) -> usize {
        self.n - self.n_a
    }

    /// `k - tau - 1`: symbols per failed node left for Class B repair.
    pub fn q_len(&self) -> usize {
        self.k - self.tau - 1
    }

    /// Guaranteed fault tolerance `n_A - k - tau + 1`.
    pub fn fault_tolerance(&self) -> usize {
        self.n_a - self.k - self.tau + 1
    }

    /// First Class A column carrying a piggyback.
    pub fn first_piggybacked(&self) -> usize {
        self.n_a - self.tau
    }

    pub fn node_kind(&self, col: usize) -> NodeKind {
        if col < self.k {
            NodeKind::Data
        } else if col < self.n_a {
            NodeKind::ClassA
        } else {
            NodeKind::ClassB
        }
    }

    /// Drop the last Class B node.
    pub fn punctured(&self) -> Option<Self> {
        (self.n > self.n_a).then(|| Self {
            n: self.n - 1,
            n_b: self.n_b - 1,
            ..*self
        })
    }

    fn check(&self, index: usize) -> Result<(), ParamError> {
        if index >= self.k {
            return Err(ParamError::IndexOutOfRange {
                index,
                bound: self.k,
            });
        }
        Ok(())
    }

    fn wrap(&self, x: usize) -> usize {
        x % self.k
    }

    /// `R_j`: the `k-1` data symbols of row `j` outside node `j`.
    pub fn set_r(&self, j: usize) -> Result<Vec<SymbolPos>, ParamError> {
        self.check(j)?;
        Ok((1..self.k)
            .map(|s| SymbolPos::new(j, self.wrap(j + s)))
            .collect())
    }

    /// `Q_j`: symbols of node `j` that Class A repair does not reach.
    pub fn set_q(&self, j: usize) -> Result<Vec<SymbolPos>, ParamError> {
        self.check(j)?;
        Ok((self.tau + 1..self.k)
            .map(|s| SymbolPos::new(self.wrap(j + s), j))
            .collect())
    }

    /// `X_j`: the part of `R_j` that lies in some `Q_l`.
    pub fn set_x(&self, j: usize) -> Result<Vec<SymbolPos>, ParamError> {
        self.check(j)?;
        Ok((1..self.k - self.tau)
            .map(|s| SymbolPos::new(j, self.wrap(j + s)))
            .collect())
    }

    /// The wrapped diagonal through `(i, j)`.
    pub fn set_dtilde(&self, i: usize, j: usize) -> Result<Vec<SymbolPos>, ParamError> {
        self.check(i)?;
        self.check(j)?;
        Ok((0..self.k)
            .map(|s| SymbolPos::new(self.wrap(i + s), self.wrap(j + s)))
            .collect())
    }

    /// Diagonal offset `(row - col) mod k` of a data position.
    pub fn offset(&self, pos: SymbolPos) -> usize {
        (pos.row + self.k - pos.col) % self.k
    }

    /// Whether a data position belongs to `Q_{pos.col}`.
    pub fn in_q(&self, pos: SymbolPos) -> bool {
        pos.col < self.k && self.offset(pos) > self.tau
    }

    /// Whether a data position belongs to `X_j`.
    pub fn in_x(&self, j: usize, pos: SymbolPos) -> bool {
        if pos.row != j || pos.col >= self.k {
            return false;
        }
        let s = (pos.col + self.k - j) % self.k;
        (1..self.k - self.tau).contains(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Data,
    ClassA,
    ClassB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolPos {
    pub row: usize,
    pub col: usize,
}

impl SymbolPos {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Shift both coordinates by `t` modulo `k`.
    pub fn shifted(self, t: usize, k: usize) -> Self {
        Self::new((self.row + t) % k, (self.col + t) % k)
    }
}

impl fmt::Display for SymbolPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquationError {
    #[error("term {0} is not a data position")]
    NotData(SymbolPos),
    #[error("term {0} appears twice")]
    Duplicate(SymbolPos),
}

/// A parity symbol as a weighted sum of data symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityEquation {
    target: SymbolPos,
    terms: Vec<(SymbolPos, FieldElement)>,
}

impl ParityEquation {
    pub fn new(
        k: usize,
        target: SymbolPos,
        terms: Vec<(SymbolPos, FieldElement)>,
    ) -> Result<Self, EquationError> {
        let mut seen = BTreeSet::new();
        for &(pos, _) in &terms {
            if pos.col >= k || pos.row >= k {
                return Err(EquationError::NotData(pos));
            }
            if !seen.insert(pos) {
                return Err(EquationError::Duplicate(pos));
            }
        }
        Ok(Self { target, terms })
    }

    pub fn target(&self) -> SymbolPos {
        self.target
    }

    pub fn terms(&self) -> &[(SymbolPos, FieldElement)] {
        &self.terms
    }

    pub fn positions(&self) -> impl Iterator<Item = SymbolPos> + '_ {
        self.terms.iter().map(|&(p, _)| p)
    }

    pub fn contains(&self, pos: SymbolPos) -> bool {
        self.terms.iter().any(|&(p, _)| p == pos)
    }

    pub fn coefficient(&self, pos: SymbolPos) -> Option<FieldElement> {
        self.terms.iter().find(|&&(p, _)| p == pos).map(|&(_, c)| c)
    }

    pub fn evaluate(&self, field: &Field, data: &DataBlock) -> FieldElement {
        self.terms.iter().fold(FieldElement::ZERO, |acc, &(p, c)| {
            field.add(acc, field.mul(c, data.get(p)))
        })
    }

    /// Evaluate, counting one multiplication per term and one addition per
    /// term after the first.
    pub fn evaluate_counting(&self, ops: &mut Counting<'_>, data: &DataBlock) -> FieldElement {
        let mut acc = None;
        for &(p, c) in &self.terms {
            let v = ops.mul(c, data.get(p));
            acc = Some(match acc {
                None => v,
                Some(a) => ops.add(a, v),
            });
        }
        acc.unwrap_or(FieldElement::ZERO)
    }

    /// Evaluate a unit-coefficient equation with additions only.
    pub(crate) fn evaluate_sum_counting(
        &self,
        ops: &mut Counting<'_>,
        data: &DataBlock,
    ) -> FieldElement {
        let mut acc = None;
        for &(p, _) in &self.terms {
            let v = data.get(p);
            acc = Some(match acc {
                None => v,
                Some(a) => ops.add(a, v),
            });
        }
        acc.unwrap_or(FieldElement::ZERO)
    }
}

/// The `k×k` data array, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataBlock {
    k: usize,
    symbols: Vec<FieldElement>,
}

impl DataBlock {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            symbols: vec![FieldElement::ZERO; k * k],
        }
    }

    pub fn from_row_major(k: usize, symbols: Vec<FieldElement>) -> Self {
        assert_eq!(symbols.len(), k * k);
        Self { k, symbols }
    }

    pub fn random<R: rand::Rng + ?Sized>(k: usize, field: FieldSpec, rng: &mut R) -> Self {
        let order = field.order();
        let symbols = (0..k * k)
            .map(|_| FieldElement::from_raw(rng.gen_range(0..order) as u16))
            .collect();
        Self { k, symbols }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, pos: SymbolPos) -> FieldElement {
        self.symbols[pos.row * self.k + pos.col]
    }

    pub fn set(&mut self, pos: SymbolPos, v: FieldElement) {
        self.symbols[pos.row * self.k + pos.col] = v;
    }

    pub fn as_row_major(&self) -> &[FieldElement] {
        &self.symbols
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        (0..self.k)
            .map(|i| self.get(SymbolPos::new(i, j)))
            .collect()
    }
}

/// The `k×n` code array: data block followed by Class A and Class B parities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeArray {
    k: usize,
    n: usize,
    symbols: Vec<FieldElement>,
}

impl CodeArray {
    pub fn zeros(k: usize, n: usize) -> Self {
        Self {
            k,
            n,
            symbols: vec![FieldElement::ZERO; k * n],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, pos: SymbolPos) -> FieldElement {
        self.symbols[pos.row * self.n + pos.col]
    }

    pub fn set(&mut self, pos: SymbolPos, v: FieldElement) {
        self.symbols[pos.row * self.n + pos.col] = v;
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        (0..self.k)
            .map(|i| self.get(SymbolPos::new(i, j)))
            .collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[FieldElement]) {
        assert_eq!(values.len(), self.k);
        for (i, &v) in values.iter().enumerate() {
            self.set(SymbolPos::new(i, j), v);
        }
    }

    pub fn data_block(&self) -> DataBlock {
        let mut d = DataBlock::zeros(self.k);
        for i in 0..self.k {
            for j in 0..self.k {
                d.set(SymbolPos::new(i, j), self.get(SymbolPos::new(i, j)));
            }
        }
        d
    }
}
