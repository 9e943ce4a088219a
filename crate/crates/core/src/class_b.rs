//! Class B parity nodes: addition-only parities that let the symbols of a
//! failed node outside Class A reach be repaired at one extra read each.
//!
//! Node construction is greedy over a `k×k` matrix of designated read costs.
//! Each node is built for row 0 from a seed in `Q_0` plus symbols of `X_0`,
//! and every other row `t` is the same pattern shifted by `(t, t)` mod `k`.
//! The cost of a symbol is always the one it has through the most recent
//! (highest-index) node containing it, which is also the node repair uses.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::FieldElement;
use crate::model::{CodeParams, ParityEquation, SymbolPos};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassBError {
    #[error("{0} is not a term of the equation")]
    NotMember(SymbolPos),
    #[error("{0} does not belong to any Q set")]
    NotInQ(SymbolPos),
    #[error("the code has no Class B nodes (n = n_A)")]
    NoClassBNodes,
    #[error("{0} is not covered by any Class B parity")]
    Uncovered(SymbolPos),
}

/// A designated additional read cost; `None` is infinite.
pub type ReadCost = Option<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadCostMatrix {
    k: usize,
    cells: Vec<ReadCost>,
}

impl ReadCostMatrix {
    /// Costs right after Class A repair: infinite on every `Q_t`, `k` on the
    /// diagonal, 1 elsewhere.
    pub fn initial(params: &CodeParams) -> Self {
        let k = params.k();
        let cells = (0..k * k)
            .map(|idx| {
                let pos = SymbolPos::new(idx / k, idx % k);
                if params.in_q(pos) {
                    None
                } else if pos.row == pos.col {
                    Some(k)
                } else {
                    Some(1)
                }
            })
            .collect();
        Self { k, cells }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, pos: SymbolPos) -> ReadCost {
        self.cells[pos.row * self.k + pos.col]
    }

    pub fn set(&mut self, pos: SymbolPos, cost: ReadCost) {
        self.cells[pos.row * self.k + pos.col] = cost;
    }

    pub fn infinite_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// `k` on the diagonal and 1 everywhere else.
    pub fn is_fully_reduced(&self) -> bool {
        (0..self.k * self.k).all(|idx| {
            let want = if idx / self.k == idx % self.k {
                self.k
            } else {
                1
            };
            self.cells[idx] == Some(want)
        })
    }
}

impl fmt::Display for ReadCostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.k {
            let row: Vec<String> = (0..self.k)
                .map(|j| match self.get(SymbolPos::new(i, j)) {
                    Some(c) => c.to_string(),
                    None => "∞".to_string(),
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Additional reads needed to recover `d` from a parity made of `terms`,
/// given that `X_j` (with `j` the node of `d`) is already cached. The parity
/// itself is accounted for by `d`'s own membership.
pub fn read_cost_of_terms(
    params: &CodeParams,
    d: SymbolPos,
    terms: &[SymbolPos],
) -> Result<usize, ClassBError> {
    if !params.in_q(d) {
        return Err(ClassBError::NotInQ(d));
    }
    if !terms.contains(&d) {
        return Err(ClassBError::NotMember(d));
    }
    Ok(terms.iter().filter(|&&t| !params.in_x(d.col, t)).count())
}

pub fn read_cost(
    params: &CodeParams,
    d: SymbolPos,
    eq: &ParityEquation,
) -> Result<usize, ClassBError> {
    let terms: Vec<_> = eq.positions().collect();
    read_cost_of_terms(params, d, &terms)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassBPlan {
    /// `nodes[m][t]` is the parity at row `t` of node `n_A + m`.
    nodes: Vec<Vec<ParityEquation>>,
    read_costs: ReadCostMatrix,
}

impl ClassBPlan {
    /// A plan with no Class B nodes; every `Q` symbol is uncovered.
    pub fn empty(params: &CodeParams) -> Self {
        Self {
            nodes: Vec::new(),
            read_costs: ReadCostMatrix::initial(params),
        }
    }

    /// Reassemble a plan from stored equations and costs.
    pub fn from_parts(nodes: Vec<Vec<ParityEquation>>, read_costs: ReadCostMatrix) -> Self {
        Self { nodes, read_costs }
    }

    pub fn nodes(&self) -> &[Vec<ParityEquation>] {
        &self.nodes
    }

    pub fn equations(&self) -> impl Iterator<Item = &ParityEquation> {
        self.nodes.iter().flatten()
    }

    pub fn read_costs(&self) -> &ReadCostMatrix {
        &self.read_costs
    }

    /// The row-0 seed symbol (from `Q_0`) of each node.
    pub fn seeds(&self) -> Vec<SymbolPos> {
        self.nodes.iter().map(|node| node[0].terms()[0].0).collect()
    }

    /// The parity repair reads for `d`: among Class B parities containing it,
    /// the one in the highest node.
    pub fn designated_parity(&self, d: SymbolPos) -> Result<&ParityEquation, ClassBError> {
        self.nodes
            .iter()
            .rev()
            .flat_map(|node| node.iter())
            .find(|eq| eq.contains(d))
            .ok_or(ClassBError::Uncovered(d))
    }

    /// Designated parity position for every covered `Q` symbol.
    pub fn designated_map(&self, params: &CodeParams) -> BTreeMap<SymbolPos, SymbolPos> {
        q_positions(params)
            .filter_map(|d| self.designated_parity(d).ok().map(|eq| (d, eq.target())))
            .collect()
    }

    /// Costs through the designated parities, infinite where uncovered.
    pub fn designated_costs(&self, params: &CodeParams) -> ReadCostMatrix {
        let mut a = ReadCostMatrix::initial(params);
        for d in q_positions(params) {
            if let Ok(eq) = self.designated_parity(d) {
                a.set(
                    d,
                    Some(read_cost(params, d, eq).expect("designated parity contains d")),
                );
            }
        }
        a
    }

    /// Remove the highest Class B node.
    pub fn punctured(&self, params: &CodeParams) -> Option<Self> {
        if self.nodes.is_empty() {
            return None;
        }
        let nodes = self.nodes[..self.nodes.len() - 1].to_vec();
        let mut plan = Self {
            nodes,
            read_costs: ReadCostMatrix::initial(params),
        };
        plan.read_costs = plan.designated_costs(params);
        Some(plan)
    }
}

fn q_positions(params: &CodeParams) -> impl Iterator<Item = SymbolPos> + '_ {
    (0..params.k()).flat_map(move |j| params.set_q(j).expect("j < k"))
}

/// Build the `n - n_A` Class B nodes of `params`.
pub fn build_class_b(params: &CodeParams) -> Result<ClassBPlan, ClassBError> {
    if params.class_b_nodes() == 0 {
        return Err(ClassBError::NoClassBNodes);
    }
    Ok(Builder::new(params).run(params.class_b_nodes()))
}

struct Builder<'p> {
    params: &'p CodeParams,
    k: usize,
    a: ReadCostMatrix,
}

/// Strictly-less on costs where `None` is infinity.
fn cost_lt(a: usize, b: ReadCost) -> bool {
    b.is_none_or(|b| a < b)
}

fn cost_le(a: usize, b: ReadCost) -> bool {
    b.is_none_or(|b| a <= b)
}

impl<'p> Builder<'p> {
    fn new(params: &'p CodeParams) -> Self {
        Self {
            params,
            k: params.k(),
            a: ReadCostMatrix::initial(params),
        }
    }

    fn d(&self, i: usize, j: usize) -> SymbolPos {
        SymbolPos::new(i % self.k, j % self.k)
    }

    /// `X_0` minus the diagonal through the seed `d(i, 0)`.
    fn candidates(&self, seed_row: usize) -> Vec<SymbolPos> {
        let diag = self.params.set_dtilde(seed_row, 0).expect("seed row < k");
        self.params
            .set_x(0)
            .expect("k > 0")
            .into_iter()
            .filter(|x| !diag.contains(x))
            .collect()
    }

    fn mirror_usable(&self, seed_row: usize) -> bool {
        self.candidates(seed_row).contains(&self.d(0, seed_row))
    }

    fn cost(&self, d: SymbolPos, terms: &[SymbolPos]) -> usize {
        read_cost_of_terms(self.params, d, terms).expect("members of a Class B row are Q symbols")
    }

    fn with(terms: &[SymbolPos], extra: SymbolPos) -> Vec<SymbolPos> {
        let mut v = terms.to_vec();
        v.push(extra);
        v
    }

    /// Seed: maximal cost in `Q_0`, preferring seeds whose mirror `d(0, i)`
    /// is usable; lowest row on ties.
    fn pick_seed(&self) -> usize {
        let q0 = self.params.set_q(0).expect("k > 0");
        let cost_key = |p: &SymbolPos| self.a.get(*p).unwrap_or(usize::MAX);
        let best = q0.iter().map(cost_key).max().expect("Q_0 is nonempty");
        let mut top = q0.iter().filter(|p| cost_key(p) == best).map(|p| p.row);
        let rows: Vec<usize> = top.by_ref().collect();
        rows.iter()
            .copied()
            .find(|&i| self.mirror_usable(i))
            .unwrap_or(rows[0])
    }

    /// Re-evaluate every member of every shifted row of the node.
    fn update(&mut self, row0: &[SymbolPos]) {
        for t in 0..self.k {
            let shifted: Vec<_> = row0.iter().map(|p| p.shifted(t, self.k)).collect();
            for &m in &shifted {
                let c = self.cost(m, &shifted);
                self.a.set(m, Some(c));
            }
        }
    }

    fn build_row0(&mut self, max_itr: usize) -> Vec<SymbolPos> {
        let seed_row = self.pick_seed();
        let mirror = self.d(0, seed_row);
        let mirror_ok = self.mirror_usable(seed_row);
        let candidates = self.candidates(seed_row);
        let mut row0 = vec![self.d(seed_row, 0)];

        for itr in 1..=max_itr {
            if itr == 1
                && mirror_ok
                && cost_lt(
                    self.cost(mirror, &Self::with(&row0, mirror)),
                    self.a.get(mirror),
                )
            {
                row0.push(mirror);
                self.update(&row0);
                continue;
            }
            let pick = candidates.iter().copied().find(|&x| {
                !row0.contains(&x)
                    && self.a.get(x) != Some(1)
                    && cost_le(self.cost(x, &Self::with(&row0, x)), self.a.get(x))
            });
            if let Some(x) = pick {
                row0.push(x);
                self.update(&row0);
            }
        }
        self.update(&row0);
        row0
    }

    fn run(mut self, count: usize) -> ClassBPlan {
        let k = self.k;
        let n_a = self.params.n_a();
        let mut max_itr = self.params.q_len() - 1;
        let mut nodes = Vec::with_capacity(count);
        for m in 0..count {
            let row0 = self.build_row0(max_itr);
            let node = (0..k)
                .map(|t| {
                    let terms = row0
                        .iter()
                        .map(|p| (p.shifted(t, k), FieldElement::ONE))
                        .collect();
                    ParityEquation::new(k, SymbolPos::new(t, n_a + m), terms)
                        .expect("shifted rows keep distinct data positions")
                })
                .collect();
            nodes.push(node);
            max_itr = max_itr.saturating_sub(1);
        }
        ClassBPlan {
            nodes,
            read_costs: self.a,
        }
    }
}
