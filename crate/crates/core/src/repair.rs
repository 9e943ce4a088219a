//! Node repair with exact read accounting, generic erasure decoding, and
//! exhaustive fault-tolerance checks.
//!
//! A single failed data node `j` is repaired in two phases. Phase A reads
//! `R_j` and the first pure-MDS parity of row `j` to get `d(j, j)`, then one
//! piggybacked parity per remaining Class A column to peel off the `tau`
//! piggybacks. Phase B recovers each symbol of `Q_j` from its designated
//! Class B parity. Every symbol read stays cached, so nothing is read twice.

use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::{rngs::StdRng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class_a::{binomial, next_combination, piggyback_term};
use crate::code::Code;
use crate::gf::{Counting, FieldElement, OpCount};
use crate::linalg::{solve_consistent, FieldMatrix, LinalgError};
use crate::model::{CodeArray, DataBlock, NodeKind, SymbolPos};

/// Largest `n` for which fault tolerance is checked exhaustively.
pub const EXHAUSTIVE_MAX_N: usize = 16;
const SAMPLES_PER_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error("node {0} is unavailable")]
    Unavailable(usize),
    #[error("read of {pos} failed: {msg}")]
    Io { pos: SymbolPos, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("expected exactly one failed data node, found failures at {0:?}")]
    NotSingleDataFailure(Vec<usize>),
    #[error("node {0} is not a parity node")]
    NotParityNode(usize),
    #[error("erasure pattern {0:?} is not decodable")]
    Undecodable(Vec<usize>),
    #[error("node index {0} out of range")]
    NoSuchNode(usize),
    #[error("cannot erase {asked} of {max} nodes")]
    TooManyErasures { asked: usize, max: usize },
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// Random access to the symbols of one stripe.
pub trait SymbolSource {
    fn available(&self, col: usize) -> bool;
    fn read_symbol(&mut self, pos: SymbolPos) -> Result<FieldElement, SourceError>;
}

/// A code array with some nodes erased.
#[derive(Debug, Clone)]
pub struct ErasedArray<'a> {
    array: &'a CodeArray,
    erased: BTreeSet<usize>,
}

impl<'a> ErasedArray<'a> {
    pub fn new(array: &'a CodeArray, erased: impl IntoIterator<Item = usize>) -> Self {
        Self {
            array,
            erased: erased.into_iter().collect(),
        }
    }
}

impl SymbolSource for ErasedArray<'_> {
    fn available(&self, col: usize) -> bool {
        col < self.array.n() && !self.erased.contains(&col)
    }

    fn read_symbol(&mut self, pos: SymbolPos) -> Result<FieldElement, SourceError> {
        if !self.available(pos.col) {
            return Err(SourceError::Unavailable(pos.col));
        }
        Ok(self.array.get(pos))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairKind {
    /// Class A then Class B schedule for one data node.
    Schedule,
    /// Re-evaluation of one parity node's equations.
    ParityReencode,
    /// Solving the full linear system.
    GenericDecode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairReport {
    pub failed: Vec<usize>,
    pub kind: RepairKind,
    /// Distinct symbols read, in order.
    pub reads: Vec<SymbolPos>,
    pub recovered: Vec<(SymbolPos, FieldElement)>,
    pub field_ops: OpCount,
    /// Symbols with no Class B parity left, recovered from their row instead.
    pub fallback: Vec<SymbolPos>,
}

impl RepairReport {
    pub fn read_count(&self) -> usize {
        self.reads.len()
    }
}

/// Cached reader that logs each distinct symbol fetched from the source.
struct Session<'s, S: SymbolSource + ?Sized> {
    source: &'s mut S,
    cache: HashMap<SymbolPos, FieldElement>,
    reads: Vec<SymbolPos>,
}

impl<'s, S: SymbolSource + ?Sized> Session<'s, S> {
    fn new(source: &'s mut S) -> Self {
        Self {
            source,
            cache: HashMap::new(),
            reads: Vec::new(),
        }
    }

    fn read(&mut self, pos: SymbolPos) -> Result<FieldElement, SourceError> {
        if let Some(&v) = self.cache.get(&pos) {
            return Ok(v);
        }
        let v = self.source.read_symbol(pos)?;
        self.reads.push(pos);
        self.cache.insert(pos, v);
        Ok(v)
    }

    fn known(&self, pos: SymbolPos) -> bool {
        self.cache.contains_key(&pos)
    }

    fn learn(&mut self, pos: SymbolPos, v: FieldElement) {
        self.cache.insert(pos, v);
    }
}

fn failed_nodes<S: SymbolSource + ?Sized>(code: &Code, source: &S) -> Vec<usize> {
    (0..code.params().n())
        .filter(|&c| !source.available(c))
        .collect()
}

/// Solve row `i` for `d(i, j)` from the first pure-MDS parity: reads the
/// other `k-1` data symbols of the row and `p(i, k)`.
fn recover_from_row<S: SymbolSource + ?Sized>(
    code: &Code,
    session: &mut Session<'_, S>,
    ops: &mut Counting<'_>,
    i: usize,
    j: usize,
) -> Result<FieldElement, SourceError> {
    let k = code.params().k();
    let coeffs = code.coefficients();
    let mut row = Vec::with_capacity(k - 1);
    for s in 1..k {
        let l = (j + s) % k;
        row.push((l, session.read(SymbolPos::new(i, l))?));
    }
    let mut acc = session.read(SymbolPos::new(i, k))?;
    for (l, v) in row {
        let t = ops.mul(coeffs.get(l, k), v);
        acc = ops.add(acc, t);
    }
    Ok(ops
        .div(acc, coeffs.get(j, k))
        .expect("systematic MDS coefficients are nonzero"))
}

/// Repair data node `j`, the only unavailable node of `source`.
pub fn repair_data_node<S: SymbolSource + ?Sized>(
    code: &Code,
    source: &mut S,
    j: usize,
) -> Result<(Vec<FieldElement>, RepairReport), RepairError> {
    let params = *code.params();
    let k = params.k();
    let failed = failed_nodes(code, source);
    if j >= k || failed != [j] {
        return Err(RepairError::NotSingleDataFailure(failed));
    }
    let field = code.field();
    let mut ops = Counting::new(field);
    let mut session = Session::new(source);
    let mut recovered = Vec::with_capacity(k);
    let mut fallback = Vec::new();

    // Phase A: d(j, j), then one symbol per piggybacked column
    let djj = recover_from_row(code, &mut session, &mut ops, j, j)?;
    session.learn(SymbolPos::new(j, j), djj);
    recovered.push((SymbolPos::new(j, j), djj));

    for u in params.first_piggybacked()..params.n_a() {
        let mut acc = session.read(SymbolPos::new(j, u))?;
        for l in 0..k {
            let v = session.read(SymbolPos::new(j, l))?;
            let t = ops.mul(code.coefficients().get(l, u), v);
            acc = ops.add(acc, t);
        }
        let pos = piggyback_term(&params, j, u).expect("column carries a piggyback");
        session.learn(pos, acc);
        recovered.push((pos, acc));
    }

    // Phase B
    for d in params.set_q(j).expect("j < k") {
        let via_parity = match code.plan().designated_parity(d) {
            Ok(eq)
                if eq
                    .positions()
                    .all(|p| p == d || p.col != j || session.known(p)) =>
            {
                Some(eq)
            }
            _ => None,
        };
        let value = match via_parity {
            Some(eq) => {
                let mut acc = session.read(eq.target())?;
                for p in eq.positions().filter(|&p| p != d) {
                    let v = session.read(p)?;
                    acc = ops.add(acc, v);
                }
                acc
            }
            None => {
                fallback.push(d);
                recover_from_row(code, &mut session, &mut ops, d.row, j)?
            }
        };
        session.learn(d, value);
        recovered.push((d, value));
    }

    let mut column = vec![FieldElement::ZERO; k];
    for &(p, v) in &recovered {
        column[p.row] = v;
    }
    let report = RepairReport {
        failed: vec![j],
        kind: RepairKind::Schedule,
        reads: session.reads,
        recovered,
        field_ops: ops.ops(),
        fallback,
    };
    Ok((column, report))
}

/// Re-encode parity node `col` from the data block.
pub fn repair_parity_node<S: SymbolSource + ?Sized>(
    code: &Code,
    source: &mut S,
    col: usize,
) -> Result<(Vec<FieldElement>, RepairReport), RepairError> {
    let params = code.params();
    if col >= params.n() {
        return Err(RepairError::NoSuchNode(col));
    }
    if params.node_kind(col) == NodeKind::Data {
        return Err(RepairError::NotParityNode(col));
    }
    let mut ops = Counting::new(code.field());
    let mut session = Session::new(source);
    let mut column = Vec::with_capacity(params.k());
    let mut recovered = Vec::with_capacity(params.k());
    for t in 0..params.k() {
        let eq = code
            .equation(SymbolPos::new(t, col))
            .expect("parity position has an equation");
        let mut acc: Option<FieldElement> = None;
        for &(p, c) in eq.terms() {
            let v = session.read(p)?;
            let term = if c == FieldElement::ONE {
                v
            } else {
                ops.mul(c, v)
            };
            acc = Some(match acc {
                None => term,
                Some(a) => ops.add(a, term),
            });
        }
        let v = acc.unwrap_or(FieldElement::ZERO);
        column.push(v);
        recovered.push((eq.target(), v));
    }
    let report = RepairReport {
        failed: vec![col],
        kind: RepairKind::ParityReencode,
        reads: session.reads,
        recovered,
        field_ops: ops.ops(),
        fallback: Vec::new(),
    };
    Ok((column, report))
}

/// Coefficient rows of the surviving parities over the unknown data
/// positions. Known data contributions are left for the caller.
fn reduced_system(
    code: &Code,
    erased: &BTreeSet<usize>,
) -> (Vec<SymbolPos>, Vec<SymbolPos>, FieldMatrix) {
    let params = code.params();
    let k = params.k();
    let unknowns: Vec<SymbolPos> = erased
        .iter()
        .filter(|&&c| c < k)
        .flat_map(|&c| (0..k).map(move |i| SymbolPos::new(i, c)))
        .collect();
    let index: HashMap<SymbolPos, usize> =
        unknowns.iter().enumerate().map(|(n, &p)| (p, n)).collect();

    let mut parities = Vec::new();
    let mut entries = Vec::new();
    for eq in code.equations() {
        if erased.contains(&eq.target().col) {
            continue;
        }
        if !eq.positions().any(|p| index.contains_key(&p)) {
            continue;
        }
        let mut row = vec![FieldElement::ZERO; unknowns.len()];
        for &(p, c) in eq.terms() {
            if let Some(&n) = index.get(&p) {
                row[n] = c;
            }
        }
        parities.push(eq.target());
        entries.extend(row);
    }
    let m = FieldMatrix::from_rows(parities.len(), unknowns.len(), entries);
    (unknowns, parities, m)
}

/// Whether every data symbol is determined by the nodes outside `erased`.
///
/// Equivalent to the stacked system over all `k²` data symbols (one identity
/// row per surviving data symbol, one row per surviving parity) having full
/// rank: the identity rows pin every surviving data symbol, leaving the
/// parity rows restricted to the erased data columns.
pub fn is_decodable(code: &Code, erased: &[usize]) -> bool {
    let erased: BTreeSet<usize> = erased.iter().copied().collect();
    let (unknowns, _, m) = reduced_system(code, &erased);
    unknowns.is_empty() || m.rank(code.field()) == unknowns.len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub data: DataBlock,
    pub reads: Vec<SymbolPos>,
}

/// Recover the full data block with the nodes in `erased` missing.
pub fn decode_erasures<S: SymbolSource + ?Sized>(
    code: &Code,
    source: &mut S,
    erased: &[usize],
) -> Result<DecodeOutcome, RepairError> {
    let params = code.params();
    let k = params.k();
    if let Some(&bad) = erased.iter().find(|&&c| c >= params.n()) {
        return Err(RepairError::NoSuchNode(bad));
    }
    let erased_set: BTreeSet<usize> = erased.iter().copied().collect();
    let (unknowns, parities, m) = reduced_system(code, &erased_set);
    let field = code.field();
    let mut session = Session::new(source);

    let mut data = DataBlock::zeros(k);
    for i in 0..k {
        for j in (0..k).filter(|j| !erased_set.contains(j)) {
            let p = SymbolPos::new(i, j);
            data.set(p, session.read(p)?);
        }
    }
    if !unknowns.is_empty() {
        let mut rhs = Vec::with_capacity(parities.len());
        for &target in &parities {
            let eq = code.equation(target).expect("parity has an equation");
            let mut acc = session.read(target)?;
            for &(p, c) in eq.terms() {
                if !erased_set.contains(&p.col) {
                    acc = field.add(acc, field.mul(c, data.get(p)));
                }
            }
            rhs.push(acc);
        }
        let solution = match solve_consistent(field, &m, &rhs) {
            Ok(x) => x,
            Err(LinalgError::Singular { .. }) => {
                return Err(RepairError::Undecodable(erased_set.into_iter().collect()))
            }
            Err(e) => panic!("parities of a valid codeword are consistent: {e}"),
        };
        for (p, v) in unknowns.into_iter().zip(solution) {
            data.set(p, v);
        }
    }
    Ok(DecodeOutcome {
        data,
        reads: session.reads,
    })
}

/// A node index and its recovered column.
pub type RestoredNode = (usize, Vec<FieldElement>);

/// Restore every unavailable node of `source`.
///
/// A single data node goes through the repair schedule, a single parity node
/// is re-encoded, and anything else is decoded as a whole.
pub fn repair<S: SymbolSource + ?Sized>(
    code: &Code,
    source: &mut S,
) -> Result<(Vec<RestoredNode>, RepairReport), RepairError> {
    let params = *code.params();
    let failed = failed_nodes(code, source);
    match failed.as_slice() {
        [] => Ok((
            Vec::new(),
            RepairReport {
                failed,
                kind: RepairKind::Schedule,
                reads: Vec::new(),
                recovered: Vec::new(),
                field_ops: OpCount::default(),
                fallback: Vec::new(),
            },
        )),
        &[j] if j < params.k() => {
            let (col, report) = repair_data_node(code, source, j)?;
            Ok((vec![(j, col)], report))
        }
        &[c] => {
            let (col, report) = repair_parity_node(code, source, c)?;
            Ok((vec![(c, col)], report))
        }
        _ => {
            if failed.len() > params.n() - params.k() {
                return Err(RepairError::Undecodable(failed));
            }
            let outcome = decode_erasures(code, source, &failed)?;
            let array = code.encode(&outcome.data);
            let columns: Vec<_> = failed.iter().map(|&c| (c, array.column(c))).collect();
            let recovered = columns
                .iter()
                .flat_map(|(c, col)| {
                    col.iter()
                        .enumerate()
                        .map(move |(i, &v)| (SymbolPos::new(i, *c), v))
                })
                .collect();
            let report = RepairReport {
                failed,
                kind: RepairKind::GenericDecode,
                reads: outcome.reads,
                recovered,
                field_ops: OpCount::default(),
                fallback: Vec::new(),
            };
            Ok((columns, report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultToleranceReport {
    pub max_erasures: usize,
    pub patterns_checked: usize,
    /// Undecodable node sets, in enumeration order.
    pub failing: Vec<Vec<usize>>,
    /// `None` when every pattern was enumerated; otherwise the sampling seed.
    pub sampled_with_seed: Option<u64>,
}

impl FaultToleranceReport {
    pub fn pass(&self) -> bool {
        self.failing.is_empty()
    }

    pub fn exhaustive(&self) -> bool {
        self.sampled_with_seed.is_none()
    }
}

fn all_patterns(n: usize, e: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, e));
    let mut rows: Vec<usize> = (0..e).collect();
    loop {
        out.push(rows.clone());
        if !next_combination(&mut rows, n) {
            return out;
        }
    }
}

/// Check every erasure pattern of `1..=max_erasures` nodes. Codes longer
/// than [`EXHAUSTIVE_MAX_N`] are sampled with `seed` instead.
pub fn verify_fault_tolerance(
    code: &Code,
    max_erasures: usize,
    seed: u64,
) -> Result<FaultToleranceReport, RepairError> {
    let n = code.params().n();
    let max = n;
    if max_erasures > max {
        return Err(RepairError::TooManyErasures {
            asked: max_erasures,
            max,
        });
    }
    let exhaustive = n <= EXHAUSTIVE_MAX_N;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut patterns = Vec::new();
    for e in 1..=max_erasures {
        if exhaustive || binomial(n, e) <= SAMPLES_PER_SIZE {
            patterns.extend(all_patterns(n, e));
        } else {
            for _ in 0..SAMPLES_PER_SIZE {
                let mut p = sample(&mut rng, n, e).into_vec();
                p.sort_unstable();
                patterns.push(p);
            }
        }
    }
    let failing: Vec<Vec<usize>> = patterns
        .par_iter()
        .filter(|p| !is_decodable(code, p))
        .cloned()
        .collect();
    Ok(FaultToleranceReport {
        max_erasures,
        patterns_checked: patterns.len(),
        failing,
        sampled_with_seed: (!exhaustive).then_some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;
    use crate::model::CodeParams;
    use rand::rngs::StdRng;

    fn code(n: usize, k: usize, n_a: usize, tau: usize) -> Code {
        Code::new(CodeParams::from_lengths(n, k, n_a, tau, FieldSpec::default()).unwrap()).unwrap()
    }

    fn random_array(code: &Code, seed: u64) -> CodeArray {
        let mut rng = StdRng::seed_from_u64(seed);
        code.encode(&DataBlock::random(
            code.params().k(),
            code.params().field(),
            &mut rng,
        ))
    }

    /// Stacked `k²`-unknown system: identity rows for surviving data, one
    /// row per surviving parity. Used only as an oracle.
    fn full_rank(code: &Code, erased: &[usize]) -> usize {
        let k = code.params().k();
        let mut entries = Vec::new();
        let mut rows = 0;
        for i in 0..k {
            for j in 0..k {
                if !erased.contains(&j) {
                    let mut r = vec![FieldElement::ZERO; k * k];
                    r[i * k + j] = FieldElement::ONE;
                    entries.extend(r);
                    rows += 1;
                }
            }
        }
        for eq in code.equations() {
            if !erased.contains(&eq.target().col) {
                let mut r = vec![FieldElement::ZERO; k * k];
                for &(p, c) in eq.terms() {
                    r[p.row * k + p.col] = c;
                }
                entries.extend(r);
                rows += 1;
            }
        }
        FieldMatrix::from_rows(rows, k * k, entries).rank(code.field())
    }

    #[test]
    fn full_code_repair_reads_nine() {
        let c = code(10, 5, 7, 1);
        let array = random_array(&c, 42);
        for j in 0..5 {
            let mut src = ErasedArray::new(&array, [j]);
            let (col, report) = repair_data_node(&c, &mut src, j).unwrap();
            assert_eq!(col, array.column(j));
            assert_eq!(report.read_count(), 9, "node {j}");
            assert!(report.fallback.is_empty());
            let unique: BTreeSet<_> = report.reads.iter().collect();
            assert_eq!(unique.len(), report.reads.len());
            assert!(report.reads.iter().all(|p| p.col != j));
            assert_eq!(report.recovered.len(), 5);
        }
    }

    #[test]
    fn class_a_only_repair() {
        let c = code(7, 5, 7, 1);
        let array = random_array(&c, 9);
        for j in 0..5 {
            let mut src = ErasedArray::new(&array, [j]);
            let (col, report) = repair_data_node(&c, &mut src, j).unwrap();
            assert_eq!(col, array.column(j));
            // the first 6 reads recover tau+1 = 2 symbols
            assert_eq!(report.reads[..6].len(), 6);
            assert_eq!(report.reads[5], SymbolPos::new(j, 6));
            assert_eq!(report.fallback.len(), 3);
            // each fallback row costs its k-1 data symbols and one parity
            assert_eq!(report.read_count(), 6 + 3 * 5);
        }
    }

    #[test]
    fn read_pattern_is_data_independent() {
        let c = code(10, 5, 7, 1);
        let zero = c.encode(&DataBlock::zeros(5));
        let rand = random_array(&c, 3);
        for j in 0..5 {
            let (z, rz) = repair_data_node(&c, &mut ErasedArray::new(&zero, [j]), j).unwrap();
            let (_, rr) = repair_data_node(&c, &mut ErasedArray::new(&rand, [j]), j).unwrap();
            assert!(z.iter().all(|x| x.is_zero()));
            assert_eq!(rz.reads, rr.reads);
            assert_eq!(rz.field_ops, rr.field_ops);
        }
    }

    #[test]
    fn repair_ops_stay_below_closed_form() {
        let c = code(10, 5, 7, 1);
        let array = random_array(&c, 4);
        let (_, r) = repair_data_node(&c, &mut ErasedArray::new(&array, [2]), 2).unwrap();
        // k + tau·k multiplications; (k-1) + tau·k + 3 additions
        assert_eq!(r.field_ops, OpCount { mul: 10, add: 12 });
        assert!(r.field_ops.weighted(8) <= 784);
    }

    #[test]
    fn rejects_wrong_failure_shapes() {
        let c = code(10, 5, 7, 1);
        let array = random_array(&c, 1);
        assert_eq!(
            repair_data_node(&c, &mut ErasedArray::new(&array, [1, 2]), 1),
            Err(RepairError::NotSingleDataFailure(vec![1, 2]))
        );
        assert_eq!(
            repair_data_node(&c, &mut ErasedArray::new(&array, [7]), 7),
            Err(RepairError::NotSingleDataFailure(vec![7]))
        );
        assert_eq!(
            repair_parity_node(&c, &mut ErasedArray::new(&array, [2]), 2),
            Err(RepairError::NotParityNode(2))
        );
    }

    #[test]
    fn parity_reencode() {
        let c = code(10, 5, 7, 1);
        let array = random_array(&c, 8);
        for col in [5, 9] {
            let (got, report) =
                repair_parity_node(&c, &mut ErasedArray::new(&array, [col]), col).unwrap();
            assert_eq!(got, array.column(col));
            assert!(report.read_count() <= 25);
        }
        let (_, report) = repair_parity_node(&c, &mut ErasedArray::new(&array, [5]), 5).unwrap();
        assert_eq!(report.read_count(), 25);
    }

    #[test]
    fn generic_decoder_agrees_with_schedule() {
        let c = code(10, 5, 7, 1);
        let array = random_array(&c, 77);
        for j in 0..5 {
            let out = decode_erasures(&c, &mut ErasedArray::new(&array, [j]), &[j]).unwrap();
            let (col, _) = repair_data_node(&c, &mut ErasedArray::new(&array, [j]), j).unwrap();
            assert_eq!(out.data, array.data_block());
            assert_eq!(out.data.column(j), col);
        }
    }

    #[test]
    fn class_a_code_corrects_any_two() {
        let c = code(7, 5, 7, 1);
        let array = random_array(&c, 5);
        let mut n = 0;
        for p in all_patterns(7, 2) {
            let out = decode_erasures(&c, &mut ErasedArray::new(&array, p.clone()), &p).unwrap();
            assert_eq!(out.data, array.data_block());
            n += 1;
        }
        assert_eq!(n, 21);
        let report = verify_fault_tolerance(&c, 2, 0).unwrap();
        assert!(report.pass() && report.exhaustive());
        assert_eq!(report.patterns_checked, 7 + 21);
        let three = verify_fault_tolerance(&c, 3, 0).unwrap();
        assert!(!three.pass());
    }

    #[test]
    fn full_code_tolerance_and_limits() {
        let c = code(10, 5, 7, 1);
        let two = verify_fault_tolerance(&c, 2, 0).unwrap();
        assert!(two.pass());
        assert_eq!(two.patterns_checked, 55);
        let four = verify_fault_tolerance(&c, 4, 0).unwrap();
        assert!(four.failing.iter().any(|p| p.len() == 4));
        let array = random_array(&c, 2);
        let bad = four.failing.iter().find(|p| p.len() == 4).unwrap().clone();
        assert_eq!(
            decode_erasures(&c, &mut ErasedArray::new(&array, bad.clone()), &bad),
            Err(RepairError::Undecodable(bad))
        );
        assert_eq!(
            verify_fault_tolerance(&c, 11, 0),
            Err(RepairError::TooManyErasures { asked: 11, max: 10 })
        );
    }

    #[test]
    fn decodability_matches_full_rank_oracle() {
        let c = code(10, 5, 7, 1);
        for e in 1..=4 {
            for p in all_patterns(10, e) {
                assert_eq!(is_decodable(&c, &p), full_rank(&c, &p) == 25, "{p:?}");
            }
        }
    }

    #[test]
    fn multi_failure_repair_restores_all_columns() {
        let c = code(10, 5, 7, 1);
        let array = random_array(&c, 12);
        let (cols, report) = repair(&c, &mut ErasedArray::new(&array, [0, 6])).unwrap();
        assert_eq!(report.kind, RepairKind::GenericDecode);
        for (j, col) in cols {
            assert_eq!(col, array.column(j));
        }
    }

    #[test]
    fn punctured_repair_uses_remaining_parities() {
        let full = code(10, 5, 7, 1);
        let array = random_array(&full, 31);
        let mut cur = full.clone();
        let mut counts = Vec::new();
        loop {
            let n = cur.params().n();
            let sub = {
                let mut a = CodeArray::zeros(5, n);
                for j in 0..n {
                    a.set_column(j, &array.column(j));
                }
                a
            };
            let (col, report) =
                repair_data_node(&cur, &mut ErasedArray::new(&sub, [0]), 0).unwrap();
            assert_eq!(col, array.column(0));
            counts.push(report.read_count());
            match cur.punctured() {
                Some(p) => cur = p,
                None => break,
            }
        }
        assert_eq!(counts.first(), Some(&9));
        assert_eq!(counts.last(), Some(&21));
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }
}
