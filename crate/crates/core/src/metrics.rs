//! Repair bandwidth, closed-form complexity estimates, and baseline
//! comparison rows.
//!
//! Complexities are in bit-operation units: an addition in GF(2^w) costs
//! `w` and a multiplication `w²`. Big-O expressions are evaluated with
//! constant 1.

use std::fmt;
use std::io::{self, Write};

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::gf::OpCount;
use crate::model::CodeParams;
use crate::repair::RepairReport;

/// Note attached to [`repair_complexity`]: the last term is evaluated as
/// printed, `(k-tau-2)² w`, though counting `k-tau-1` symbols at
/// `k-tau-2` additions each gives `(k-tau-1)(k-tau-2) w`.
pub const REPAIR_COMPLEXITY_NOTE: &str =
    "Class B term evaluated as (k-tau-2)^2 w; a per-symbol count of k-tau-2 additions over k-tau-1 symbols would give (k-tau-1)(k-tau-2) w";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("baseline {scheme} needs parameter `{symbol}`")]
    MissingParameter {
        scheme: Scheme,
        symbol: &'static str,
    },
    #[error("baseline {scheme}: {reason}")]
    InvalidParameter { scheme: Scheme, reason: String },
}

/// Repair reads over node size: `|reads| / k`.
pub fn normalized_bandwidth(report: &RepairReport, params: &CodeParams) -> Ratio<u64> {
    bandwidth_from_reads(report.read_count() as u64, params.k() as u64)
}

pub fn bandwidth_from_reads(reads: u64, k: u64) -> Ratio<u64> {
    Ratio::new(reads, k)
}

/// `(k + tau + (k-tau-1)²) / k`; measured bandwidth with every Class B node
/// present stays strictly below this.
pub fn lambda_upper_bound(params: &CodeParams) -> Ratio<u64> {
    let k = params.k() as u64;
    let tau = params.tau() as u64;
    let q = k - tau - 1;
    Ratio::new(k + tau + q * q, k)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityTerm {
    pub label: String,
    pub bit_additions: u64,
    pub bit_mult_units: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityEstimate {
    pub formula_label: String,
    pub bit_additions: u64,
    pub bit_mult_units: u64,
    pub terms: Vec<ComplexityTerm>,
}

impl ComplexityEstimate {
    fn from_terms(formula_label: &str, terms: Vec<ComplexityTerm>) -> Self {
        Self {
            formula_label: formula_label.to_string(),
            bit_additions: terms.iter().map(|t| t.bit_additions).sum(),
            bit_mult_units: terms.iter().map(|t| t.bit_mult_units).sum(),
            terms,
        }
    }

    pub fn total(&self) -> u64 {
        self.bit_additions + self.bit_mult_units
    }
}

fn term(label: &str, adds: u64, muls: u64, w: u64) -> ComplexityTerm {
    ComplexityTerm {
        label: label.to_string(),
        bit_additions: adds * w,
        bit_mult_units: muls * w * w,
    }
}

/// Closed-form cost of repairing one failed data node.
pub fn repair_complexity(params: &CodeParams) -> ComplexityEstimate {
    let k = params.k() as u64;
    let tau = params.tau() as u64;
    let w = params.field().width() as u64;
    let b = k.saturating_sub(tau + 2);
    ComplexityEstimate::from_terms(
        "C_R = (k-1)w + k w^2 + tau k (w + w^2) + (k-tau-2)^2 w",
        vec![
            term("Class A: first symbol", k - 1, k, w),
            term("Class A: piggybacks", tau * k, tau * k, w),
            term("Class B", b * b, 0, w),
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncodingComplexity {
    pub class_a: ComplexityEstimate,
    pub class_b: ComplexityEstimate,
    pub total: ComplexityEstimate,
}

/// Per-row encoding cost of the Class A and Class B parities.
pub fn encoding_complexity(params: &CodeParams) -> EncodingComplexity {
    let k = params.k() as u64;
    let tau = params.tau() as u64;
    let w = params.field().width() as u64;
    let m = (params.n_a() - params.k()) as u64;
    let class_a = ComplexityEstimate::from_terms(
        "C_A = (n_A-k)(k w^2 + (k-1) w) + tau w",
        vec![
            term("MDS parities", m * (k - 1), m * k, w),
            term("piggybacks", tau, 0, w),
        ],
    );
    let adds: u64 = (1..=params.class_b_nodes() as u64)
        .map(|i| (k - tau - 1).saturating_sub(i))
        .sum();
    let class_b = ComplexityEstimate::from_terms(
        "C_B = sum_{i=1}^{n-n_A} (k-tau-1-i) w",
        vec![term("Class B parities", adds, 0, w)],
    );
    let mut terms = class_a.terms.clone();
    terms.extend(class_b.terms.clone());
    let total = ComplexityEstimate::from_terms("C_E = C_A + C_B", terms);
    EncodingComplexity {
        class_a,
        class_b,
        total,
    }
}

/// Measured operations in bit-operation units.
pub fn measured_units(ops: OpCount, width: u8) -> u64 {
    ops.weighted(width)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Mds,
    Lrc,
    Mdr,
    Zigzag,
    Piggyback,
    Proposed,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Mds,
        Scheme::Lrc,
        Scheme::Mdr,
        Scheme::Zigzag,
        Scheme::Piggyback,
        Scheme::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Mds => "MDS",
            Scheme::Lrc => "LRC",
            Scheme::Mdr => "MDR",
            Scheme::Zigzag => "Zigzag",
            Scheme::Piggyback => "Piggyback",
            Scheme::Proposed => "Proposed",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Exact,
    AtLeast,
    Below,
}

/// One table cell: a number, possibly a bound, or nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cell {
    Value {
        value: Ratio<u64>,
        relation: Relation,
    },
    NotSpecified,
}

impl Cell {
    fn exact(v: Ratio<u64>) -> Self {
        Cell::Value {
            value: v,
            relation: Relation::Exact,
        }
    }

    fn int(v: u64) -> Self {
        Self::exact(Ratio::from_integer(v))
    }

    pub fn value(&self) -> Option<Ratio<u64>> {
        match self {
            Cell::Value { value, .. } => Some(*value),
            Cell::NotSpecified => None,
        }
    }

    /// Plain decimal for CSV; empty when not specified.
    pub fn decimal(&self) -> String {
        self.value().map(ratio_decimal).unwrap_or_default()
    }
}

pub fn ratio_decimal(r: Ratio<u64>) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let s = format!("{:.6}", *r.numer() as f64 / *r.denom() as f64);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::NotSpecified => f.write_str("not specified"),
            Cell::Value { value, relation } => {
                let prefix = match relation {
                    Relation::Exact => "",
                    Relation::AtLeast => ">=",
                    Relation::Below => "<",
                };
                write!(f, "{prefix}{}", ratio_decimal(*value))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaselineRow {
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    /// Symbols per node; can be huge, hence `u128`.
    pub beta: Option<u128>,
    pub fault_tolerance: Cell,
    pub lambda: Cell,
    pub repair_complexity: Cell,
    pub encoding_complexity: Cell,
}

/// Inputs some baselines need beyond `(n, k)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BaselineExtras {
    pub r: Option<u64>,
    pub t: Option<u64>,
    pub t_r: Option<u64>,
    pub ell: Option<u64>,
}

fn need(scheme: Scheme, v: Option<u64>, symbol: &'static str) -> Result<u64, MetricsError> {
    v.ok_or(MetricsError::MissingParameter { scheme, symbol })
}

/// Evaluate one baseline's formulas for the code size of `params`.
pub fn baseline_row(
    scheme: Scheme,
    params: &CodeParams,
    extras: &BaselineExtras,
) -> Result<BaselineRow, MetricsError> {
    let n = params.n() as u64;
    let k = params.k() as u64;
    let w = params.field().width() as u64;
    let mds_repair = (k - 1) * w + k * w * w;
    let mds_encode = (n - k) * ((k - 1) * w) + k * w * w;
    let row = |beta, f, lambda, rc, ec| BaselineRow {
        scheme,
        n: params.n(),
        k: params.k(),
        beta,
        fault_tolerance: f,
        lambda,
        repair_complexity: rc,
        encoding_complexity: ec,
    };
    Ok(match scheme {
        Scheme::Mds => row(
            Some(1),
            Cell::int(n - k),
            Cell::int(k),
            Cell::int(mds_repair),
            Cell::int(mds_encode),
        ),
        Scheme::Lrc => {
            let r = need(scheme, extras.r, "r")?;
            let groups = (n - k).checked_sub(r).filter(|&g| g > 0).ok_or_else(|| {
                MetricsError::InvalidParameter {
                    scheme,
                    reason: format!("n-k-r must be positive, got r = {r}"),
                }
            })?;
            let local = (k.div_ceil(groups) - 1) * w;
            row(
                Some(1),
                Cell::int(r + 1),
                Cell::exact(Ratio::new(k, groups)),
                Cell::int(local),
                Cell::int(r * mds_repair + groups * local),
            )
        }
        Scheme::Mdr => row(
            1u128.checked_shl(params.k() as u32),
            Cell::int(2),
            Cell::exact(Ratio::new(k + 1, 2)),
            Cell::int((k - 1) * w),
            Cell::int((k - 1) * w),
        ),
        Scheme::Zigzag => row(
            ((n - k) as u128).checked_pow(params.k() as u32 - 1),
            Cell::int(n - k),
            Cell::exact(Ratio::new(n - 1, n - k)),
            Cell::int(mds_repair),
            Cell::int(mds_encode),
        ),
        Scheme::Piggyback => {
            let t = need(scheme, extras.t, "t")? as i128;
            let t_r = need(scheme, extras.t_r, "t_r")? as i128;
            let ell = need(scheme, extras.ell, "ell")? as i128;
            let ki = k as i128;
            let num = (ki - t_r) * (ki + t) + t_r * (ki + t_r + ell - 2);
            let num = u64::try_from(num).map_err(|_| MetricsError::InvalidParameter {
                scheme,
                reason: "bandwidth numerator is negative".into(),
            })?;
            row(
                Some(2),
                Cell::int(1),
                Cell::exact(Ratio::new(num, 2 * k)),
                Cell::NotSpecified,
                Cell::NotSpecified,
            )
        }
        Scheme::Proposed => row(
            Some(k as u128),
            Cell::Value {
                value: Ratio::from_integer(params.fault_tolerance() as u64),
                relation: Relation::AtLeast,
            },
            Cell::Value {
                value: lambda_upper_bound(params),
                relation: Relation::Below,
            },
            Cell::exact(Ratio::new(repair_complexity(params).total(), k)),
            Cell::int(encoding_complexity(params).total.total()),
        ),
    })
}

/// Every baseline row; fails on the first missing extra.
pub fn baseline_table(
    params: &CodeParams,
    extras: &BaselineExtras,
) -> Result<Vec<BaselineRow>, MetricsError> {
    Scheme::ALL
        .iter()
        .map(|&s| baseline_row(s, params, extras))
        .collect()
}

pub const CSV_HEADER: &str = "scheme,n,k,f,lambda,repair_complexity,encoding_complexity";

/// A CSV record. Unspecified cells are left empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvRecord {
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub f: Cell,
    pub lambda: Cell,
    pub repair_complexity: Cell,
    pub encoding_complexity: Cell,
}

impl From<&BaselineRow> for CsvRecord {
    fn from(row: &BaselineRow) -> Self {
        Self {
            scheme: row.scheme.name().to_string(),
            n: row.n,
            k: row.k,
            f: row.fault_tolerance,
            lambda: row.lambda,
            repair_complexity: row.repair_complexity,
            encoding_complexity: row.encoding_complexity,
        }
    }
}

pub fn write_csv<W: Write>(mut out: W, records: &[CsvRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme,
            r.n,
            r.k,
            r.f.decimal(),
            r.lambda.decimal(),
            r.repair_complexity.decimal(),
            r.encoding_complexity.decimal()
        )?;
    }
    Ok(())
}
