//! File-per-node storage simulator.
//!
//! A store directory holds `manifest.json` and one `node_NNN.bin` per node.
//! The input is packed MSB-first into `w`-bit symbols and cut into stripes
//! of `k²` symbols; stripe symbol `s` lands in node `s / k`, row `s % k`.
//! Each node file is the concatenation of its `k`-symbol columns, one per
//! stripe, with every symbol stored big-endian in `ceil(w/8)` bytes.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class_a::{class_a_equations, MdsCoefficients};
use crate::class_b::{ClassBPlan, ReadCostMatrix};
use crate::code::{Code, CodeError};
use crate::gf::{Field, FieldElement, OpCount};
use crate::linalg::FieldMatrix;
use crate::metrics::bandwidth_from_reads;
use crate::model::{CodeParams, DataBlock, ParityEquation, SymbolPos};
use crate::repair::{self, RepairError, RepairKind, RepairReport, SourceError, SymbolSource};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const ENCODE_BATCH: usize = 256;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported manifest version {0}")]
    Version(u32),
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("a store already exists at {0}")]
    Exists(PathBuf),
    #[error("no data has been ingested")]
    NotIngested,
    #[error("node {index} out of range 0..{n}")]
    NoSuchNode { index: usize, n: usize },
    #[error("node {0} has already failed")]
    AlreadyFailed(usize),
    #[error("nodes {0:?} are missing; repair first")]
    NodesMissing(Vec<usize>),
    #[error("node {node} holds {len} bytes, expected {expected}")]
    Corrupt {
        node: usize,
        len: u64,
        expected: u64,
    },
    #[error("the code has no Class B node left to remove")]
    NothingToPuncture,
    #[error(transparent)]
    Repair(#[from] RepairError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Self-contained code description plus the ingested file's shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub params: CodeParams,
    /// Row `l`: `alpha(l, j)` for `j` in `k..n_A`, hex, big-endian symbols.
    pub coefficients: Vec<String>,
    pub class_a: Vec<ParityEquation>,
    pub class_b: Vec<Vec<ParityEquation>>,
    /// `(data symbol, parity that repairs it)`.
    pub designated: Vec<(SymbolPos, SymbolPos)>,
    pub read_costs: ReadCostMatrix,
    pub original_len: u64,
    pub stripes: u64,
}

impl Manifest {
    pub fn from_code(code: &Code, original_len: u64, stripes: u64) -> Self {
        let params = *code.params();
        let sb = params.field().symbol_bytes();
        let coefficients = (0..params.k())
            .map(|l| {
                let mut bytes = Vec::new();
                for j in params.k()..params.n_a() {
                    push_symbol(&mut bytes, code.coefficients().get(l, j), sb);
                }
                hex::encode(bytes)
            })
            .collect();
        Self {
            version: MANIFEST_VERSION,
            params,
            coefficients,
            class_a: code.class_a_equations().to_vec(),
            class_b: code.plan().nodes().to_vec(),
            designated: code.plan().designated_map(&params).into_iter().collect(),
            read_costs: code.plan().read_costs().clone(),
            original_len,
            stripes,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.version != MANIFEST_VERSION {
            return Err(StoreError::Version(m.version));
        }
        Ok(m)
    }

    /// Rebuild the code, checking that every stored piece is consistent.
    pub fn code(&self) -> Result<Code, StoreError> {
        let params = self.params;
        let k = params.k();
        let field = Field::new(params.field());
        let sb = params.field().symbol_bytes();
        let width = params.n_a() - k;
        if self.coefficients.len() != k {
            return Err(StoreError::Malformed("coefficient row count".into()));
        }
        let mut entries = Vec::with_capacity(k * width);
        for (l, row) in self.coefficients.iter().enumerate() {
            let bytes = hex::decode(row)
                .map_err(|e| StoreError::Malformed(format!("coefficient row {l}: {e}")))?;
            if bytes.len() != width * sb {
                return Err(StoreError::Malformed(format!("coefficient row {l} length")));
            }
            for chunk in bytes.chunks(sb) {
                let v = chunk.iter().fold(0u32, |acc, &b| acc << 8 | b as u32);
                entries.push(
                    field
                        .element(v)
                        .map_err(|e| StoreError::Malformed(format!("coefficient row {l}: {e}")))?,
                );
            }
        }
        let coeffs = MdsCoefficients::from_matrix(
            k,
            params.n_a(),
            FieldMatrix::from_rows(k, width, entries),
        );
        if self.class_a != class_a_equations(&params, &coeffs) {
            return Err(StoreError::Malformed(
                "Class A equations disagree with the coefficients".into(),
            ));
        }
        for eq in self.class_b.iter().flatten() {
            let checked = ParityEquation::new(k, eq.target(), eq.terms().to_vec())
                .map_err(|e| StoreError::Malformed(format!("{}: {e}", eq.target())))?;
            if &checked != eq {
                return Err(StoreError::Malformed(format!("{}", eq.target())));
            }
        }
        let plan = ClassBPlan::from_parts(self.class_b.clone(), self.read_costs.clone());
        let code = Code::from_parts(params, coeffs, self.class_a.clone(), plan)?;
        let designated: Vec<_> = code.plan().designated_map(&params).into_iter().collect();
        if designated != self.designated {
            return Err(StoreError::Malformed(
                "designated parities disagree with the Class B equations".into(),
            ));
        }
        Ok(code)
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()).map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))
    }
}

fn push_symbol(out: &mut Vec<u8>, v: FieldElement, sb: usize) {
    let v = v.value();
    if sb == 2 {
        out.push((v >> 8) as u8);
    }
    out.push(v as u8);
}

/// Split bytes into `width`-bit symbols, MSB first, zero-filling the tail.
pub fn pack_symbols(bytes: &[u8], width: u8) -> Vec<u16> {
    let w = width as u32;
    let count = (bytes.len() * 8).div_ceil(w as usize);
    let mut out = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut bits = 0u32;
    for &b in bytes {
        acc = acc << 8 | b as u32;
        bits += 8;
        while bits >= w {
            bits -= w;
            out.push((acc >> bits) as u16 & mask(w));
        }
        acc &= (1 << bits) - 1;
    }
    if bits > 0 {
        out.push((acc << (w - bits)) as u16 & mask(w));
    }
    out
}

/// Inverse of [`pack_symbols`], keeping the first `len` bytes.
pub fn unpack_symbols(symbols: &[u16], width: u8, len: usize) -> Vec<u8> {
    let w = width as u32;
    let mut out = Vec::with_capacity(len);
    let mut acc: u32 = 0;
    let mut bits = 0u32;
    for &s in symbols {
        acc = acc << w | s as u32;
        bits += w;
        while bits >= 8 && out.len() < len {
            bits -= 8;
            out.push((acc >> bits) as u8);
        }
        acc &= (1 << bits) - 1;
        if out.len() == len {
            break;
        }
    }
    out
}

fn mask(w: u32) -> u16 {
    ((1u32 << w) - 1) as u16
}

#[cfg(unix)]
fn read_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.read_exact_at(buf, offset)
}

#[cfg(windows)]
fn read_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            n => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
        }
    }
    Ok(())
}

/// One stripe of a store, read symbol by symbol and metered.
struct StripeReader<'a> {
    files: &'a [Option<File>],
    field: &'a Field,
    stripe: u64,
    k: u64,
    sb: usize,
    meter: &'a AtomicU64,
}

impl SymbolSource for StripeReader<'_> {
    fn available(&self, col: usize) -> bool {
        matches!(self.files.get(col), Some(Some(_)))
    }

    fn read_symbol(&mut self, pos: SymbolPos) -> Result<FieldElement, SourceError> {
        let file = match self.files.get(pos.col) {
            Some(Some(f)) => f,
            _ => return Err(SourceError::Unavailable(pos.col)),
        };
        let offset = (self.stripe * self.k + pos.row as u64) * self.sb as u64;
        let mut buf = [0u8; 2];
        let buf = &mut buf[..self.sb];
        read_at(file, buf, offset).map_err(|e| SourceError::Io {
            pos,
            msg: e.to_string(),
        })?;
        self.meter.fetch_add(1, Ordering::Relaxed);
        let v = buf.iter().fold(0u32, |acc, &b| acc << 8 | b as u32);
        self.field.element(v).map_err(|e| SourceError::Io {
            pos,
            msg: e.to_string(),
        })
    }
}

/// Totals of a store repair across all stripes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoreRepairReport {
    pub failed: Vec<usize>,
    pub kind: RepairKind,
    pub stripes: u64,
    pub reads_per_stripe: usize,
    pub total_reads: u64,
    /// Symbols actually fetched from node files.
    pub metered_reads: u64,
    /// Reads per stripe over node size.
    pub lambda: Ratio<u64>,
    pub field_ops: OpCount,
    pub fallback_per_stripe: usize,
    /// Every stripe read the same positions.
    pub data_independent: bool,
    pub first_stripe: RepairReport,
}

#[derive(Debug)]
pub struct NodeStore {
    dir: PathBuf,
    manifest: Manifest,
    code: Code,
}

impl NodeStore {
    /// Write a manifest for `params` into `dir`; no data yet.
    pub fn create(dir: &Path, params: CodeParams) -> Result<Self, StoreError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        if manifest_path.exists() {
            return Err(StoreError::Exists(dir.to_path_buf()));
        }
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let code = Code::new(params)?;
        let manifest = Manifest::from_code(&code, 0, 0);
        manifest.save(&manifest_path)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            code,
        })
    }

    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let manifest = Manifest::load(&dir.join(MANIFEST_FILE))?;
        let code = manifest.code()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            code,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn code(&self) -> &Code {
        &self.code
    }

    pub fn node_path(&self, j: usize) -> PathBuf {
        self.dir.join(format!("node_{j:03}.bin"))
    }

    pub fn failed_path(&self, j: usize) -> PathBuf {
        self.dir.join(format!("node_{j:03}.failed"))
    }

    fn node_len(&self) -> u64 {
        self.manifest.stripes * self.code.params().k() as u64 * self.symbol_bytes() as u64
    }

    fn symbol_bytes(&self) -> usize {
        self.code.params().field().symbol_bytes()
    }

    fn check_index(&self, j: usize) -> Result<(), StoreError> {
        let n = self.code.params().n();
        if j >= n {
            return Err(StoreError::NoSuchNode { index: j, n });
        }
        Ok(())
    }

    /// Encode `data` into fresh node files, replacing any previous content.
    pub fn ingest(&mut self, data: &[u8]) -> Result<(), StoreError> {
        let params = *self.code.params();
        let k = params.k();
        let width = params.field().width();
        let field = Field::new(params.field());
        let symbols = pack_symbols(data, width);
        let stripes = symbols.len().div_ceil(k * k).max(1);
        let sb = self.symbol_bytes();

        let mut writers = Vec::with_capacity(params.n());
        for j in 0..params.n() {
            let _ = fs::remove_file(self.failed_path(j));
            let path = self.node_path(j);
            let f = File::create(&path).map_err(io_err(&path))?;
            writers.push((path, BufWriter::new(f)));
        }
        let starts: Vec<usize> = (0..stripes).collect();
        for batch in starts.chunks(ENCODE_BATCH) {
            let arrays: Vec<_> = batch
                .par_iter()
                .map(|&s| {
                    let mut block = DataBlock::zeros(k);
                    let base = s * k * k;
                    for t in 0..k * k {
                        if let Some(&v) = symbols.get(base + t) {
                            let v = field
                                .element(v as u32)
                                .expect("packed symbol fits the field");
                            block.set(SymbolPos::new(t % k, t / k), v);
                        }
                    }
                    self.code.encode(&block)
                })
                .collect();
            for array in arrays {
                for (j, (path, w)) in writers.iter_mut().enumerate() {
                    let mut bytes = Vec::with_capacity(k * sb);
                    for v in array.column(j) {
                        push_symbol(&mut bytes, v, sb);
                    }
                    w.write_all(&bytes).map_err(io_err(path))?;
                }
            }
        }
        for (path, mut w) in writers {
            w.flush().map_err(io_err(&path))?;
        }
        self.manifest.original_len = data.len() as u64;
        self.manifest.stripes = stripes as u64;
        self.manifest.save(&self.dir.join(MANIFEST_FILE))
    }

    pub fn ingest_file(&mut self, input: &Path) -> Result<(), StoreError> {
        let data = fs::read(input).map_err(io_err(input))?;
        self.ingest(&data)
    }

    /// Nodes whose file is absent.
    pub fn failed_nodes(&self) -> Vec<usize> {
        (0..self.code.params().n())
            .filter(|&j| !self.node_path(j).exists())
            .collect()
    }

    /// Make node `j` unreadable by renaming its file.
    pub fn fail(&mut self, j: usize) -> Result<(), StoreError> {
        self.check_index(j)?;
        if self.manifest.stripes == 0 {
            return Err(StoreError::NotIngested);
        }
        let path = self.node_path(j);
        if !path.exists() {
            return Err(StoreError::AlreadyFailed(j));
        }
        let failed = self.failed_path(j);
        fs::rename(&path, &failed).map_err(io_err(&path))
    }

    fn open_nodes(&self) -> Result<Vec<Option<File>>, StoreError> {
        let expected = self.node_len();
        (0..self.code.params().n())
            .map(|j| {
                let path = self.node_path(j);
                if !path.exists() {
                    return Ok(None);
                }
                let f = File::open(&path).map_err(io_err(&path))?;
                let len = f.metadata().map_err(io_err(&path))?.len();
                if len != expected {
                    return Err(StoreError::Corrupt {
                        node: j,
                        len,
                        expected,
                    });
                }
                Ok(Some(f))
            })
            .collect()
    }

    /// Restore every failed node file.
    pub fn repair(&mut self) -> Result<StoreRepairReport, StoreError> {
        if self.manifest.stripes == 0 {
            return Err(StoreError::NotIngested);
        }
        let params = *self.code.params();
        let k = params.k();
        let sb = self.symbol_bytes();
        let failed = self.failed_nodes();
        let files = self.open_nodes()?;
        let meter = AtomicU64::new(0);
        let field = self.code.field();

        let results: Vec<_> = (0..self.manifest.stripes)
            .into_par_iter()
            .map(|stripe| {
                let mut reader = StripeReader {
                    files: &files,
                    field,
                    stripe,
                    k: k as u64,
                    sb,
                    meter: &meter,
                };
                repair::repair(&self.code, &mut reader)
            })
            .collect::<Result<_, _>>()?;

        let mut buffers: Vec<Vec<u8>> =
            vec![Vec::with_capacity(self.node_len() as usize); failed.len()];
        let mut total_reads = 0u64;
        let mut ops = OpCount::default();
        let first = results[0].1.clone();
        let mut data_independent = true;
        for (columns, report) in &results {
            total_reads += report.read_count() as u64;
            ops += report.field_ops;
            data_independent &= report.reads == first.reads;
            for (slot, (col, values)) in columns.iter().enumerate() {
                debug_assert_eq!(*col, failed[slot]);
                for &v in values {
                    push_symbol(&mut buffers[slot], v, sb);
                }
            }
        }
        for (&j, bytes) in failed.iter().zip(&buffers) {
            let path = self.node_path(j);
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
            fs::rename(&tmp, &path).map_err(io_err(&path))?;
            let _ = fs::remove_file(self.failed_path(j));
        }
        Ok(StoreRepairReport {
            failed,
            kind: first.kind,
            stripes: self.manifest.stripes,
            reads_per_stripe: first.read_count(),
            total_reads,
            metered_reads: meter.into_inner(),
            lambda: bandwidth_from_reads(first.read_count() as u64, k as u64),
            field_ops: ops,
            fallback_per_stripe: first.fallback.len(),
            data_independent,
            first_stripe: first,
        })
    }

    /// Reassemble the original bytes from the data nodes.
    pub fn extract(&self) -> Result<Vec<u8>, StoreError> {
        if self.manifest.stripes == 0 {
            return Err(StoreError::NotIngested);
        }
        let k = self.code.params().k();
        let missing: Vec<usize> = self.failed_nodes().into_iter().filter(|&j| j < k).collect();
        if !missing.is_empty() {
            return Err(StoreError::NodesMissing(missing));
        }
        let sb = self.symbol_bytes();
        let expected = self.node_len();
        let mut nodes = Vec::with_capacity(k);
        for j in 0..k {
            let path = self.node_path(j);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            if bytes.len() as u64 != expected {
                return Err(StoreError::Corrupt {
                    node: j,
                    len: bytes.len() as u64,
                    expected,
                });
            }
            nodes.push(bytes);
        }
        let column = k * sb;
        let mut symbols = Vec::with_capacity(self.manifest.stripes as usize * k * k);
        for s in 0..self.manifest.stripes as usize {
            for node in &nodes {
                for chunk in node[s * column..(s + 1) * column].chunks(sb) {
                    symbols.push(chunk.iter().fold(0u16, |acc, &b| acc << 8 | b as u16));
                }
            }
        }
        let width = self.code.params().field().width();
        Ok(unpack_symbols(
            &symbols,
            width,
            self.manifest.original_len as usize,
        ))
    }

    /// Drop the highest-index Class B node and its file.
    pub fn puncture(&mut self) -> Result<(), StoreError> {
        let last = self.code.params().n() - 1;
        let code = self.code.punctured().ok_or(StoreError::NothingToPuncture)?;
        let manifest =
            Manifest::from_code(&code, self.manifest.original_len, self.manifest.stripes);
        manifest.save(&self.dir.join(MANIFEST_FILE))?;
        for path in [self.node_path(last), self.failed_path(last)] {
            if path.exists() {
                fs::remove_file(&path).map_err(io_err(&path))?;
            }
        }
        self.code = code;
        self.manifest = manifest;
        Ok(())
    }
}
