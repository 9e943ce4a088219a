use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{rngs::StdRng, SeedableRng};

use pbrepair::code::Code;
use pbrepair::gf::FieldSpec;
use pbrepair::metrics::{
    self, baseline_row, encoding_complexity, lambda_upper_bound, measured_units, ratio_decimal,
    repair_complexity, BaselineExtras, Cell, CsvRecord, Relation, Scheme,
};
use pbrepair::model::{CodeParams, DataBlock};
use pbrepair::repair::{repair_data_node, verify_fault_tolerance, ErasedArray};
use pbrepair::store::NodeStore;

/// Piggybacked erasure-code storage simulator.
#[derive(Parser)]
#[command(name = "pbrepair", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// Code shape as n,k,nA,tau.
    #[arg(long, value_parser = parse_params)]
    params: Option<[usize; 4]>,
    /// Symbol width w of GF(2^w).
    #[arg(long, default_value_t = 8)]
    field_width: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Write a manifest for a new store.
    Create {
        store: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Encode a file into node files (creates the store if --params is given).
    Ingest {
        store: PathBuf,
        input: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Mark nodes as failed.
    Fail {
        store: PathBuf,
        #[arg(required = true)]
        nodes: Vec<usize>,
    },
    /// Rebuild every failed node.
    Repair {
        store: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write the stored file back out.
    Extract { store: PathBuf, output: PathBuf },
    /// Check that every erasure pattern up to a size decodes.
    Verify {
        store: Option<PathBuf>,
        #[command(flatten)]
        code: CodeArgs,
        /// Defaults to the guaranteed fault tolerance.
        #[arg(long)]
        max_erasures: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print repair and complexity metrics and baseline comparisons.
    Report {
        store: Option<PathBuf>,
        #[command(flatten)]
        code: CodeArgs,
        /// Also write the comparison as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// LRC local parity count.
        #[arg(long)]
        r: Option<u64>,
        /// Piggyback parameter t.
        #[arg(long)]
        t: Option<u64>,
        /// Piggyback parameter t_r.
        #[arg(long)]
        t_r: Option<u64>,
        /// Piggyback parameter l.
        #[arg(long)]
        ell: Option<u64>,
    },
    /// Remove the highest-index Class B node.
    Puncture { store: PathBuf },
}

fn parse_params(s: &str) -> Result<[usize; 4], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| "expected four values n,k,nA,tau".to_string())
}

impl CodeArgs {
    fn params(&self) -> Result<Option<CodeParams>> {
        let Some([n, k, n_a, tau]) = self.params else {
            return Ok(None);
        };
        let field = FieldSpec::with_width(self.field_width)?;
        Ok(Some(CodeParams::from_lengths(n, k, n_a, tau, field)?))
    }

    fn require(&self) -> Result<CodeParams> {
        self.params()?.context("--params n,k,nA,tau is required")
    }
}

/// A code from a store manifest or from --params.
fn load_code(store: Option<&Path>, args: &CodeArgs) -> Result<Code> {
    match (store, args.params()?) {
        (Some(_), Some(_)) => bail!("give either a store or --params, not both"),
        (Some(dir), None) => Ok(NodeStore::open(dir)?.code().clone()),
        (None, Some(p)) => Ok(Code::new(p)?),
        (None, None) => bail!("need a store directory or --params"),
    }
}

fn describe(code: &Code) -> String {
    let p = code.params();
    format!(
        "({},{}) code, n_A = {}, tau = {}, {} Class B node(s), GF(2^{})",
        p.n(),
        p.k(),
        p.n_a(),
        p.tau(),
        p.class_b_nodes(),
        p.field().width()
    )
}

/// Outcome of a command that can fail verification without erroring.
enum Outcome {
    Ok,
    VerificationFailed,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Create { store, code } => {
            let s = NodeStore::create(&store, code.require()?)?;
            println!("created {} at {}", describe(s.code()), store.display());
        }
        Command::Ingest { store, input, code } => {
            let mut s = match code.params()? {
                Some(p) => NodeStore::create(&store, p)?,
                None => NodeStore::open(&store)?,
            };
            s.ingest_file(&input)?;
            let m = s.manifest();
            println!(
                "ingested {} bytes as {} stripe(s) into {} node files",
                m.original_len,
                m.stripes,
                s.code().params().n()
            );
        }
        Command::Fail { store, nodes } => {
            let mut s = NodeStore::open(&store)?;
            for j in nodes {
                s.fail(j)?;
                println!("node {j} failed");
            }
        }
        Command::Repair { store, json } => {
            let mut s = NodeStore::open(&store)?;
            let r = s.repair()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else if r.failed.is_empty() {
                println!("nothing to repair");
            } else {
                println!("repaired nodes {:?} ({:?})", r.failed, r.kind);
                println!("stripes            {}", r.stripes);
                println!("reads per stripe   {}", r.reads_per_stripe);
                println!(
                    "total reads        {} (metered {})",
                    r.total_reads, r.metered_reads
                );
                println!("lambda             {}", ratio_decimal(r.lambda));
                println!(
                    "field ops          {} mul, {} add",
                    r.field_ops.mul, r.field_ops.add
                );
                if r.fallback_per_stripe > 0 {
                    println!("row fallbacks      {} per stripe", r.fallback_per_stripe);
                }
            }
        }
        Command::Extract { store, output } => {
            let s = NodeStore::open(&store)?;
            let data = s.extract()?;
            fs::write(&output, &data).with_context(|| output.display().to_string())?;
            println!("wrote {} bytes to {}", data.len(), output.display());
        }
        Command::Verify {
            store,
            code,
            max_erasures,
            seed,
        } => {
            let code = load_code(store.as_deref(), &code)?;
            let e = max_erasures.unwrap_or(code.params().fault_tolerance());
            let report = verify_fault_tolerance(&code, e, seed)?;
            println!("{}", describe(&code));
            println!(
                "checked {} erasure pattern(s) of 1..={} node(s){}",
                report.patterns_checked,
                e,
                match report.sampled_with_seed {
                    Some(s) => format!(", sampled with seed {s}"),
                    None => ", exhaustive".into(),
                }
            );
            if report.pass() {
                println!("PASS: every pattern decodes");
            } else {
                println!("FAIL: {} pattern(s) do not decode", report.failing.len());
                for p in &report.failing {
                    println!("  {p:?}");
                }
                return Ok(Outcome::VerificationFailed);
            }
        }
        Command::Report {
            store,
            code,
            csv,
            seed,
            r,
            t,
            t_r,
            ell,
        } => {
            let code = load_code(store.as_deref(), &code)?;
            let extras = BaselineExtras { r, t, t_r, ell };
            report(&code, &extras, csv.as_deref(), seed)?;
        }
        Command::Puncture { store } => {
            let mut s = NodeStore::open(&store)?;
            s.puncture()?;
            println!("now {}", describe(s.code()));
        }
    }
    Ok(Outcome::Ok)
}

fn report(code: &Code, extras: &BaselineExtras, csv: Option<&Path>, seed: u64) -> Result<()> {
    let p = *code.params();
    let k = p.k();
    let w = p.field().width();
    let data = DataBlock::random(k, p.field(), &mut StdRng::seed_from_u64(seed));
    let array = code.encode(&data);
    let mut worst_reads = 0;
    let mut worst_units = 0;
    for j in 0..k {
        let (_, r) = repair_data_node(code, &mut ErasedArray::new(&array, [j]), j)?;
        worst_reads = worst_reads.max(r.read_count());
        worst_units = worst_units.max(measured_units(r.field_ops, w));
    }
    let lambda = metrics::bandwidth_from_reads(worst_reads as u64, k as u64);
    let c_r = repair_complexity(&p);
    let enc = encoding_complexity(&p);

    println!("{}", describe(code));
    println!("fault tolerance      >= {}", p.fault_tolerance());
    println!(
        "lambda measured      {} ({} reads)",
        ratio_decimal(lambda),
        worst_reads
    );
    println!(
        "lambda bound         < {}",
        ratio_decimal(lambda_upper_bound(&p))
    );
    println!(
        "repair complexity    {} units by formula, {} measured",
        c_r.total(),
        worst_units
    );
    println!(
        "encoding per row     C_A = {}, C_B = {}, C_E = {} units",
        enc.class_a.total(),
        enc.class_b.total(),
        enc.total.total()
    );
    println!("note: {}", metrics::REPAIR_COMPLEXITY_NOTE);
    println!();
    println!(
        "{:<20} {:>8} {:>6} {:>10} {:>14} {:>14}",
        "scheme", "beta", "f", "lambda", "repair/symbol", "encode/row"
    );

    let mut records = Vec::new();
    for scheme in Scheme::ALL {
        match baseline_row(scheme, &p, extras) {
            Ok(row) => {
                println!(
                    "{:<20} {:>8} {:>6} {:>10} {:>14} {:>14}",
                    scheme.name(),
                    row.beta.map_or("overflow".into(), |b| b.to_string()),
                    row.fault_tolerance.to_string(),
                    row.lambda.to_string(),
                    row.repair_complexity.to_string(),
                    row.encoding_complexity.to_string()
                );
                records.push(CsvRecord::from(&row));
            }
            Err(e) => println!("{:<20} skipped: {e}", scheme.name()),
        }
    }
    let measured = CsvRecord {
        scheme: "Proposed (measured)".into(),
        n: p.n(),
        k,
        f: Cell::Value {
            value: (p.fault_tolerance() as u64).into(),
            relation: Relation::AtLeast,
        },
        lambda: Cell::Value {
            value: lambda,
            relation: Relation::Exact,
        },
        repair_complexity: Cell::Value {
            value: metrics::bandwidth_from_reads(worst_units, k as u64),
            relation: Relation::Exact,
        },
        encoding_complexity: Cell::Value {
            value: enc.total.total().into(),
            relation: Relation::Exact,
        },
    };
    println!(
        "{:<20} {:>8} {:>6} {:>10} {:>14} {:>14}",
        measured.scheme,
        k,
        measured.f.to_string(),
        measured.lambda.to_string(),
        measured.repair_complexity.to_string(),
        measured.encoding_complexity.to_string()
    );
    records.push(measured);

    if let Some(path) = csv {
        let mut buf = Vec::new();
        metrics::write_csv(&mut buf, &records)?;
        fs::write(path, buf).with_context(|| path.display().to_string())?;
        println!("\nwrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
