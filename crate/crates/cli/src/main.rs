//! `uclab`: build block families, analyse families, run the oracle grid and
//! the scaling sweep. All output is JSON, CSV or the family text format.
//!
//! Exit codes: 0 success, 1 check failure, 2 input error, 3 cap exceeded,
//! 4 internal inconsistency, 5 band failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use uclab_core::asymptotics::{
    power_of_two_targets, sweep, theta_band, write_sweep_csv, BandReport, Quantity,
    DEFAULT_SPREAD,
};
use uclab_core::construction::{
    build_block_family, exact_metrics, materialize, metrics_report, verify_bounds_with,
    BlockFamily, BlockParams, TChoice,
};
use uclab_core::metrics::{augmentation_report, reference_family, MetricsReport, ReferenceName};
use uclab_core::oracle::{check_grid_with, CellOutcome, Materializer};
use uclab_core::setfam::{parse_family, serialize_family, Family, DEFAULT_CAP};
use uclab_core::Error;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (family format 1)");

#[derive(Parser)]
#[command(name = "uclab", version = VERSION, about = "Union-closed families with small average overlap density")]
struct Cli {
    /// Worker threads for sweeps and pairwise AOD; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    workers: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a block family: implicit JSON, or the explicit family with --materialize.
    Construct {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        materialize: bool,
        #[command(flatten)]
        cap: CapArg,
        /// Write to FILE instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metrics of a family file, or exact metrics and bounds of a block family.
    Analyze(SourceArgs),
    /// Compare the structured block representation with brute-force closure.
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[command(flatten)]
        cap: CapArg,
        /// Drop one member from every materialised family (negative test).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Exact sweep over n_target = 2^FROM ..= 2^TO with the Θ band check.
    Sweep {
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        #[arg(long, default_value_t = DEFAULT_SPREAD)]
        spread: f64,
        /// Write the CSV here; without it the CSV goes to stdout and the band report to stderr.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Separation before and after adding all co-singletons.
    Separate(SourceArgs),
    /// Print a reference family in the family text format.
    Examples {
        #[arg(long, value_parser = ["triple", "chain"])]
        name: String,
        /// Universe size for the chain family.
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    /// Explicit T-sets as JSON, e.g. '[[1,2],[5,6]]'.
    #[arg(long)]
    t_sets: Option<String>,
}

#[derive(Args, Clone, Copy)]
struct CapArg {
    /// Largest family to materialise.
    #[arg(long, env = "UCLAB_CAP", default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Args)]
struct SourceArgs {
    /// Family file.
    #[arg(conflicts_with_all = ["k", "m", "s", "t_sets"], required_unless_present_all = ["k", "m", "s"])]
    file: Option<PathBuf>,
    #[arg(long, requires_all = ["m", "s"])]
    k: Option<usize>,
    #[arg(long, requires_all = ["k", "s"])]
    m: Option<usize>,
    #[arg(long, requires_all = ["k", "m"])]
    s: Option<usize>,
    #[arg(long, requires = "k")]
    t_sets: Option<String>,
    /// Accepted for symmetry with `construct`; parameter mode of `separate` always materialises.
    #[arg(long)]
    materialize: bool,
    #[command(flatten)]
    cap: CapArg,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapExceeded { .. } => 3,
            Error::Inconsistent(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers as usize;
    let result = match cli.command {
        Command::Construct {
            params,
            materialize,
            cap,
            out,
        } => construct(&params, materialize, cap.cap, out.as_deref()),
        Command::Analyze(src) => analyze(&src, workers),
        Command::OracleCheck {
            k_max,
            m_max,
            cap,
            inject_fault,
        } => oracle_check(k_max, m_max, cap.cap, inject_fault),
        Command::Sweep {
            from,
            to,
            spread,
            csv,
        } => run_sweep(from, to, spread, csv.as_deref(), workers),
        Command::Separate(src) => separate(&src, workers),
        Command::Examples { name, n } => examples(&name, n),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn block_family(k: usize, m: usize, s: usize, t_sets: Option<&str>) -> Result<BlockFamily, Failure> {
    let params = BlockParams::new(k, m, s)?;
    let choice = match t_sets {
        None => None,
        Some(json) => {
            let sets: Vec<Vec<usize>> = serde_json::from_str(json).map_err(|e| Failure {
                code: 2,
                message: format!("--t-sets: {e}"),
            })?;
            Some(TChoice::Explicit(sets))
        }
    };
    Ok(build_block_family(params, choice)?)
}

fn emit(text: &str, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report serialises") + "\n"
}

fn construct(p: &ParamArgs, materialize_it: bool, cap: usize, out: Option<&Path>) -> CmdResult {
    let bf = block_family(p.k, p.m, p.s, p.t_sets.as_deref())?;
    let text = if materialize_it {
        serialize_family(&materialize(&bf, cap)?)
    } else {
        bf.to_json() + "\n"
    };
    emit(&text, out)?;
    Ok(0)
}

enum Source {
    File(Family),
    Block(BlockFamily),
}

fn load(src: &SourceArgs) -> Result<Source, Failure> {
    match (&src.file, src.k, src.m, src.s) {
        (Some(path), ..) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })?;
            Ok(Source::File(parse_family(&text)?))
        }
        (None, Some(k), Some(m), Some(s)) => {
            Ok(Source::Block(block_family(k, m, s, src.t_sets.as_deref())?))
        }
        _ => Err(Failure {
            code: 2,
            message: "give a family file or all of --k --m --s".into(),
        }),
    }
}

#[derive(Serialize)]
struct BlockAnalysis {
    params: BlockParams,
    t_sets: Vec<Vec<usize>>,
    metrics: MetricsReport,
    gamma_out: uclab_core::Rational,
    gamma_in: uclab_core::Rational,
    bounds: uclab_core::construction::BoundReport,
}

fn analyze(src: &SourceArgs, workers: usize) -> CmdResult {
    match load(src)? {
        Source::File(f) => {
            let report = MetricsReport::compute(&f, workers)?;
            emit(&to_json(&report), None)?;
        }
        Source::Block(bf) => {
            let metrics = exact_metrics(&bf);
            let bounds = verify_bounds_with(&bf, &metrics);
            let analysis = BlockAnalysis {
                params: bf.params(),
                t_sets: bf.t_sets().to_vec(),
                metrics: metrics_report(&bf, &metrics),
                gamma_out: metrics.gamma_out,
                gamma_in: metrics.gamma_in,
                bounds,
            };
            emit(&to_json(&analysis), None)?;
        }
    }
    Ok(0)
}

fn oracle_check(k_max: usize, m_max: usize, cap: usize, inject_fault: bool) -> CmdResult {
    let drop_one = |bf: &BlockFamily, cap: usize| -> uclab_core::Result<Family> {
        let f = materialize(bf, cap)?;
        let mut members = f.members().to_vec();
        members.remove(members.len() / 2);
        Family::new(f.universe(), members)
    };
    let materializer: Materializer<'_> = if inject_fault { &drop_one } else { &materialize };
    let cells = check_grid_with(k_max, m_max, cap, materializer);
    let mut stdout = io::stdout().lock();
    let (mut pass, mut skip, mut fail) = (0, 0, 0);
    for cell in &cells {
        let p = cell.params;
        writeln!(stdout, "k={} m={} s={} {}", p.k(), p.m(), p.s(), cell.outcome)?;
        match cell.outcome {
            CellOutcome::Pass { .. } => pass += 1,
            CellOutcome::Skip { .. } => skip += 1,
            CellOutcome::Fail { .. } => fail += 1,
        }
    }
    writeln!(stdout, "{pass} PASS, {skip} SKIP, {fail} FAIL")?;
    Ok(if fail == 0 { 0 } else { 1 })
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    skipped: Vec<SkippedRow>,
    /// Absent when the band cannot be checked (fewer than 3 rows).
    aod: Option<BandReport>,
    avg_abundance: Option<BandReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    band_error: Option<String>,
}

#[derive(Serialize)]
struct SkippedRow {
    n_target: usize,
    reason: String,
}

fn run_sweep(from: u32, to: u32, spread: f64, csv: Option<&Path>, workers: usize) -> CmdResult {
    if from > to || to >= usize::BITS - 1 {
        return Err(Failure {
            code: 2,
            message: format!("bad exponent range {from}..={to}"),
        });
    }
    let out = sweep(&power_of_two_targets(from, to), workers);
    let csv_err = |e: csv::Error| Failure {
        code: 2,
        message: e.to_string(),
    };
    match csv {
        Some(path) => write_sweep_csv(&out.records, fs::File::create(path)?).map_err(csv_err)?,
        None => write_sweep_csv(&out.records, io::stdout().lock()).map_err(csv_err)?,
    }
    let mut summary = SweepSummary {
        rows: out.records.len(),
        skipped: out
            .skipped
            .iter()
            .map(|(n_target, e)| SkippedRow {
                n_target: *n_target,
                reason: e.to_string(),
            })
            .collect(),
        aod: None,
        avg_abundance: None,
        band_error: None,
    };
    match (
        theta_band(&out.records, Quantity::Aod, spread),
        theta_band(&out.records, Quantity::AvgAbundance, spread),
    ) {
        (Ok(a), Ok(b)) => {
            summary.aod = Some(a);
            summary.avg_abundance = Some(b);
        }
        (Err(e @ Error::TooFewRecords(_)), _) => summary.band_error = Some(e.to_string()),
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    }
    let text = to_json(&summary);
    if csv.is_some() {
        emit(&text, None)?;
    } else {
        eprint!("{text}");
    }
    let band_ok = |b: &Option<BandReport>| b.as_ref().is_some_and(|b| b.band_ok);
    Ok(if band_ok(&summary.aod) && band_ok(&summary.avg_abundance) {
        0
    } else {
        5
    })
}

fn separate(src: &SourceArgs, workers: usize) -> CmdResult {
    let family = match load(src)? {
        Source::File(f) => f,
        Source::Block(bf) => materialize(&bf, src.cap.cap)?,
    };
    let report = augmentation_report(&family, workers)?;
    emit(&to_json(&report), None)?;
    Ok(0)
}

fn examples(name: &str, n: usize) -> CmdResult {
    let name: ReferenceName = name.parse()?;
    let f = reference_family(name, n)?;
    emit(&serialize_family(&f), None)?;
    Ok(0)
}
