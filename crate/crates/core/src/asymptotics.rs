//! Parameter planning and the scaling sweep.
//!
//! For each target universe size the sweep picks `m ≈ (n / log2 n)^{1/3}`,
//! the smallest `s` with `m·2^{-s} <= 1/4`, and the largest block size that
//! fits, then evaluates the block family exactly. The Θ claim is checked by
//! keeping `AOD · log2|F| / log2 log2|F|` inside a bounded multiplicative band.

use std::io;

use rayon::prelude::*;
use serde::Serialize;

use crate::construction::{build_block_family, count_table, exact_metrics, BlockParams};
use crate::error::{Error, Result};
pub use crate::rational::log2_big;
use crate::rational::Rational;

/// `ceil(log2 m) + 2`, the smallest `s` with `m·2^{-s} <= 1/4`.
pub fn optimal_s(m: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::BadM(m));
    }
    let ceil_log2 = (usize::BITS - (m - 1).leading_zeros()) as usize;
    Ok(ceil_log2 + 2)
}

/// Smallest `n_target` for which [`plan_params`] succeeds: `m = 2`, `s = 3`,
/// `k = s + 2`.
pub fn smallest_feasible_target() -> usize {
    let s = optimal_s(2).expect("m = 2 is valid");
    2 * (s + 2)
}

/// Picks `(k, m, s)` with `k·m <= n_target`.
///
/// `m` starts at `max(2, round((n/log2 n)^{1/3}))` and is decremented until
/// `k = floor(n_target / m)` satisfies `k >= s + 2`.
pub fn plan_params(n_target: usize) -> Result<BlockParams> {
    let smallest = smallest_feasible_target();
    let infeasible = Error::Infeasible { n_target, smallest };
    if n_target < smallest {
        return Err(infeasible);
    }
    let nt = n_target as f64;
    let mut m = ((nt / nt.log2()).cbrt().round() as usize).max(2);
    loop {
        let s = optimal_s(m)?;
        let k = n_target / m;
        if k >= s + 2 {
            return BlockParams::new(k, m, s);
        }
        if m == 2 {
            return Err(infeasible);
        }
        m -= 1;
    }
}

/// One row of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n_target: usize,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub s: usize,
    pub log2_n: f64,
    pub aod: Rational,
    pub avg_abundance: Rational,
    pub theta_aod: f64,
    pub theta_avg: f64,
}

/// `value · log2_n / log2(log2_n)`; needs `log2_n > 1`.
pub fn theta_ratio(value: &Rational, log2_n: f64) -> Result<f64> {
    if log2_n <= 1.0 {
        return Err(Error::UndefinedRatio(format!("log2|F| = {log2_n} <= 1")));
    }
    Ok(value.to_f64() * log2_n / log2_n.log2())
}

/// Exact statistics for one parameter choice, no materialisation.
pub fn record_for(n_target: usize, params: BlockParams) -> Result<SweepRecord> {
    let bf = build_block_family(params, None)?;
    let table = count_table(&bf);
    let metrics = exact_metrics(&bf);
    let log2_n = log2_big(&table.total);
    Ok(SweepRecord {
        n_target,
        n: params.n(),
        k: params.k(),
        m: params.m(),
        s: params.s(),
        log2_n,
        theta_aod: theta_ratio(&metrics.aod, log2_n)?,
        theta_avg: theta_ratio(&metrics.avg_abundance, log2_n)?,
        aod: metrics.aod,
        avg_abundance: metrics.avg_abundance,
    })
}

/// Records in input order plus the targets that could not be planned.
#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub skipped: Vec<(usize, Error)>,
}

/// Runs [`plan_params`] and [`record_for`] for every target; rows are
/// independent and computed on `workers` threads, output order is input order.
pub fn sweep(n_targets: &[usize], workers: usize) -> SweepOutcome {
    let row = |&nt: &usize| plan_params(nt).and_then(|p| record_for(nt, p));
    let rows: Vec<Result<SweepRecord>> = if workers > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| n_targets.par_iter().map(row).collect()),
            Err(_) => n_targets.iter().map(row).collect(),
        }
    } else {
        n_targets.iter().map(row).collect()
    };

    let mut out = SweepOutcome::default();
    for (nt, r) in n_targets.iter().zip(rows) {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(e) => out.skipped.push((*nt, e)),
        }
    }
    out
}

/// `2^from, …, 2^to`.
pub fn power_of_two_targets(from: u32, to: u32) -> Vec<usize> {
    (from..=to).map(|e| 1usize << e).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Aod,
    AvgAbundance,
}

impl Quantity {
    fn ratio(self, r: &SweepRecord) -> f64 {
        match self {
            Quantity::Aod => r.theta_aod,
            Quantity::AvgAbundance => r.theta_avg,
        }
    }
}

pub const DEFAULT_SPREAD: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandReport {
    pub quantity: Quantity,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub spread: f64,
    /// `max_ratio / min_ratio`
    pub observed_spread: f64,
    /// First-row ratio over last-row ratio.
    pub first_last: f64,
    pub band_ok: bool,
}

/// Checks that the theta ratio of `quantity` varies by at most a factor of
/// `spread` over the records.
pub fn theta_band(records: &[SweepRecord], quantity: Quantity, spread: f64) -> Result<BandReport> {
    if records.len() < 3 {
        return Err(Error::TooFewRecords(records.len()));
    }
    if let Some(r) = records.iter().find(|r| r.log2_n <= 2.0) {
        return Err(Error::UndefinedRatio(format!(
            "log2|F| = {} <= 2 at n_target = {}",
            r.log2_n, r.n_target
        )));
    }
    let ratios: Vec<f64> = records.iter().map(|r| quantity.ratio(r)).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let observed_spread = max_ratio / min_ratio;
    Ok(BandReport {
        quantity,
        min_ratio,
        max_ratio,
        spread,
        observed_spread,
        first_last: ratios[0] / ratios[ratios.len() - 1],
        band_ok: min_ratio > 0.0 && observed_spread <= spread,
    })
}

/// Largest relative increase of AOD between consecutive records,
/// `max(aod[i+1] / aod[i]) - 1`, floored at 0.
pub fn max_consecutive_aod_increase(records: &[SweepRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| (&w[1].aod / &w[0].aod).to_f64() - 1.0)
        .fold(0.0, f64::max)
}

pub const CSV_HEADER: [&str; 14] = [
    "n_target", "n", "k", "m", "s", "log2_N", "aod_num", "aod_den", "aod_approx", "avg_num",
    "avg_den", "avg_approx", "theta_aod", "theta_avg",
];

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed.
pub fn format_sig12(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIG).contains(&exp) {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes the sweep CSV: mandatory header, one row per record.
pub fn write_sweep_csv<W: io::Write>(records: &[SweepRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.n_target.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.m.to_string(),
            r.s.to_string(),
            format_sig12(r.log2_n),
            r.aod.numer().to_string(),
            r.aod.denom().to_string(),
            format_sig12(r.aod.to_f64()),
            r.avg_abundance.numer().to_string(),
            r.avg_abundance.denom().to_string(),
            format_sig12(r.avg_abundance.to_f64()),
            format_sig12(r.theta_aod),
            format_sig12(r.theta_avg),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(records: &[SweepRecord]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}
