//! Brute-force cross-checks of the structured block representation.
//!
//! For one parameter cell the check closes the generators by the worklist
//! fixed point, compares with the structured enumeration set for set,
//! compares the size with the count formula, and compares every exact
//! statistic with the same statistic evaluated on the explicit family.

use std::fmt;

use num_bigint::BigUint;

use crate::construction::{
    build_block_family, count_table, exact_metrics, materialize, BlockFamily, BlockParams,
};
use crate::error::{Error, Result};
use crate::metrics::{abundance, aod, average_abundance, AodMethod};
use crate::setfam::{union_closure, Family};

/// The grid of valid `(k, m, s)` with `3 <= k <= k_max`, `2 <= m <= m_max`,
/// `1 <= s <= k - 2`, in lexicographic order.
pub fn feasible_grid(k_max: usize, m_max: usize) -> Vec<BlockParams> {
    let mut out = Vec::new();
    for k in 3..=k_max {
        for m in 2..=m_max {
            for s in 1..=k.saturating_sub(2) {
                out.push(BlockParams::new(k, m, s).expect("grid respects constraints"));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellOutcome {
    Pass { size: usize },
    /// `N` exceeds the cap; nothing was materialised.
    Skip { size: BigUint },
    Fail { reason: String },
}

impl CellOutcome {
    pub fn is_fail(&self) -> bool {
        matches!(self, CellOutcome::Fail { .. })
    }
}

impl fmt::Display for CellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellOutcome::Pass { size } => write!(f, "PASS (N = {size})"),
            CellOutcome::Skip { size } => write!(f, "SKIP (N = {size} exceeds cap)"),
            CellOutcome::Fail { reason } => write!(f, "FAIL: {reason}"),
        }
    }
}

/// Source of the explicit family under test. The real one is
/// [`materialize`]; tests substitute corrupted versions.
pub type Materializer<'a> = &'a dyn Fn(&BlockFamily, usize) -> Result<Family>;

/// Runs every check for one block family with the real [`materialize`].
pub fn check_cell(bf: &BlockFamily, cap: usize) -> CellOutcome {
    check_cell_with(bf, cap, &materialize)
}

pub fn check_cell_with(bf: &BlockFamily, cap: usize, materializer: Materializer<'_>) -> CellOutcome {
    let table = count_table(bf);
    if table.total > BigUint::from(cap) {
        return CellOutcome::Skip { size: table.total };
    }
    match run_checks(bf, cap, materializer) {
        Ok(size) => CellOutcome::Pass { size },
        Err(reason) => CellOutcome::Fail { reason },
    }
}

fn run_checks(
    bf: &BlockFamily,
    cap: usize,
    materializer: Materializer<'_>,
) -> std::result::Result<usize, String> {
    let e = |err: Error| err.to_string();
    let structured = materializer(bf, cap).map_err(e)?;
    let closed = union_closure(&bf.generators(), bf.n(), cap).map_err(e)?;

    if structured != closed {
        let witness = closed
            .iter()
            .find(|s| !structured.contains(s))
            .map(|s| format!("closure member {{{s}}} missing from structured family"))
            .or_else(|| {
                structured
                    .iter()
                    .find(|s| !closed.contains(s))
                    .map(|s| format!("structured member {{{s}}} not in closure"))
            })
            .unwrap_or_else(|| "families differ".into());
        return Err(witness);
    }

    let table = count_table(bf);
    if BigUint::from(structured.size()) != table.total {
        return Err(format!(
            "|F| = {} but count formula gives {}",
            structured.size(),
            table.total
        ));
    }

    let exact = exact_metrics(bf);
    let x_in = bf.t_sets()[0][0];
    let x_out = (1..=bf.n())
        .find(|&x| !bf.in_t(x))
        .expect("s <= k - 2 leaves elements outside T");
    let checks = [
        ("gamma_out", exact.gamma_out.clone(), abundance(&structured, x_out).map_err(e)?),
        ("gamma_in", exact.gamma_in.clone(), abundance(&structured, x_in).map_err(e)?),
        ("avg_abundance", exact.avg_abundance.clone(), average_abundance(&structured)),
        ("aod(gamma_weighted)", exact.aod.clone(), aod(&structured, AodMethod::GammaWeighted).map_err(e)?),
        ("aod(pairwise)", exact.aod.clone(), aod(&structured, AodMethod::Pairwise).map_err(e)?),
    ];
    for (name, want, got) in checks {
        if want != got {
            return Err(format!("{name}: exact {want} != explicit {got}"));
        }
    }
    Ok(structured.size())
}

/// One grid cell and its outcome.
#[derive(Clone, Debug)]
pub struct CellReport {
    pub params: BlockParams,
    pub outcome: CellOutcome,
}

/// Checks every cell of [`feasible_grid`] with the canonical choice of `T`.
pub fn check_grid(k_max: usize, m_max: usize, cap: usize) -> Vec<CellReport> {
    check_grid_with(k_max, m_max, cap, &materialize)
}

pub fn check_grid_with(
    k_max: usize,
    m_max: usize,
    cap: usize,
    materializer: Materializer<'_>,
) -> Vec<CellReport> {
    feasible_grid(k_max, m_max)
        .into_iter()
        .map(|params| {
            let bf = build_block_family(params, None).expect("canonical T is valid");
            CellReport {
                params,
                outcome: check_cell_with(&bf, cap, materializer),
            }
        })
        .collect()
}
