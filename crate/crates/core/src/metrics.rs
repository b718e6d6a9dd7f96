//! Exact abundance statistics of an explicit family.
//!
//! The abundance of `x` is the fraction of members containing `x`. The
//! average overlap density (AOD) is the expected abundance of a uniform
//! element of a uniform nonempty member; it can be evaluated from the
//! abundances ([`AodMethod::GammaWeighted`]) or as the mean relative overlap
//! `|A ∩ B| / |A|` over pairs ([`AodMethod::Pairwise`]). Both are exact and
//! must agree.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::setfam::{augment_cosingletons, is_union_closed, separates_points, Family, SetBits};

/// Per-element membership counts of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbundanceProfile {
    n: usize,
    size: usize,
    counts: Vec<u64>,
}

impl AbundanceProfile {
    pub fn of(f: &Family) -> Self {
        let n = f.universe();
        let mut counts = vec![0u64; n];
        for a in f {
            for x in a.elements() {
                counts[x - 1] += 1;
            }
        }
        AbundanceProfile {
            n,
            size: f.size(),
            counts,
        }
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    /// Number of members containing the 1-based element `x`.
    pub fn count(&self, x: usize) -> u64 {
        self.counts[x - 1]
    }

    pub fn gamma(&self, x: usize) -> Result<Rational> {
        if x == 0 || x > self.n {
            return Err(Error::ElementOutOfRange {
                element: x,
                n: self.n,
            });
        }
        Ok(Rational::new(self.counts[x - 1], self.size as u64))
    }

    /// `γ_x` for every `x` in `[n]`, in element order.
    pub fn gammas(&self) -> Vec<Rational> {
        self.counts
            .iter()
            .map(|&c| Rational::new(c, self.size as u64))
            .collect()
    }
}

/// `|{A ∈ f : x ∈ A}| / |f|`.
pub fn abundance(f: &Family, x: usize) -> Result<Rational> {
    let n = f.universe();
    if x == 0 || x > n {
        return Err(Error::ElementOutOfRange { element: x, n });
    }
    let hits = f.iter().filter(|a| a.contains(x)).count();
    Ok(Rational::new(hits as u64, f.size() as u64))
}

/// Mean abundance over the whole declared universe, uncovered elements
/// included.
pub fn average_abundance(f: &Family) -> Rational {
    let total: u64 = f.iter().map(|a| a.cardinality() as u64).sum();
    Rational::new(total, (f.size() as u64) * (f.universe() as u64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AodMethod {
    /// `E_{A≠∅} [ (1/|A|) Σ_{x∈A} γ_x ]`
    GammaWeighted,
    /// `E_{A≠∅} E_{B} [ |A∩B| / |A| ]`
    Pairwise,
}

/// Exact average overlap density. The outer average runs over nonempty
/// members only; the inner one (over `B`, or inside `γ_x`) includes `∅`.
pub fn aod(f: &Family, method: AodMethod) -> Result<Rational> {
    aod_with_workers(f, method, 1)
}

/// [`aod`] with the pairwise double loop split over `workers` threads.
/// The result does not depend on `workers`.
pub fn aod_with_workers(f: &Family, method: AodMethod, workers: usize) -> Result<Rational> {
    let nonempty: Vec<&SetBits> = f.iter().filter(|a| !a.is_empty()).collect();
    if nonempty.is_empty() {
        return Err(Error::NoNonemptySet);
    }
    let outer = nonempty.len() as u64;
    let inner = f.size() as u64;

    let sum = match method {
        AodMethod::GammaWeighted => {
            let profile = AbundanceProfile::of(f);
            // Σ_{x∈A} count_x grouped by |A|, so each size contributes one term.
            let mut by_size = vec![BigUint::from(0u32); f.universe() + 1];
            for a in &nonempty {
                let s: u64 = a.elements().map(|x| profile.count(x)).sum();
                by_size[a.cardinality()] += s;
            }
            let terms: Vec<(BigUint, u64)> = by_size
                .into_iter()
                .enumerate()
                .skip(1)
                .map(|(t, w)| (w, t as u64))
                .collect();
            Rational::sum_over_small_denominators(&terms)
        }
        AodMethod::Pairwise => {
            let per_member = |a: &&SetBits| -> Rational {
                let overlap: u64 = f.iter().map(|b| a.intersection_count(b) as u64).sum();
                Rational::new(overlap, a.cardinality() as u64)
            };
            if workers > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::Inconsistent(format!("thread pool: {e}")))?;
                pool.install(|| nonempty.par_iter().map(per_member).reduce(Rational::zero, |a, b| a + b))
            } else {
                nonempty.iter().map(per_member).sum()
            }
        }
    };
    Ok(sum / Rational::from(outer * inner))
}

/// Element with the largest abundance; ties go to the smallest element.
pub fn max_abundance(f: &Family) -> (usize, Rational) {
    let profile = AbundanceProfile::of(f);
    let mut best = 1;
    for x in 2..=f.universe() {
        if profile.count(x) > profile.count(best) {
            best = x;
        }
    }
    (best, Rational::new(profile.count(best), f.size() as u64))
}

/// `γ_max · log2|F|`.
pub fn knill_ratio(f: &Family) -> Result<f64> {
    if f.size() <= 1 {
        return Err(Error::DegenerateFamily { size: f.size() });
    }
    let (_, g) = max_abundance(f);
    Ok(g.to_f64() * (f.size() as f64).log2())
}

/// The two introductory example families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceName {
    /// `{∅, {1}, {1,2,3}}` over `[3]`.
    Triple,
    /// `∅`, the prefixes `[1], …, [⌊√n⌋]`, and `[n]`.
    Chain,
}

impl std::str::FromStr for ReferenceName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triple" => Ok(ReferenceName::Triple),
            "chain" => Ok(ReferenceName::Chain),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }
}

/// Builds a reference family. `n` is ignored for `Triple` (always 3).
pub fn reference_family(name: ReferenceName, n: usize) -> Result<Family> {
    match name {
        ReferenceName::Triple => Family::from_lists(3, [vec![], vec![1], vec![1, 2, 3]]),
        ReferenceName::Chain => {
            if n < 2 {
                return Err(Error::BadN {
                    n,
                    reason: "chain family needs n >= 2",
                });
            }
            let root = n.isqrt();
            let mut lists: Vec<Vec<usize>> = vec![vec![]];
            lists.extend((1..=root).map(|i| (1..=i).collect()));
            lists.push((1..=n).collect());
            Family::from_lists(n, lists)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxAbundance {
    pub element: usize,
    #[serde(serialize_with = "ser_num")]
    pub num: BigUint,
    #[serde(serialize_with = "ser_num")]
    pub den: BigUint,
}

impl MaxAbundance {
    pub fn new(element: usize, value: &Rational) -> Self {
        MaxAbundance {
            element,
            num: value.numer().clone(),
            den: value.denom().clone(),
        }
    }

    pub fn value(&self) -> Rational {
        Rational::new(self.num.clone(), self.den.clone())
    }
}

fn ser_num<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Summary statistics of one family, serialised as a single JSON object.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n: usize,
    #[serde(serialize_with = "ser_num")]
    pub size: BigUint,
    pub aod: Rational,
    pub avg_abundance: Rational,
    pub max_abundance: MaxAbundance,
    /// `None` when `|F| <= 1`.
    pub knill_ratio: Option<f64>,
    pub is_union_closed: bool,
    pub separates: bool,
}

impl MetricsReport {
    /// Evaluates an explicit family. Both AOD routes are computed and must
    /// agree; a disagreement is reported as [`Error::Inconsistent`].
    pub fn compute(f: &Family, workers: usize) -> Result<Self> {
        let weighted = aod(f, AodMethod::GammaWeighted)?;
        let pairwise = aod_with_workers(f, AodMethod::Pairwise, workers)?;
        if weighted != pairwise {
            return Err(Error::Inconsistent(format!(
                "AOD routes disagree: gamma_weighted = {weighted}, pairwise = {pairwise}"
            )));
        }
        let (element, gmax) = max_abundance(f);
        Ok(MetricsReport {
            n: f.universe(),
            size: BigUint::from(f.size()),
            aod: weighted,
            avg_abundance: average_abundance(f),
            max_abundance: MaxAbundance::new(element, &gmax),
            knill_ratio: knill_ratio(f).ok(),
            is_union_closed: is_union_closed(f),
            separates: separates_points(f).separates,
        })
    }
}

/// Effect of adding every co-singleton `[n] \\ {j}` to a family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AugmentationReport {
    pub before: SideReport,
    pub after: SideReport,
    /// `|AOD_after - AOD_before| / AOD_before`
    pub relative_aod_change: Rational,
    /// `|avg_after - avg_before| / avg_before`
    pub relative_avg_change: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideReport {
    pub size: usize,
    pub separates: bool,
    /// Unseparated pairs, 1-based, at most [`MAX_WITNESSES`] of them.
    pub witness_pairs: Vec<(usize, usize)>,
    pub unseparated_pairs: usize,
    pub aod: Rational,
    pub avg_abundance: Rational,
}

pub const MAX_WITNESSES: usize = 16;

impl SideReport {
    fn of(f: &Family, workers: usize) -> Result<Self> {
        let sep = separates_points(f);
        let weighted = aod(f, AodMethod::GammaWeighted)?;
        let pairwise = aod_with_workers(f, AodMethod::Pairwise, workers)?;
        if weighted != pairwise {
            return Err(Error::Inconsistent(format!(
                "AOD routes disagree: gamma_weighted = {weighted}, pairwise = {pairwise}"
            )));
        }
        Ok(SideReport {
            size: f.size(),
            separates: sep.separates,
            unseparated_pairs: sep.witness_pairs.len(),
            witness_pairs: sep.witness_pairs.into_iter().take(MAX_WITNESSES).collect(),
            aod: weighted,
            avg_abundance: average_abundance(f),
        })
    }
}

/// Compares `f` with [`augment_cosingletons`]`(f)`.
pub fn augmentation_report(f: &Family, workers: usize) -> Result<AugmentationReport> {
    let augmented = augment_cosingletons(f)?;
    let before = SideReport::of(f, workers)?;
    let after = SideReport::of(&augmented, workers)?;
    let relative_aod_change = &before.aod.abs_diff(&after.aod) / &before.aod;
    let relative_avg_change = &before.avg_abundance.abs_diff(&after.avg_abundance) / &before.avg_abundance;
    Ok(AugmentationReport {
        before,
        after,
        relative_aod_change,
        relative_avg_change,
    })
}
