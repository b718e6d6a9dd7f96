//! The block construction.
//!
//! `[n]` with `n = k·m` is split into `m` contiguous blocks of size `k`, and
//! each block `B_i` gets a designated `s`-subset `T_i`. The family `F` is the
//! union closure of `{ B_i ∪ {j} : i ∈ [m], j ∈ T }` with `T = ∪ T_i`.
//!
//! Every member of `F` has the form `(∪_{i∈S} B_i) ∪ U` with `S` a nonempty
//! set of block indices and `U` any subset of the designated elements lying
//! outside the chosen blocks, and every such set is a member. All counts and
//! statistics below are derived from that description, so nothing here needs
//! `F` in memory except [`materialize`].

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MaxAbundance, MetricsReport};
use crate::rational::{log2_big, Rational};
use crate::setfam::{Family, SetBits};

/// Block size `k`, block count `m` and designated-subset size `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BlockParams {
    k: usize,
    m: usize,
    s: usize,
}

impl BlockParams {
    /// Requires `m >= 2` and `1 <= s <= k - 2`.
    pub fn new(k: usize, m: usize, s: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParams(format!("m >= 2 violated (m = {m})")));
        }
        if s < 1 {
            return Err(Error::InvalidParams("s >= 1 violated (s = 0)".into()));
        }
        if s + 2 > k {
            return Err(Error::InvalidParams(format!(
                "s <= k-2 violated (k = {k}, s = {s})"
            )));
        }
        k.checked_mul(m)
            .ok_or_else(|| Error::InvalidParams("k*m overflows".into()))?;
        Ok(BlockParams { k, m, s })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.k * self.m
    }

    /// `|T| = m·s`.
    pub fn t_size(&self) -> usize {
        self.m * self.s
    }

    /// `τ = m / 2^s`.
    pub fn tau(&self) -> Rational {
        Rational::new(self.m as u64, BigUint::one() << self.s)
    }
}

/// Which `s` elements of each block form `T_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TChoice {
    /// The first `s` elements of every block.
    First,
    /// The last `s` elements of every block.
    Last,
    /// Explicit 1-based sets, one per block.
    Explicit(Vec<Vec<usize>>),
}

/// Implicit representation of the block family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockFamily {
    params: BlockParams,
    t_sets: Vec<Vec<usize>>,
}

/// Builds the block family for `params`; `None` selects the canonical
/// choice of `T_i` (first `s` elements of each block).
pub fn build_block_family(params: BlockParams, t_choice: Option<TChoice>) -> Result<BlockFamily> {
    let BlockParams { k, m, s } = params;
    let block_start = |i: usize| i * k + 1;
    let t_sets = match t_choice.unwrap_or(TChoice::First) {
        TChoice::First => (0..m)
            .map(|i| (block_start(i)..block_start(i) + s).collect())
            .collect(),
        TChoice::Last => (0..m)
            .map(|i| (block_start(i) + k - s..block_start(i) + k).collect())
            .collect(),
        TChoice::Explicit(sets) => {
            if sets.len() != m {
                return Err(Error::InvalidParams(format!(
                    "expected {m} T-sets, got {}",
                    sets.len()
                )));
            }
            let mut out = Vec::with_capacity(m);
            for (i, mut t) in sets.into_iter().enumerate() {
                t.sort_unstable();
                t.dedup();
                if t.len() != s {
                    return Err(Error::InvalidParams(format!(
                        "|T_{}| must be s = {s}, got {}",
                        i + 1,
                        t.len()
                    )));
                }
                let range = block_start(i)..block_start(i) + k;
                if let Some(bad) = t.iter().find(|x| !range.contains(x)) {
                    return Err(Error::InvalidParams(format!(
                        "T_{} must lie in block {}..={}, found {bad}",
                        i + 1,
                        range.start,
                        range.end - 1
                    )));
                }
                out.push(t);
            }
            out
        }
    };
    Ok(BlockFamily { params, t_sets })
}

impl BlockFamily {
    pub fn params(&self) -> BlockParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    /// `T_1, …, T_m` as ascending 1-based elements.
    pub fn t_sets(&self) -> &[Vec<usize>] {
        &self.t_sets
    }

    /// `B_i` for 0-based block index `i`.
    pub fn block(&self, i: usize) -> SetBits {
        let k = self.params.k;
        let mut b = SetBits::empty(self.n());
        for bit in i * k..(i + 1) * k {
            b.insert_bit(bit);
        }
        b
    }

    pub fn blocks(&self) -> Vec<SetBits> {
        (0..self.params.m).map(|i| self.block(i)).collect()
    }

    /// `T` as a set.
    pub fn t_union(&self) -> SetBits {
        SetBits::from_elements(self.n(), self.t_sets.iter().flatten().copied())
            .expect("T-sets validated at construction")
    }

    pub fn in_t(&self, x: usize) -> bool {
        let block = (x - 1) / self.params.k;
        self.t_sets[block].binary_search(&x).is_ok()
    }

    /// Distinct generators `B_i ∪ {j}`, `j ∈ T`. For `j ∈ T_i` the generator
    /// is `B_i` itself, so there are `m·(1 + (m-1)·s)` of them.
    pub fn generators(&self) -> Vec<SetBits> {
        let mut gens = Vec::new();
        for (i, b) in self.blocks().into_iter().enumerate() {
            gens.push(b.clone());
            for (i2, t) in self.t_sets.iter().enumerate() {
                if i2 == i {
                    continue;
                }
                for &j in t {
                    let mut g = b.clone();
                    g.insert_bit(j - 1);
                    gens.push(g);
                }
            }
        }
        gens
    }
}

#[derive(Serialize, Deserialize)]
struct BlockFamilyJson {
    k: usize,
    m: usize,
    s: usize,
    t_sets: Vec<Vec<usize>>,
}

impl BlockFamily {
    /// `{"k":…, "m":…, "s":…, "t_sets":[[…],…]}`
    pub fn to_json(&self) -> String {
        serde_json::to_string(&BlockFamilyJson {
            k: self.params.k,
            m: self.params.m,
            s: self.params.s,
            t_sets: self.t_sets.clone(),
        })
        .expect("plain struct serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BlockFamilyJson = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let params = BlockParams::new(raw.k, raw.m, raw.s)?;
        build_block_family(params, Some(TChoice::Explicit(raw.t_sets)))
    }
}

/// `C(n, 0), …, C(n, n)`.
pub fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for r in 1..=n {
        c = c * BigUint::from(n + 1 - r) / BigUint::from(r);
        row.push(c.clone());
    }
    row
}

/// Counts of members by number of full blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    /// `N_j` for `j = 1..=m`, stored at index `j - 1`.
    pub n_j: Vec<BigUint>,
    /// `N = |F|`.
    pub total: BigUint,
    /// `p_j = N_j / N`, stored at index `j - 1`.
    pub p: Vec<Rational>,
    pub tau: Rational,
}

impl CountTable {
    pub fn n_j(&self, j: usize) -> &BigUint {
        &self.n_j[j - 1]
    }

    pub fn p(&self, j: usize) -> &Rational {
        &self.p[j - 1]
    }
}

/// `N_j = C(m, j)·2^{(m-j)s}`, `N = Σ N_j`, `p_j = N_j / N`, `τ = m·2^{-s}`.
pub fn count_table(bf: &BlockFamily) -> CountTable {
    let BlockParams { m, s, .. } = bf.params;
    let binom = binomial_row(m);
    let n_j: Vec<BigUint> = (1..=m)
        .map(|j| &binom[j] << ((m - j) * s))
        .collect();
    let total: BigUint = n_j.iter().sum();
    let p = n_j
        .iter()
        .map(|nj| Rational::new(nj.clone(), total.clone()))
        .collect();
    CountTable {
        n_j,
        total,
        p,
        tau: bf.params.tau(),
    }
}

/// Writes out every member of the family.
pub fn materialize(bf: &BlockFamily, cap: usize) -> Result<Family> {
    let table = count_table(bf);
    if table.total > BigUint::from(cap) {
        return Err(Error::CapExceeded { cap });
    }
    let m = bf.params.m;
    let blocks = bf.blocks();
    let mut members = Vec::new();
    for mask in 1u64..(1u64 << m) {
        let mut base = SetBits::empty(bf.n());
        let mut free: Vec<usize> = Vec::new();
        for (i, b) in blocks.iter().enumerate() {
            if mask >> i & 1 == 1 {
                base = base.union(b);
            } else {
                free.extend(&bf.t_sets[i]);
            }
        }
        for umask in 0u64..(1u64 << free.len()) {
            let mut a = base.clone();
            for (t, &x) in free.iter().enumerate() {
                if umask >> t & 1 == 1 {
                    a.insert_bit(x - 1);
                }
            }
            members.push(a);
        }
    }
    Family::new(bf.n(), members)
}

/// Exact statistics of the block family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockMetrics {
    /// `γ_x` for any `x ∉ T`.
    pub gamma_out: Rational,
    /// `γ_x` for any `x ∈ T`.
    pub gamma_in: Rational,
    pub avg_abundance: Rational,
    pub aod: Rational,
}

/// Members containing a fixed element outside `T` and inside `T`.
///
/// Outside `T`, `x` is in a member exactly when its block is chosen, which
/// gives `Σ_j C(m-1, j-1)·2^{(m-j)s}`. Inside `T`, add the members whose
/// block set avoids `x`'s block but whose free part contains `x`: half of
/// the `2^{(m-j)s}` choices, for each of the `C(m-1, j)` block sets.
fn membership_counts(params: BlockParams) -> (BigUint, BigUint) {
    let BlockParams { m, s, .. } = params;
    let binom = binomial_row(m - 1);
    let mut out = BigUint::zero();
    for j in 1..=m {
        out += &binom[j - 1] << ((m - j) * s);
    }
    let mut extra = BigUint::zero();
    for (j, c) in binom.iter().enumerate().take(m).skip(1) {
        extra += c << ((m - j) * s - 1);
    }
    let inside = &out + extra;
    (out, inside)
}

/// Abundances, average abundance and AOD from the member classes
/// "`j` full blocks plus `u` free designated elements", without enumerating
/// the family. Polynomial in `m·s`.
pub fn exact_metrics(bf: &BlockFamily) -> BlockMetrics {
    let params = bf.params;
    let BlockParams { k, m, s } = params;
    let table = count_table(bf);
    let total = &table.total;

    // γ_out = (1/m) Σ_j j·p_j
    let gamma_out = table
        .p
        .iter()
        .enumerate()
        .map(|(i, p)| p * &Rational::from((i + 1) as u64))
        .sum::<Rational>()
        / Rational::from(m as u64);

    let (count_out, count_in) = membership_counts(params);
    debug_assert_eq!(Rational::new(count_out.clone(), total.clone()), gamma_out);
    let gamma_in = Rational::new(count_in.clone(), total.clone());

    // AOD = (1/N²) Σ_classes size·[(jk - js)·count_out + (js + u)·count_in] / (jk + u)
    let binom_m = binomial_row(m);
    let mut terms: Vec<(BigUint, u64)> = Vec::new();
    for (j, c_blocks) in binom_m.iter().enumerate().skip(1) {
        let free = (m - j) * s;
        let free_row = binomial_row(free);
        let outside_t = BigUint::from(j * (k - s)) * &count_out;
        for (u, c_free) in free_row.iter().enumerate() {
            let class_size = c_blocks * c_free;
            let weight = class_size * (&outside_t + BigUint::from(j * s + u) * &count_in);
            terms.push((weight, (j * k + u) as u64));
        }
    }
    let aod = Rational::sum_over_small_denominators(&terms)
        / Rational::from(total * total);

    let n = params.n() as u64;
    let t = params.t_size() as u64;
    let avg_abundance = (&gamma_out * &Rational::from(n - t) + &gamma_in * &Rational::from(t))
        / Rational::from(n);

    BlockMetrics {
        gamma_out,
        gamma_in,
        avg_abundance,
        aod,
    }
}

/// The [`MetricsReport`] of the block family, from [`exact_metrics`] alone.
///
/// Elements of `T` have the largest abundance (they lie in every member that
/// a non-`T` element of the same block lies in, and more), so the maximum is
/// attained at the smallest element of `T`. Block families are union-closed
/// by definition and never separate two elements of the same `B_i \ T_i`.
pub fn metrics_report(bf: &BlockFamily, metrics: &BlockMetrics) -> MetricsReport {
    let table = count_table(bf);
    let x_max = bf.t_sets.iter().flatten().copied().min().expect("s >= 1");
    MetricsReport {
        n: bf.n(),
        knill_ratio: Some(metrics.gamma_in.to_f64() * log2_big(&table.total)),
        size: table.total,
        aod: metrics.aod.clone(),
        avg_abundance: metrics.avg_abundance.clone(),
        max_abundance: MaxAbundance::new(x_max, &metrics.gamma_in),
        is_union_closed: true,
        separates: false,
    }
}

/// Every inequality of the block-construction analysis, evaluated exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub tau: Rational,
    /// `τ <= 1/4`
    pub tau_ok: bool,
    /// `1/m <= γ_out`
    pub gamma_out_lower: bool,
    /// `γ_out <= (1/m)(1 + 2τ + … + mτ^{m-1})`
    pub gamma_out_series: bool,
    /// `(1/m)(1 + 2τ + … + mτ^{m-1}) <= (1/m)(1 + 4τ)`
    pub series_le_linear: bool,
    /// `γ_out <= (1/m)(1 + 4τ)`
    pub gamma_out_linear: bool,
    /// `γ_out <= 2/m`
    pub gamma_out_two_over_m: bool,
    /// `1/2 <= γ_in <= 1`
    pub gamma_in_range: bool,
    /// `|A ∩ T| / |A| <= ms/k` for every member
    pub t_fraction_ok: bool,
    /// `1/m <= AOD`
    pub aod_lower: bool,
    /// `AOD <= (1 - ms/k)·(2/m) + (ms/k)·1`
    pub aod_mixture: bool,
    /// `AOD <= 2/m + m²s/n`
    pub aod_bound1: bool,
}

impl BoundReport {
    /// Every inequality other than the `τ` gate itself.
    pub fn all_bounds_hold(&self) -> bool {
        self.gamma_out_lower
            && self.gamma_out_series
            && self.series_le_linear
            && self.gamma_out_linear
            && self.gamma_out_two_over_m
            && self.gamma_in_range
            && self.t_fraction_ok
            && self.aod_lower
            && self.aod_mixture
            && self.aod_bound1
    }

    /// Names of the inequalities that failed.
    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("gamma_out_lower", self.gamma_out_lower),
            ("gamma_out_series", self.gamma_out_series),
            ("series_le_linear", self.series_le_linear),
            ("gamma_out_linear", self.gamma_out_linear),
            ("gamma_out_two_over_m", self.gamma_out_two_over_m),
            ("gamma_in_range", self.gamma_in_range),
            ("t_fraction_ok", self.t_fraction_ok),
            ("aod_lower", self.aod_lower),
            ("aod_mixture", self.aod_mixture),
            ("aod_bound1", self.aod_bound1),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

/// Evaluates the bounds against [`exact_metrics`]. Failures are recorded,
/// not raised; a failure while `tau_ok` holds would contradict the analysis.
pub fn verify_bounds(bf: &BlockFamily) -> BoundReport {
    let metrics = exact_metrics(bf);
    verify_bounds_with(bf, &metrics)
}

/// [`verify_bounds`] for already computed metrics.
pub fn verify_bounds_with(bf: &BlockFamily, metrics: &BlockMetrics) -> BoundReport {
    let BlockParams { k, m, s } = bf.params;
    let n = bf.n() as u64;
    let r = |a: u64, b: u64| Rational::new(a, b);
    let tau = bf.params.tau();
    let one_over_m = r(1, m as u64);
    let two_over_m = r(2, m as u64);

    // Σ_{j=1}^{m} j·τ^{j-1}
    let mut series = Rational::zero();
    let mut power = Rational::one();
    for j in 1..=m {
        series += &power * &Rational::from(j as u64);
        power = &power * &tau;
    }
    let series_bound = &series * &one_over_m;
    let linear_bound = &(&Rational::one() + &(&tau * &Rational::from(4u64))) * &one_over_m;

    let g_out = &metrics.gamma_out;
    let g_in = &metrics.gamma_in;

    // Largest |A ∩ T| / |A| over the classes (j blocks, u free elements):
    // (js + u) / (jk + u). Compared by cross-multiplication.
    let ms = (m * s) as u128;
    let t_fraction_ok = (1..=m).all(|j| {
        (0..=(m - j) * s).all(|u| {
            let num = (j * s + u) as u128;
            let den = (j * k + u) as u128;
            num * k as u128 <= ms * den
        })
    });

    // (1 - f)·(2/m) + f with f = ms/k, rewritten as 2/m + f·(1 - 2/m) so it
    // stays nonnegative when f > 1.
    let f_t = r((m * s) as u64, k as u64);
    let mixture = &two_over_m + &(&f_t * &(&Rational::one() - &two_over_m));
    let bound1 = &two_over_m + &r((m * m * s) as u64, n);

    BoundReport {
        tau_ok: tau <= r(1, 4),
        gamma_out_lower: &one_over_m <= g_out,
        gamma_out_series: g_out <= &series_bound,
        series_le_linear: series_bound <= linear_bound,
        gamma_out_linear: g_out <= &linear_bound,
        gamma_out_two_over_m: g_out <= &two_over_m,
        gamma_in_range: &r(1, 2) <= g_in && g_in <= &Rational::one(),
        t_fraction_ok,
        aod_lower: one_over_m <= metrics.aod,
        aod_mixture: metrics.aod <= mixture,
        aod_bound1: metrics.aod <= bound1,
        tau,
    }
}
