//! Set families over a finite universe `[n]`: bit-vector sets, union
//! closure, separation testing and the plain-text family format.
//!
//! Elements are 1-based everywhere a caller sees them (I/O, reports, the
//! `elements()` iterator). Bit `i` of a [`SetBits`] stands for element `i + 1`.

use std::cmp::Ordering;
use std::collections::{HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Default bound on the size of a computed union closure.
pub const DEFAULT_CAP: usize = 1_000_000;

/// A subset of `[n]` stored as `ceil(n / 64)` little-endian words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SetBits {
    n: usize,
    words: Box<[u64]>,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

impl SetBits {
    pub fn empty(n: usize) -> Self {
        SetBits {
            n,
            words: vec![0; word_count(n)].into_boxed_slice(),
        }
    }

    /// The whole universe `[n]`.
    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert_bit(i);
        }
        s
    }

    /// Builds a set from 1-based elements.
    pub fn from_elements<I>(n: usize, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut s = Self::empty(n);
        for x in elements {
            if x == 0 || x > n {
                return Err(Error::ElementOutOfRange { element: x, n });
            }
            s.insert_bit(x - 1);
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn insert_bit(&mut self, idx: usize) {
        assert!(idx < self.n, "bit {idx} outside universe {}", self.n);
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    #[inline]
    pub fn remove_bit(&mut self, idx: usize) {
        assert!(idx < self.n, "bit {idx} outside universe {}", self.n);
        self.words[idx / 64] &= !(1 << (idx % 64));
    }

    #[inline]
    pub fn contains_bit(&self, idx: usize) -> bool {
        idx < self.n && self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    /// Membership of the 1-based element `x`.
    pub fn contains(&self, x: usize) -> bool {
        x >= 1 && self.contains_bit(x - 1)
    }

    pub fn cardinality(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union(&self, other: &SetBits) -> SetBits {
        debug_assert_eq!(self.n, other.n);
        SetBits {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(other.words.iter())
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub fn intersection_count(&self, other: &SetBits) -> usize {
        debug_assert_eq!(self.n, other.n);
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn is_subset(&self, other: &SetBits) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    /// Ascending 1-based elements.
    pub fn elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz + 1)
            })
        })
    }
}

/// Orders by the unsigned integer whose bit `i` is element `i + 1`.
impl Ord for SetBits {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            self.words
                .iter()
                .rev()
                .cmp(other.words.iter().rev())
        })
    }
}

impl PartialOrd for SetBits {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SetBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elements()).finish()
    }
}

impl fmt::Display for SetBits {
    /// The family-file line for this set: `-` for the empty set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        for (i, x) in self.elements().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

/// A nonempty, duplicate-free family of subsets of `[n]` in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    n: usize,
    members: Vec<SetBits>,
}

impl Family {
    /// Sorts and deduplicates `members`. Every member must live in `[n]`.
    pub fn new(n: usize, mut members: Vec<SetBits>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyUniverse);
        }
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if let Some(bad) = members.iter().find(|s| s.universe() != n) {
            return Err(Error::UniverseMismatch {
                expected: n,
                found: bad.universe(),
            });
        }
        members.sort_unstable();
        members.dedup();
        Ok(Family { n, members })
    }

    /// Builds a family from lists of 1-based elements.
    pub fn from_lists<L, I>(n: usize, lists: L) -> Result<Self>
    where
        L: IntoIterator<Item = I>,
        I: IntoIterator<Item = usize>,
    {
        let members = lists
            .into_iter()
            .map(|l| SetBits::from_elements(n, l))
            .collect::<Result<Vec<_>>>()?;
        Family::new(n, members)
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[SetBits] {
        &self.members
    }

    pub fn contains(&self, set: &SetBits) -> bool {
        self.members.binary_search(set).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SetBits> {
        self.members.iter()
    }
}

impl<'a> IntoIterator for &'a Family {
    type Item = &'a SetBits;
    type IntoIter = std::slice::Iter<'a, SetBits>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// Smallest union-closed family over `[n]` containing every generator.
///
/// Worklist fixed point: each newly discovered set is united with every set
/// known so far. Fails with [`Error::CapExceeded`] as soon as more than `cap`
/// distinct sets have been found.
pub fn union_closure(generators: &[SetBits], n: usize, cap: usize) -> Result<Family> {
    if generators.is_empty() {
        return Err(Error::EmptyGenerators);
    }
    if let Some(bad) = generators.iter().find(|g| g.universe() != n) {
        return Err(Error::UniverseMismatch {
            expected: n,
            found: bad.universe(),
        });
    }

    let mut seen: HashSet<SetBits> = HashSet::new();
    let mut members: Vec<SetBits> = Vec::new();
    let mut worklist: VecDeque<usize> = VecDeque::new();

    for g in generators {
        if seen.insert(g.clone()) {
            members.push(g.clone());
            worklist.push_back(members.len() - 1);
        }
    }
    if members.len() > cap {
        return Err(Error::CapExceeded { cap });
    }

    while let Some(idx) = worklist.pop_front() {
        let mut i = 0;
        while i < members.len() {
            let u = members[idx].union(&members[i]);
            if !seen.contains(&u) {
                seen.insert(u.clone());
                members.push(u);
                worklist.push_back(members.len() - 1);
                if members.len() > cap {
                    return Err(Error::CapExceeded { cap });
                }
            }
            i += 1;
        }
    }

    Family::new(n, members)
}

/// Whether `A ∪ B` is a member for every pair of members.
pub fn is_union_closed(f: &Family) -> bool {
    let m = f.members();
    (0..m.len()).all(|i| (i + 1..m.len()).all(|j| f.contains(&m[i].union(&m[j]))))
}

/// Outcome of [`separates_points`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationReport {
    pub separates: bool,
    /// 1-based pairs `(i, j)`, `i < j`, that no member splits.
    pub witness_pairs: Vec<(usize, usize)>,
}

/// Finds every pair of elements that lie in exactly the same members.
///
/// Two elements are unseparated iff their membership columns (which members
/// contain them) coincide, so the scan compares columns rather than testing
/// every member against every pair.
pub fn separates_points(f: &Family) -> SeparationReport {
    let n = f.universe();
    let cols: Vec<Vec<u64>> = (0..n)
        .map(|x| {
            let mut col = vec![0u64; f.size().div_ceil(64)];
            for (ai, a) in f.iter().enumerate() {
                if a.contains_bit(x) {
                    col[ai / 64] |= 1 << (ai % 64);
                }
            }
            col
        })
        .collect();

    let mut witness_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if cols[i] == cols[j] {
                witness_pairs.push((i + 1, j + 1));
            }
        }
    }
    SeparationReport {
        separates: witness_pairs.is_empty(),
        witness_pairs,
    }
}

/// `f ∪ { [n] \ {j} : j ∈ [n] }`.
///
/// Requires `f` to be union-closed and to contain `[n]`; then every union
/// involving a co-singleton is a co-singleton or `[n]`, so the result stays
/// union-closed, and it separates every pair of points.
pub fn augment_cosingletons(f: &Family) -> Result<Family> {
    let n = f.universe();
    let full = SetBits::full(n);
    if !f.contains(&full) {
        return Err(Error::PreconditionFailed(format!(
            "[{n}] is not a member of the family"
        )));
    }
    if !is_union_closed(f) {
        return Err(Error::PreconditionFailed(
            "family is not union-closed".into(),
        ));
    }
    let mut members = f.members().to_vec();
    for j in 0..n {
        let mut co = full.clone();
        co.remove_bit(j);
        members.push(co);
    }
    Family::new(n, members)
}

/// Parses the family text format: a `n=<size>` header followed by one set
/// per non-empty line, each a comma-separated strictly ascending list of
/// 1-based elements, or `-` for the empty set.
pub fn parse_family(text: &str) -> Result<Family> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let n: usize = header
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(1, format!("expected `n=<size>`, found {header:?}")))?;
    if n == 0 {
        return Err(parse_err(1, "universe size must be positive".into()));
    }

    let mut members = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let set = if line == "-" {
            SetBits::empty(n)
        } else {
            let mut set = SetBits::empty(n);
            let mut prev = 0usize;
            for tok in line.split(',') {
                let x: usize = tok
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad element {tok:?}")))?;
                if x == 0 || x > n {
                    return Err(parse_err(lineno, format!("element {x} outside [1, {n}]")));
                }
                if x <= prev {
                    return Err(parse_err(
                        lineno,
                        "elements must be strictly ascending".into(),
                    ));
                }
                prev = x;
                set.insert_bit(x - 1);
            }
            set
        };
        if !seen.insert(set.clone()) {
            return Err(parse_err(lineno, format!("duplicate set {set}")));
        }
        members.push(set);
    }
    if members.is_empty() {
        return Err(parse_err(1, "family has no sets".into()));
    }
    Family::new(n, members)
}

/// Writes `f` in the family text format, members in canonical order.
pub fn serialize_family(f: &Family) -> String {
    let mut out = format!("n={}\n", f.universe());
    for s in f {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}
