//! Cells of the complete (CP) and incomplete (IP) binary sample spaces.
//!
//! A cell is a 0-1 vector of length `k`; equivalently the set of features that
//! are present in it. Feature `i` is bit `i` of the mask, and is printed as the
//! `i`-th character of a cell label, so feature `A` is the leftmost digit.
//!
//! Cells and subsets are kept in the canonical order used throughout the
//! crate: ascending subset size, lexicographic on the sorted index list within
//! a size. On CP the zero cell comes first.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{HasError, Result};

/// Largest supported number of features.
pub const MAX_K: usize = 24;

/// A subset of the features, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Debug)]
pub struct FeatureSet(u32);

impl FeatureSet {
    pub const EMPTY: FeatureSet = FeatureSet(0);

    pub const fn from_mask(mask: u32) -> Self {
        FeatureSet(mask)
    }

    /// The set of all `k` features.
    pub fn full(k: usize) -> Self {
        debug_assert!(k <= MAX_K);
        FeatureSet(((1u64 << k) - 1) as u32)
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_K);
        FeatureSet(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        FeatureSet(indices.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, feature: usize) -> bool {
        self.0 & (1 << feature) != 0
    }

    pub const fn is_subset(self, other: FeatureSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn union(self, other: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 | other.0)
    }

    pub const fn intersection(self, other: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 & other.0)
    }

    pub const fn difference(self, other: FeatureSet) -> FeatureSet {
        FeatureSet(self.0 & !other.0)
    }

    /// True if every feature index is below `k`.
    pub fn fits(self, k: usize) -> bool {
        k >= 32 || self.0 >> k == 0
    }

    /// Feature indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |i| mask & (1 << i) != 0)
    }

    /// All subsets (including the empty set and `self`), in no particular order.
    pub fn subsets(self) -> impl Iterator<Item = FeatureSet> {
        let full = self.0;
        let mut next = Some(full);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 {
                None
            } else {
                Some((cur - 1) & full)
            };
            Some(FeatureSet(cur))
        })
    }

    /// Name of the set under the given feature names: concatenated when every
    /// name is a single character (`AB`), space separated otherwise.
    pub fn name<S: AsRef<str>>(self, names: &[S]) -> String {
        if self.is_empty() {
            return "\u{2205}".to_string();
        }
        let single = names.iter().all(|n| n.as_ref().chars().count() == 1);
        let parts: Vec<&str> = self.indices().map(|i| names[i].as_ref()).collect();
        if single {
            parts.concat()
        } else {
            parts.join(" ")
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("\u{2205}");
        }
        for i in self.indices() {
            write!(f, "{}", feature_letter(i))?;
        }
        Ok(())
    }
}

/// Canonical order on subsets: by size, then lexicographic on index lists.
pub fn revlex_cmp(a: FeatureSet, b: FeatureSet) -> Ordering {
    a.len()
        .cmp(&b.len())
        // Among equal-size sets the one holding the lowest differing index
        // comes first, which is the larger bit-reversed mask.
        .then_with(|| b.0.reverse_bits().cmp(&a.0.reverse_bits()))
}

impl PartialOrd for FeatureSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FeatureSet {
    fn cmp(&self, other: &Self) -> Ordering {
        revlex_cmp(*self, *other)
    }
}

fn feature_letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

/// Default feature names `A`, `B`, `C`, ...
pub fn default_feature_names(k: usize) -> Vec<String> {
    (0..k).map(|i| feature_letter(i).to_string()).collect()
}

/// A cell of the sample space, identified with the set of present features.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Cell(FeatureSet);

impl Cell {
    pub const ZERO: Cell = Cell(FeatureSet::EMPTY);

    pub const fn new(phi: FeatureSet) -> Self {
        Cell(phi)
    }

    /// The set of features marked 1 in this cell.
    pub const fn phi(self) -> FeatureSet {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0.is_empty()
    }

    /// The 0-1 label, first feature first: `110` for `{A, B}` at `k = 3`.
    pub fn label(self, k: usize) -> String {
        (0..k)
            .map(|i| if self.0.contains(i) { '1' } else { '0' })
            .collect()
    }

    /// Parses a 0-1 label; the length fixes `k`.
    pub fn parse(label: &str) -> Result<Cell> {
        let k = label.len();
        if k == 0 || k > MAX_K {
            return Err(HasError::InvalidSubset(format!(
                "cell label '{label}' must have 1..={MAX_K} digits"
            )));
        }
        let mut mask = 0u32;
        for (i, ch) in label.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => mask |= 1 << i,
                _ => {
                    return Err(HasError::InvalidSubset(format!(
                        "cell label '{label}' may only contain 0 and 1"
                    )))
                }
            }
        }
        Ok(Cell(FeatureSet(mask)))
    }
}

/// Complete or incomplete Cartesian product.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "IP")]
    Ip,
    #[serde(rename = "CP")]
    Cp,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Ip => "IP",
            Space::Cp => "CP",
        })
    }
}

/// The cells of IP or CP over `k` features, in canonical order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct SampleSpace {
    k: usize,
    space: Space,
}

impl SampleSpace {
    pub fn new(k: usize, space: Space) -> Result<Self> {
        check_k(k)?;
        Ok(SampleSpace { k, space })
    }

    pub fn ip(k: usize) -> Result<Self> {
        Self::new(k, Space::Ip)
    }

    pub fn cp(k: usize) -> Result<Self> {
        Self::new(k, Space::Cp)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn with_space(&self, space: Space) -> SampleSpace {
        SampleSpace { k: self.k, space }
    }

    pub fn has_zero_cell(&self) -> bool {
        self.space == Space::Cp
    }

    /// Number of cells: `2^k - 1` on IP, `2^k` on CP.
    pub fn len(&self) -> usize {
        match self.space {
            Space::Ip => (1usize << self.k) - 1,
            Space::Cp => 1usize << self.k,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn full_set(&self) -> FeatureSet {
        FeatureSet::full(self.k)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.phi().fits(self.k) && (self.has_zero_cell() || !cell.is_zero())
    }

    /// Cells in canonical order.
    pub fn cells(&self) -> Vec<Cell> {
        revlex_subsets(self.k, self.has_zero_cell())
            .into_iter()
            .map(Cell)
            .collect()
    }

    /// Position of a cell in canonical order.
    pub fn index_of(&self, cell: Cell) -> Option<usize> {
        if !self.contains(cell) {
            return None;
        }
        let set = cell.phi();
        if set.is_empty() {
            return Some(0);
        }
        let base = usize::from(self.has_zero_cell());
        let m = set.len();
        let below: usize = (1..m).map(|g| binomial(self.k, g)).sum();
        Some(base + below + lex_rank(set, self.k))
    }

    /// Maps a vector in canonical cell order onto an array indexed by cell mask
    /// (length `2^k`); a missing zero cell is filled with `fill`.
    pub fn to_mask_order<T: Clone>(&self, values: &[T], fill: T) -> Vec<T> {
        debug_assert_eq!(values.len(), self.len());
        let mut out = vec![fill; 1usize << self.k];
        for (cell, v) in self.cells().into_iter().zip(values) {
            out[cell.phi().mask() as usize] = v.clone();
        }
        out
    }

    /// Inverse of [`SampleSpace::to_mask_order`].
    pub fn from_mask_order<T: Clone>(&self, by_mask: &[T]) -> Vec<T> {
        self.cells()
            .into_iter()
            .map(|c| by_mask[c.phi().mask() as usize].clone())
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.cells().into_iter().map(|c| c.label(self.k)).collect()
    }
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        Err(HasError::FeatureCount(k))
    } else {
        Ok(())
    }
}

pub(crate) fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u64 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc as usize
}

/// Rank of `set` among the subsets of the same size in lexicographic order.
fn lex_rank(set: FeatureSet, k: usize) -> usize {
    let m = set.len();
    let mut rank = 0;
    let mut prev: isize = -1;
    for (j, c) in set.indices().enumerate() {
        for x in (prev + 1) as usize..c {
            rank += binomial(k - 1 - x, m - 1 - j);
        }
        prev = c as isize;
    }
    rank
}

/// All subsets of `{0..k}` in canonical order, optionally led by the empty set.
pub fn revlex_subsets(k: usize, include_empty: bool) -> Vec<FeatureSet> {
    let mut out = Vec::with_capacity(1usize << k);
    if include_empty {
        out.push(FeatureSet::EMPTY);
    }
    for m in 1..=k {
        let mut comb: Vec<usize> = (0..m).collect();
        loop {
            out.push(FeatureSet::from_indices(comb.iter().copied()));
            let Some(i) = (0..m).rev().find(|&i| comb[i] < k - m + i) else {
                break;
            };
            comb[i] += 1;
            for j in i + 1..m {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    out
}

/// The `2^k - 1` cells of the incomplete product in canonical order.
pub fn revlex_cells(k: usize) -> Result<Vec<Cell>> {
    Ok(SampleSpace::ip(k)?.cells())
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum ClassKind {
    Ascending,
    Descending,
}

/// A family of nonempty feature subsets closed upwards (ascending) or
/// downwards within the nonempty subsets (descending).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SubsetClass {
    k: usize,
    kind: ClassKind,
    members: Vec<FeatureSet>,
}

impl SubsetClass {
    fn from_sorted(k: usize, kind: ClassKind, mut members: Vec<FeatureSet>) -> Self {
        members.sort();
        members.dedup();
        SubsetClass { k, kind, members }
    }

    /// Builds a class from an explicit member list, checking closure.
    pub fn new(k: usize, kind: ClassKind, members: Vec<FeatureSet>) -> Result<Self> {
        check_k(k)?;
        for &m in &members {
            if m.is_empty() {
                return Err(HasError::InvalidClass(
                    "the empty set is never a member".into(),
                ));
            }
            if !m.fits(k) {
                return Err(HasError::InvalidSubset(format!(
                    "{m} uses features beyond k = {k}"
                )));
            }
        }
        let class = Self::from_sorted(k, kind, members);
        let closed = match kind {
            ClassKind::Ascending => class.is_ascending(),
            ClassKind::Descending => class.is_descending(),
        };
        if !closed {
            return Err(HasError::InvalidClass(format!("members are not {kind:?}")));
        }
        Ok(class)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    pub fn members(&self) -> &[FeatureSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, set: FeatureSet) -> bool {
        self.members.binary_search(&set).is_ok()
    }

    /// True if the class holds every nonempty subset.
    pub fn is_exhaustive(&self) -> bool {
        self.members.len() == (1usize << self.k) - 1
    }

    /// Closure predicate: supersets of members are members.
    pub fn is_ascending(&self) -> bool {
        self.members.iter().all(|&s| {
            (0..self.k)
                .filter(|&i| !s.contains(i))
                .all(|i| self.contains(s.union(FeatureSet::singleton(i))))
        })
    }

    /// Closure predicate: nonempty subsets of members are members.
    pub fn is_descending(&self) -> bool {
        self.members.iter().all(|&s| {
            s.indices().all(|i| {
                let sub = s.difference(FeatureSet::singleton(i));
                sub.is_empty() || self.contains(sub)
            })
        })
    }

    /// Members with no proper subset in the class.
    pub fn minimal_elements(&self) -> Vec<FeatureSet> {
        self.members
            .iter()
            .copied()
            .filter(|&s| !self.members.iter().any(|&t| t != s && t.is_subset(s)))
            .collect()
    }

    /// Members with no proper superset in the class.
    pub fn maximal_elements(&self) -> Vec<FeatureSet> {
        self.members
            .iter()
            .copied()
            .filter(|&s| !self.members.iter().any(|&t| t != s && s.is_subset(t)))
            .collect()
    }

    /// The nonempty subsets outside this class, with the opposite kind.
    pub fn complement(&self) -> SubsetClass {
        let kind = match self.kind {
            ClassKind::Ascending => ClassKind::Descending,
            ClassKind::Descending => ClassKind::Ascending,
        };
        let members = revlex_subsets(self.k, false)
            .into_iter()
            .filter(|&s| !self.contains(s))
            .collect();
        SubsetClass {
            k: self.k,
            kind,
            members,
        }
    }
}

fn check_seeds(seeds: &[FeatureSet], k: usize, what: &str) -> Result<()> {
    check_k(k)?;
    if seeds.is_empty() {
        return Err(HasError::InvalidClass(format!("{what} set is empty")));
    }
    for &s in seeds {
        if s.is_empty() {
            return Err(HasError::InvalidClass(format!(
                "{what} contains the empty set"
            )));
        }
        if !s.fits(k) {
            return Err(HasError::InvalidSubset(format!(
                "{s} uses features beyond k = {k}"
            )));
        }
    }
    Ok(())
}

/// Smallest ascending class containing every seed.
pub fn ascending_closure(seeds: &[FeatureSet], k: usize) -> Result<SubsetClass> {
    check_seeds(seeds, k, "seed")?;
    let members = revlex_subsets(k, false)
        .into_iter()
        .filter(|&t| seeds.iter().any(|&s| s.is_subset(t)))
        .collect();
    Ok(SubsetClass {
        k,
        kind: ClassKind::Ascending,
        members,
    })
}

/// Smallest descending class containing every generator (the generating
/// class of a hierarchical model).
pub fn descending_closure(generators: &[FeatureSet], k: usize) -> Result<SubsetClass> {
    check_seeds(generators, k, "generator")?;
    let members = revlex_subsets(k, false)
        .into_iter()
        .filter(|&t| generators.iter().any(|&g| t.is_subset(g)))
        .collect();
    Ok(SubsetClass {
        k,
        kind: ClassKind::Descending,
        members,
    })
}

/// The descending class of nonempty subsets outside an ascending class.
pub fn descending_complement(asc: &SubsetClass) -> Result<SubsetClass> {
    if asc.kind != ClassKind::Ascending {
        return Err(HasError::InvalidClass("expected an ascending class".into()));
    }
    Ok(asc.complement())
}

/// Cells below a reference subset, split by parity of the number of present
/// features relative to the reference.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParitySplit {
    pub reference: FeatureSet,
    pub same_parity: Vec<Cell>,
    pub diff_parity: Vec<Cell>,
}

pub fn parity_split(reference: FeatureSet, k: usize) -> Result<ParitySplit> {
    check_k(k)?;
    if reference.is_empty() {
        return Err(HasError::InvalidSubset(
            "parity reference must be nonempty".into(),
        ));
    }
    if !reference.fits(k) {
        return Err(HasError::InvalidSubset(format!(
            "{reference} uses features beyond k = {k}"
        )));
    }
    let mut subs: Vec<FeatureSet> = reference.subsets().filter(|s| !s.is_empty()).collect();
    subs.sort();
    let parity = reference.len() % 2;
    let (same, diff): (Vec<FeatureSet>, Vec<FeatureSet>) =
        subs.into_iter().partition(|s| s.len() % 2 == parity);
    Ok(ParitySplit {
        reference,
        same_parity: same.into_iter().map(Cell::new).collect(),
        diff_parity: diff.into_iter().map(Cell::new).collect(),
    })
}
