//! Corner, mean-value and mixed parameterizations on IP and CP.
//!
//! The corner design matrix has one row per feature subset and one column per
//! cell, with entry 1 iff the row subset is contained in the cell's subset.
//! Products with it (and with its closed-form inverse) are computed as subset
//! lattice transforms over arrays indexed by cell mask, so they never need the
//! dense matrix.

use std::ops::{AddAssign, Div, SubAssign};

use num_traits::Zero;

use crate::error::{HasError, Result};
use crate::lattice::{
    check_k, revlex_subsets, Cell, ClassKind, FeatureSet, SampleSpace, Space, SubsetClass,
};
use crate::linalg::IntMatrix;

/// Largest `k` for which dense matrices are materialized.
pub const MAX_DENSE_K: usize = 14;

/// Absolute tolerance on `sum(p) = 1` when validating distributions.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Superset-sum (zeta) transform in place: `a[m] <- sum of a[s]` over `s ⊇ m`.
pub fn superset_sums<T: Clone + AddAssign>(a: &mut [T], k: usize) {
    debug_assert_eq!(a.len(), 1 << k);
    for i in 0..k {
        let bit = 1 << i;
        for m in 0..a.len() {
            if m & bit == 0 {
                let v = a[m | bit].clone();
                a[m] += v;
            }
        }
    }
}

/// Inverse of [`superset_sums`].
pub fn inverse_superset_sums<T: Clone + SubAssign>(a: &mut [T], k: usize) {
    debug_assert_eq!(a.len(), 1 << k);
    for i in 0..k {
        let bit = 1 << i;
        for m in 0..a.len() {
            if m & bit == 0 {
                let v = a[m | bit].clone();
                a[m] -= v;
            }
        }
    }
}

/// Subset Möbius transform in place: `a[m] <- sum of (-1)^{|m \ s|} a[s]` over `s ⊆ m`.
pub fn subset_mobius<T: Clone + SubAssign>(a: &mut [T], k: usize) {
    debug_assert_eq!(a.len(), 1 << k);
    for i in 0..k {
        let bit = 1 << i;
        for m in 0..a.len() {
            if m & bit != 0 {
                let v = a[m ^ bit].clone();
                a[m] -= v;
            }
        }
    }
}

/// Subset-sum transform in place: `a[m] <- sum of a[s]` over `s ⊆ m`.
pub fn subset_sums<T: Clone + AddAssign>(a: &mut [T], k: usize) {
    debug_assert_eq!(a.len(), 1 << k);
    for i in 0..k {
        let bit = 1 << i;
        for m in 0..a.len() {
            if m & bit != 0 {
                let v = a[m ^ bit].clone();
                a[m] += v;
            }
        }
    }
}

/// A 0-1 matrix with rows indexed by feature subsets and columns by cells;
/// the entry is 1 iff the row subset is contained in the cell's subset. The
/// empty subset labels the overall-effect row of all ones.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DesignMatrix {
    space: SampleSpace,
    rows: Vec<FeatureSet>,
}

impl DesignMatrix {
    pub fn new(space: SampleSpace, rows: Vec<FeatureSet>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| !r.fits(space.k())) {
            return Err(HasError::InvalidSubset(format!(
                "row {r} uses features beyond k = {}",
                space.k()
            )));
        }
        Ok(DesignMatrix { space, rows })
    }

    pub fn space(&self) -> SampleSpace {
        self.space
    }

    pub fn k(&self) -> usize {
        self.space.k()
    }

    pub fn rows(&self) -> &[FeatureSet] {
        &self.rows
    }

    pub fn cols(&self) -> Vec<Cell> {
        self.space.cells()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.space.len()
    }

    pub fn entry(&self, row: usize, cell: Cell) -> u8 {
        u8::from(self.rows[row].is_subset(cell.phi()))
    }

    /// True if some row is the all-ones overall-effect row.
    pub fn has_ones_row(&self) -> bool {
        self.rows.iter().any(|r| r.is_empty())
    }

    /// Column indices (canonical cell positions) where row `r` is 1.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        let set = self.rows[r];
        self.space
            .cells()
            .iter()
            .enumerate()
            .filter(|(_, c)| set.is_subset(c.phi()))
            .map(|(i, _)| i)
            .collect()
    }

    /// The same matrix with an overall-effect row prepended.
    pub fn with_overall_effect(&self) -> DesignMatrix {
        let mut rows = Vec::with_capacity(self.rows.len() + 1);
        rows.push(FeatureSet::EMPTY);
        rows.extend(self.rows.iter().copied().filter(|r| !r.is_empty()));
        DesignMatrix {
            space: self.space,
            rows,
        }
    }

    /// Product `A x` for `x` in canonical cell order.
    pub fn apply<T: Clone + Zero + AddAssign>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.ncols() {
            return Err(HasError::Dimension(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.ncols()
            )));
        }
        let k = self.k();
        let mut a = self.space.to_mask_order(x, T::zero());
        superset_sums(&mut a, k);
        Ok(self
            .rows
            .iter()
            .map(|r| a[r.mask() as usize].clone())
            .collect())
    }

    /// Dense integer form, available for `k <= MAX_DENSE_K`.
    pub fn to_dense(&self) -> Result<IntMatrix> {
        if self.k() > MAX_DENSE_K {
            return Err(HasError::DenseTooLarge(self.k()));
        }
        let cols = self.cols();
        let mut m = IntMatrix::zeros(self.nrows(), cols.len());
        for (r, set) in self.rows.iter().enumerate() {
            for (c, cell) in cols.iter().enumerate() {
                if set.is_subset(cell.phi()) {
                    m.set(r, c, 1);
                }
            }
        }
        Ok(m)
    }
}

/// The full corner design matrix: `S` on IP, `T` (with the overall-effect row
/// and the zero-cell column) on CP.
pub fn build_design(k: usize, space: Space) -> Result<DesignMatrix> {
    let ss = SampleSpace::new(k, space)?;
    let rows = revlex_subsets(k, space == Space::Cp);
    Ok(DesignMatrix { space: ss, rows })
}

/// Closed-form inverses `((S')^{-1}, S^{-1})` of the IP corner matrix.
pub fn invert_corner(k: usize) -> Result<(IntMatrix, IntMatrix)> {
    check_k(k)?;
    if k > MAX_DENSE_K {
        return Err(HasError::DenseTooLarge(k));
    }
    let subsets = revlex_subsets(k, false);
    let n = subsets.len();
    let mut inv = IntMatrix::zeros(n, n);
    for (j, &row) in subsets.iter().enumerate() {
        for (i, &col) in subsets.iter().enumerate().skip(j) {
            if row.is_subset(col) {
                let sign = if col.difference(row).len() % 2 == 0 {
                    1
                } else {
                    -1
                };
                inv.set(j, i, sign);
            }
        }
    }
    Ok((inv.transpose(), inv))
}

/// A strictly positive probability vector on IP or CP, in canonical cell order.
#[derive(Clone, PartialEq, Debug)]
pub struct Distribution {
    space: SampleSpace,
    p: Vec<f64>,
}

impl Distribution {
    pub fn new(space: SampleSpace, p: Vec<f64>) -> Result<Self> {
        if p.len() != space.len() {
            return Err(HasError::Dimension(format!(
                "{} probabilities for {} cells",
                p.len(),
                space.len()
            )));
        }
        if let Some(i) = p.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(HasError::InvalidDistribution(format!(
                "probability of cell {} is {}",
                space.cells()[i].label(space.k()),
                p[i]
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(HasError::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Distribution { space, p })
    }

    /// Normalizes positive weights into a distribution.
    pub fn from_weights(space: SampleSpace, w: &[f64]) -> Result<Self> {
        let total: f64 = w.iter().sum();
        Self::new(space, w.iter().map(|v| v / total).collect())
    }

    pub fn space(&self) -> SampleSpace {
        self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.p
    }

    pub fn prob(&self, cell: Cell) -> Option<f64> {
        self.space.index_of(cell).map(|i| self.p[i])
    }

    /// Log probabilities indexed by cell mask; a missing zero cell holds 0.
    pub(crate) fn log_by_mask(&self) -> Vec<f64> {
        let logs: Vec<f64> = self.p.iter().map(|v| v.ln()).collect();
        self.space.to_mask_order(&logs, 0.0)
    }
}

/// Values attached to the feature subsets indexing the rows of a design.
#[derive(Clone, PartialEq, Debug)]
pub struct SubsetValues {
    space: SampleSpace,
    subsets: Vec<FeatureSet>,
    values: Vec<f64>,
}

impl SubsetValues {
    pub fn space(&self) -> SampleSpace {
        self.space
    }

    pub fn subsets(&self) -> &[FeatureSet] {
        &self.subsets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, set: FeatureSet) -> Option<f64> {
        self.subsets
            .binary_search(&set)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureSet, f64)> + '_ {
        self.subsets
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }
}

/// Corner parameters: `log p = S' beta`, with the overall effect `beta_∅` on CP.
pub type CornerParams = SubsetValues;

/// Mean-value parameters (subset sums) `mu = S p`; on CP also `mu_∅ = 1`.
pub type MeanParams = SubsetValues;

pub fn corner_params(p: &Distribution) -> Result<CornerParams> {
    let ss = p.space();
    let mut a = p.log_by_mask();
    subset_mobius(&mut a, ss.k());
    let subsets = revlex_subsets(ss.k(), ss.has_zero_cell());
    let values = subsets.iter().map(|s| a[s.mask() as usize]).collect();
    Ok(SubsetValues {
        space: ss,
        subsets,
        values,
    })
}

pub fn mean_params(p: &Distribution) -> Result<MeanParams> {
    let ss = p.space();
    let design = build_design(ss.k(), ss.space())?;
    let values = design.apply(p.probs())?;
    Ok(SubsetValues {
        space: ss,
        subsets: design.rows,
        values,
    })
}

/// Recovers cell probabilities from subset sums, `p = S^{-1} mu`.
pub fn probabilities_from_mean(mu: &MeanParams) -> Vec<f64> {
    probabilities_from_subset_sums(mu.space, &mu.subsets, &mu.values)
}

/// Generic `p = S^{-1} mu` for subset sums listed in canonical order.
pub fn probabilities_from_subset_sums<T: Clone + Zero + SubAssign>(
    space: SampleSpace,
    subsets: &[FeatureSet],
    mu: &[T],
) -> Vec<T> {
    let k = space.k();
    let mut a = vec![T::zero(); 1 << k];
    for (s, v) in subsets.iter().zip(mu) {
        a[s.mask() as usize] = v.clone();
    }
    inverse_superset_sums(&mut a, k);
    space.from_mask_order(&a)
}

/// Which value the features outside the ratio's subset are held at.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Conditioning {
    /// Remaining features absent (ASR / CASR).
    Zero,
    /// Remaining features present (conditional odds ratio).
    One,
}

/// Log of the alternating product over the cells `present ∪ W`, `W ⊆ v`,
/// with sign `(-1)^{|v \ W|}`. The zero cell is skipped on IP.
pub fn log_conditional_ratio(p: &Distribution, v: FeatureSet, present: FeatureSet) -> Result<f64> {
    let ss = p.space();
    let k = ss.k();
    if v.is_empty() || !v.fits(k) || !present.fits(k) {
        return Err(HasError::InvalidSubset(format!(
            "{v} is not a nonempty subset for k = {k}"
        )));
    }
    if !v.intersection(present).is_empty() {
        return Err(HasError::InvalidSubset(format!(
            "conditioning set {present} overlaps {v}"
        )));
    }
    let logs = p.log_by_mask();
    let mut acc = 0.0;
    for w in v.subsets() {
        let cell = w.union(present);
        if cell.is_empty() && !ss.has_zero_cell() {
            continue;
        }
        let term = logs[cell.mask() as usize];
        if v.difference(w).len() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// Log of the generalized odds ratio of `v`, conditioned on the other
/// features being all 0 or all 1.
pub fn log_generalized_ratio(
    p: &Distribution,
    v: FeatureSet,
    conditioning: Conditioning,
) -> Result<f64> {
    let k = p.space().k();
    let present = match conditioning {
        Conditioning::Zero => FeatureSet::EMPTY,
        Conditioning::One => {
            if v.len() < 2 {
                return Err(HasError::InvalidSubset(format!(
                    "conditional odds ratio needs at least two features, got {v}"
                )));
            }
            let rest = FeatureSet::full(k).difference(v);
            if rest.is_empty() && !p.space().has_zero_cell() {
                return Err(HasError::InvalidSubset(
                    "the odds ratio of all features needs the zero cell".into(),
                ));
            }
            rest
        }
    };
    log_conditional_ratio(p, v, present)
}

pub fn generalized_ratio(
    p: &Distribution,
    v: FeatureSet,
    conditioning: Conditioning,
) -> Result<f64> {
    log_generalized_ratio(p, v, conditioning).map(f64::exp)
}

/// The descending-class rows `A` of `S` and the matching columns `D` of the
/// closed-form `S^{-1}`.
#[derive(Clone, Debug)]
pub struct MixedSplit {
    pub a: DesignMatrix,
    pub d: IntMatrix,
}

pub fn mixed_split(asc: &SubsetClass) -> Result<MixedSplit> {
    if asc.kind() != ClassKind::Ascending {
        return Err(HasError::InvalidClass("expected an ascending class".into()));
    }
    if asc.is_empty() || asc.is_exhaustive() {
        return Err(HasError::InvalidClass(
            "ascending class must be nonempty and proper".into(),
        ));
    }
    let k = asc.k();
    let (_, inv) = invert_corner(k)?;
    let des = asc.complement();
    let ss = SampleSpace::ip(k)?;
    let a = DesignMatrix::new(ss, des.members().to_vec())?;
    let mut d = IntMatrix::zeros(ss.len(), asc.len());
    for (c, &set) in asc.members().iter().enumerate() {
        let col = ss.index_of(Cell::new(set)).expect("member is a cell");
        for r in 0..ss.len() {
            d.set(r, c, inv.get(r, col));
        }
    }
    Ok(MixedSplit { a, d })
}

/// Subset sums split into a scale `nu1` and a direction `nu2`, `nu1 * nu2 = A p`.
#[derive(Clone, PartialEq, Debug)]
pub struct ExtendedMean<T = f64> {
    pub nu1: T,
    pub nu2: Vec<T>,
}

impl<T: Clone + std::ops::Mul<Output = T>> ExtendedMean<T> {
    pub fn reconstruct(&self) -> Vec<T> {
        self.nu2
            .iter()
            .map(|v| self.nu1.clone() * v.clone())
            .collect()
    }
}

pub fn extended_mean<T>(p: &[T], a: &DesignMatrix, scale_hint: T) -> Result<ExtendedMean<T>>
where
    T: Clone + Zero + AddAssign + Div<Output = T> + PartialOrd,
{
    if !(scale_hint > T::zero()) {
        return Err(HasError::InvalidArgument("scale must be positive".into()));
    }
    if p.iter().any(|v| !(*v > T::zero())) {
        return Err(HasError::InvalidDistribution(
            "entries must be positive".into(),
        ));
    }
    let mu = a.apply(p)?;
    let nu2 = mu.into_iter().map(|m| m / scale_hint.clone()).collect();
    Ok(ExtendedMean {
        nu1: scale_hint,
        nu2,
    })
}
