//! Maximum likelihood fitting under multinomial sampling and goodness-of-fit
//! statistics.

mod ipf;
mod stats;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{HasError, Result};
use crate::lattice::{Cell, FeatureSet, SampleSpace, Space};
use crate::models::{Model, ModelKind};
use crate::param::{corner_params, Distribution};

pub use ipf::{bregman_project, gipf, GipfOutcome, Projection};
pub use stats::{chisq_sf, gamma_q, ln_gamma};

/// What to do with zero observed counts.
#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub enum ZeroPolicy {
    /// Refuse to fit; the MLE may not exist.
    #[default]
    Error,
    /// Replace each zero count by the given positive value.
    Epsilon(f64),
}

impl ZeroPolicy {
    pub const DEFAULT_EPSILON: f64 = 0.5;
}

#[derive(Clone, PartialEq, Debug)]
pub struct FitOptions {
    /// Max relative subset-sum residual for the inner projection.
    pub tol_inner: f64,
    /// Tolerance on `|1'p - 1|` for the outer search.
    pub tol_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub zero_policy: ZeroPolicy,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol_inner: 1e-10,
            tol_outer: 1e-10,
            max_inner: 100_000,
            max_outer: 200,
            zero_policy: ZeroPolicy::Error,
        }
    }
}

/// Nonnegative cell counts on IP or CP, in canonical cell order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ObservedCounts {
    space: SampleSpace,
    counts: Vec<u64>,
}

impl ObservedCounts {
    pub fn new(space: SampleSpace, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != space.len() {
            return Err(HasError::Dimension(format!(
                "{} counts for {} cells",
                counts.len(),
                space.len()
            )));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| HasError::InvalidCounts("total count overflows".into()))?;
        if total == 0 {
            return Err(HasError::InvalidCounts("total count is zero".into()));
        }
        Ok(ObservedCounts { space, counts })
    }

    /// Builds counts from `(cell, count)` pairs; cells not listed are zero.
    pub fn from_pairs<I: IntoIterator<Item = (Cell, u64)>>(
        space: SampleSpace,
        pairs: I,
    ) -> Result<Self> {
        let mut counts = vec![0u64; space.len()];
        let mut seen = vec![false; space.len()];
        for (cell, n) in pairs {
            let i = space.index_of(cell).ok_or_else(|| {
                HasError::InvalidCounts(format!(
                    "cell {} is not in {}",
                    cell.label(space.k()),
                    space.space()
                ))
            })?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(HasError::InvalidCounts(format!(
                    "duplicate cell {}",
                    cell.label(space.k())
                )));
            }
            counts[i] = n;
        }
        Self::new(space, counts)
    }

    pub fn space(&self) -> SampleSpace {
        self.space
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts as reals after applying the zero policy, and whether any were replaced.
    pub fn adjusted(&self, policy: ZeroPolicy) -> Result<(Vec<f64>, bool)> {
        let mut adjusted = false;
        let mut out = Vec::with_capacity(self.counts.len());
        for (i, &n) in self.counts.iter().enumerate() {
            if n > 0 {
                out.push(n as f64);
                continue;
            }
            match policy {
                ZeroPolicy::Error => {
                    return Err(HasError::ZeroCount {
                        cell: self.space.cells()[i].label(self.space.k()),
                    })
                }
                ZeroPolicy::Epsilon(v) => {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(HasError::InvalidArgument(format!(
                            "zero replacement {v} must be positive"
                        )));
                    }
                    out.push(v);
                    adjusted = true;
                }
            }
        }
        Ok((out, adjusted))
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Convergence {
    /// Inner proportional-fitting sweeps, summed over the outer search.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub max_residual: f64,
    pub converged: bool,
}

/// Result of a maximum likelihood fit.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(into = "FitDocument", try_from = "FitDocument")]
pub struct FitResult {
    pub kind: ModelKind,
    pub space: SampleSpace,
    /// Fitted probabilities in canonical cell order.
    pub p_hat: Vec<f64>,
    pub gamma: f64,
    /// Model parameters: coefficients of the design rows in `log p_hat = A' beta`.
    pub beta_hat: Vec<(FeatureSet, f64)>,
    /// Total count used (after any zero replacement).
    pub n_total: f64,
    pub x2: f64,
    pub g2: f64,
    pub df: usize,
    pub p_value_x2: f64,
    pub p_value_g2: f64,
    pub convergence: Convergence,
    pub zero_adjusted: bool,
}

impl FitResult {
    /// Expected counts `N p_hat`.
    pub fn expected(&self) -> Vec<f64> {
        self.p_hat.iter().map(|p| p * self.n_total).collect()
    }
}

/// Upper-tail p-value, taking 1 when there are no degrees of freedom.
pub fn p_value(stat: f64, df: usize) -> Result<f64> {
    if df == 0 {
        Ok(1.0)
    } else {
        chisq_sf(stat.max(0.0), df)
    }
}

/// Coefficients of the design rows in `log p = A' beta` for a model member `p`.
pub fn model_params(p: &Distribution, model: &Model) -> Result<Vec<(FeatureSet, f64)>> {
    let corner = corner_params(p)?;
    let rows = model.design().rows();
    let k = model.k();
    let overall = match model.kind() {
        ModelKind::Qll => {
            let full = corner
                .get(FeatureSet::full(k))
                .expect("full set has a parameter");
            if k % 2 == 1 {
                full
            } else {
                -full
            }
        }
        _ => 0.0,
    };
    Ok(rows
        .iter()
        .map(|&r| {
            let v = if r.is_empty() {
                match model.kind() {
                    ModelKind::Qll => overall,
                    _ => corner.get(r).unwrap_or(0.0),
                }
            } else {
                let sign = if r.len() % 2 == 1 { 1.0 } else { -1.0 };
                corner.get(r).unwrap_or(0.0) - overall * sign
            };
            (r, v)
        })
        .collect())
}

/// Maximum likelihood estimate of the model from observed counts.
pub fn mle(counts: &ObservedCounts, model: &Model, opts: &FitOptions) -> Result<FitResult> {
    if counts.space() != model.space() {
        return Err(HasError::Dimension(format!(
            "counts are on {} with k = {}, model on {} with k = {}",
            counts.space().space(),
            counts.space().k(),
            model.space().space(),
            model.k()
        )));
    }
    let (n, zero_adjusted) = counts.adjusted(opts.zero_policy)?;
    let total: f64 = n.iter().sum();
    let q: Vec<f64> = n.iter().map(|v| v / total).collect();
    let fit = gipf(&q, model, opts)?;

    let mut x2 = 0.0;
    let mut g2 = 0.0;
    for (&obs, &p) in n.iter().zip(&fit.p) {
        let e = total * p;
        x2 += (obs - e) * (obs - e) / e;
        if obs > 0.0 {
            g2 += obs * (obs / e).ln();
        }
    }
    g2 *= 2.0;
    let df = model.df();
    let dist = Distribution::from_weights(model.space(), &fit.p)?;
    let beta_hat = model_params(&dist, model)?;
    Ok(FitResult {
        kind: model.kind(),
        space: model.space(),
        p_hat: fit.p,
        gamma: fit.gamma,
        beta_hat,
        n_total: total,
        x2,
        g2,
        df,
        p_value_x2: p_value(x2, df)?,
        p_value_g2: p_value(g2, df)?,
        convergence: Convergence {
            iterations: fit.sweeps,
            outer_iterations: fit.outer_iterations,
            max_residual: fit.residual,
            converged: true,
        },
        zero_adjusted,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PValuesDocument {
    #[serde(rename = "X2")]
    x2: f64,
    #[serde(rename = "G2")]
    g2: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ConvergenceDocument {
    iterations: usize,
    outer_iterations: usize,
    max_residual: f64,
    converged: bool,
}

/// Stable JSON layout of a [`FitResult`].
#[derive(Clone, Debug, Serialize, Deserialize)]
struct FitDocument {
    kind: ModelKind,
    space: Space,
    k: usize,
    fitted: IndexMap<String, f64>,
    gamma: f64,
    beta_hat: IndexMap<String, f64>,
    total: f64,
    #[serde(rename = "X2")]
    x2: f64,
    #[serde(rename = "G2")]
    g2: f64,
    df: usize,
    p_values: PValuesDocument,
    convergence: ConvergenceDocument,
    zero_adjusted: bool,
}

fn subset_key(set: FeatureSet) -> String {
    if set.is_empty() {
        "\u{2205}".to_string()
    } else {
        set.to_string()
    }
}

fn parse_subset_key(key: &str, k: usize) -> Result<FeatureSet> {
    if key == "\u{2205}" {
        return Ok(FeatureSet::EMPTY);
    }
    let mut set = FeatureSet::EMPTY;
    for ch in key.chars() {
        let i = (ch as usize).wrapping_sub('A' as usize);
        if i >= k {
            return Err(HasError::InvalidSubset(format!(
                "'{key}' is not a subset name"
            )));
        }
        set = set.union(FeatureSet::singleton(i));
    }
    Ok(set)
}

impl From<FitResult> for FitDocument {
    fn from(r: FitResult) -> Self {
        let k = r.space.k();
        FitDocument {
            kind: r.kind,
            space: r.space.space(),
            k,
            fitted: r
                .space
                .cells()
                .iter()
                .zip(&r.p_hat)
                .map(|(c, &p)| (c.label(k), p))
                .collect(),
            gamma: r.gamma,
            beta_hat: r
                .beta_hat
                .iter()
                .map(|&(s, v)| (subset_key(s), v))
                .collect(),
            total: r.n_total,
            x2: r.x2,
            g2: r.g2,
            df: r.df,
            p_values: PValuesDocument {
                x2: r.p_value_x2,
                g2: r.p_value_g2,
            },
            convergence: ConvergenceDocument {
                iterations: r.convergence.iterations,
                outer_iterations: r.convergence.outer_iterations,
                max_residual: r.convergence.max_residual,
                converged: r.convergence.converged,
            },
            zero_adjusted: r.zero_adjusted,
        }
    }
}

impl TryFrom<FitDocument> for FitResult {
    type Error = HasError;

    fn try_from(d: FitDocument) -> Result<Self> {
        let space = SampleSpace::new(d.k, d.space)?;
        let mut p_hat = vec![f64::NAN; space.len()];
        for (label, p) in &d.fitted {
            let cell = Cell::parse(label)?;
            let i = space
                .index_of(cell)
                .filter(|_| label.len() == d.k)
                .ok_or_else(|| {
                    HasError::InvalidSubset(format!("cell {label} is not in the space"))
                })?;
            p_hat[i] = *p;
        }
        if p_hat.iter().any(|p| p.is_nan()) {
            return Err(HasError::Dimension(
                "fitted probabilities are missing cells".into(),
            ));
        }
        let beta_hat = d
            .beta_hat
            .iter()
            .map(|(key, &v)| Ok((parse_subset_key(key, d.k)?, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FitResult {
            kind: d.kind,
            space,
            p_hat,
            gamma: d.gamma,
            beta_hat,
            n_total: d.total,
            x2: d.x2,
            g2: d.g2,
            df: d.df,
            p_value_x2: d.p_values.x2,
            p_value_g2: d.p_values.g2,
            convergence: Convergence {
                iterations: d.convergence.iterations,
                outer_iterations: d.convergence.outer_iterations,
                max_residual: d.convergence.max_residual,
                converged: d.convergence.converged,
            },
            zero_adjusted: d.zero_adjusted,
        })
    }
}
