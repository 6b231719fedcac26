//! HAS, QLL and LL models generated by an ascending class.

mod generators;
mod notation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HasError, Result};
use crate::lattice::{ClassKind, FeatureSet, SampleSpace, Space, SubsetClass};
use crate::linalg::{in_row_space, kernel_basis, rank, IntMatrix};
use crate::param::DesignMatrix;

pub use generators::{
    binomial_generators, dehomogenize, generator_from_vector, homogenize, BinomialGenerator,
    Direction,
};
pub use notation::{generating_class_name, parse_model};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Has,
    Qll,
    Ll,
}

impl ModelKind {
    /// Sample space the model lives on.
    pub fn space(self) -> Space {
        match self {
            ModelKind::Has | ModelKind::Qll => Space::Ip,
            ModelKind::Ll => Space::Cp,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Has => "HAS",
            ModelKind::Qll => "QLL",
            ModelKind::Ll => "LL",
        })
    }
}

impl FromStr for ModelKind {
    type Err = HasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "has" => Ok(ModelKind::Has),
            "qll" => Ok(ModelKind::Qll),
            "ll" => Ok(ModelKind::Ll),
            _ => Err(HasError::InvalidArgument(format!(
                "unknown model kind '{s}'"
            ))),
        }
    }
}

/// A model kind together with the ascending class of restricted subsets.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ModelSpec {
    kind: ModelKind,
    asc: SubsetClass,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, asc: SubsetClass) -> Result<Self> {
        if asc.kind() != ClassKind::Ascending {
            return Err(HasError::InvalidModel(
                "model needs an ascending class".into(),
            ));
        }
        if asc.is_empty() {
            return Err(HasError::InvalidModel("ascending class is empty".into()));
        }
        if asc.is_exhaustive() && kind != ModelKind::Qll {
            return Err(HasError::InvalidModel(format!(
                "{kind} model cannot restrict every subset"
            )));
        }
        Ok(ModelSpec { kind, asc })
    }

    /// Parses bracket notation or a JSON ascending class, see [`parse_model`].
    pub fn parse<S: AsRef<str>>(kind: ModelKind, text: &str, names: &[S]) -> Result<Self> {
        Self::new(kind, parse_model(text, names)?)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.asc.k()
    }

    pub fn asc(&self) -> &SubsetClass {
        &self.asc
    }

    pub fn des(&self) -> SubsetClass {
        self.asc.complement()
    }

    pub fn space(&self) -> Result<SampleSpace> {
        SampleSpace::new(self.k(), self.kind.space())
    }

    /// Bracket name of the generating class, e.g. `[AC][BC]`.
    pub fn name<S: AsRef<str>>(&self, names: &[S]) -> String {
        generating_class_name(&self.des(), names)
    }

    /// The design matrix: `A` (HAS), `A1` (QLL) or `A0` (LL).
    pub fn design(&self) -> Result<DesignMatrix> {
        let des = self.des();
        let mut rows = Vec::with_capacity(des.len() + 1);
        if self.kind != ModelKind::Has {
            rows.push(FeatureSet::EMPTY);
        }
        rows.extend_from_slice(des.members());
        DesignMatrix::new(self.space()?, rows)
    }
}

/// A built model with its design matrix, kernel basis and degrees of freedom.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    design: DesignMatrix,
    kernel: IntMatrix,
    rank: usize,
    df: usize,
    overall_effect: bool,
    witness: Option<Vec<i64>>,
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn k(&self) -> usize {
        self.spec.k()
    }

    pub fn space(&self) -> SampleSpace {
        self.design.space()
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    /// Kernel basis vectors as rows (`D'`).
    pub fn kernel(&self) -> &IntMatrix {
        &self.kernel
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn df(&self) -> usize {
        self.df
    }

    pub fn overall_effect(&self) -> bool {
        self.overall_effect
    }

    /// Parity vector certifying the absence of the overall effect (HAS only).
    pub fn witness(&self) -> Option<&[i64]> {
        self.witness.as_deref()
    }
}

/// Kernel column order: the zero cell, if present, is eliminated last.
fn pivot_order(space: SampleSpace) -> Vec<usize> {
    let n = space.len();
    if space.has_zero_cell() {
        (1..n).chain(std::iter::once(0)).collect()
    } else {
        (0..n).collect()
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<Model> {
    let design = spec.design()?;
    let dense = design.to_dense()?;
    let r = rank(&dense)?;
    if r != dense.nrows() {
        return Err(HasError::RankDeficient {
            rank: r,
            rows: dense.nrows(),
        });
    }
    let kernel = kernel_basis(&dense, Some(&pivot_order(design.space())))?;
    let df = design.ncols() - r;
    let overall_effect = has_overall_effect(&design)?;
    let witness = if spec.kind == ModelKind::Has {
        overall_effect_witness(&design)
    } else {
        None
    };
    Ok(Model {
        spec: spec.clone(),
        design,
        kernel,
        rank: r,
        df,
        overall_effect,
        witness,
    })
}

/// True iff the all-ones vector lies in the row space of a full-row-rank design.
pub fn has_overall_effect(design: &DesignMatrix) -> Result<bool> {
    if design.has_ones_row() {
        return Ok(true);
    }
    let dense = design.to_dense()?;
    let r = rank(&dense)?;
    if r != dense.nrows() {
        return Err(HasError::RankDeficient {
            rank: r,
            rows: dense.nrows(),
        });
    }
    in_row_space(&dense, &vec![1; dense.ncols()])
}

/// The parity vector `d` with `d(j) = +1` when `|φ(j)|` has the parity of `k`
/// and `-1` otherwise, returned if `A d = 0` (so `d` is a kernel vector with
/// `1'd = ±1`, ruling out the overall effect).
pub fn overall_effect_witness(design: &DesignMatrix) -> Option<Vec<i64>> {
    let ss = design.space();
    if ss.has_zero_cell() {
        return None;
    }
    let k = ss.k();
    let d: Vec<i64> = ss
        .cells()
        .iter()
        .map(|c| if c.phi().len() % 2 == k % 2 { 1 } else { -1 })
        .collect();
    let ad = design.apply(&d).ok()?;
    let sum: i64 = d.iter().sum();
    (ad.iter().all(|&v| v == 0) && sum != 0).then_some(d)
}
