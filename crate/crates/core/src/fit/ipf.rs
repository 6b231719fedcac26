//! Iterative proportional fitting: cyclic multiplicative scaling to given
//! subset sums, and the outer search for the scale multiplier `gamma`.

use crate::error::{HasError, Result};
use crate::models::Model;
use crate::param::DesignMatrix;

use super::FitOptions;

/// Sweeps between plateau checks in [`bregman_project`].
const PLATEAU_WINDOW: usize = 1000;
/// A checkpoint residual above this fraction of the previous one counts as a plateau.
const PLATEAU_RATIO: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub p: Vec<f64>,
    pub sweeps: usize,
    pub residual: f64,
}

/// Precomputed row supports of a design.
#[derive(Clone, Debug)]
pub(crate) struct Supports(Vec<Vec<usize>>);

impl Supports {
    pub(crate) fn new(design: &DesignMatrix) -> Self {
        let cols = design.cols();
        Supports(
            design
                .rows()
                .iter()
                .map(|r| {
                    cols.iter()
                        .enumerate()
                        .filter(|(_, c)| r.is_subset(c.phi()))
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect(),
        )
    }

    fn residual(&self, p: &[f64], target: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(target)
            .map(|(s, &t)| {
                let sum: f64 = s.iter().map(|&i| p[i]).sum();
                ((sum - t) / t).abs()
            })
            .fold(0.0, f64::max)
    }

    fn sweep(&self, p: &mut [f64], target: &[f64]) {
        for (s, &t) in self.0.iter().zip(target) {
            let sum: f64 = s.iter().map(|&i| p[i]).sum();
            let f = t / sum;
            for &i in s {
                p[i] *= f;
            }
        }
    }
}

fn check_target(design: &DesignMatrix, start: &[f64], target: &[f64]) -> Result<()> {
    if start.len() != design.ncols() || target.len() != design.nrows() {
        return Err(HasError::Dimension(format!(
            "design is {}x{}, start has {} entries, target {}",
            design.nrows(),
            design.ncols(),
            start.len(),
            target.len()
        )));
    }
    if start.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(HasError::InvalidArgument(
            "start vector must be strictly positive".into(),
        ));
    }
    if target.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(HasError::InvalidArgument(
            "target sums must be strictly positive".into(),
        ));
    }
    Ok(())
}

fn project_with(
    supports: &Supports,
    mut p: Vec<f64>,
    target: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<Projection> {
    let mut residual = supports.residual(&p, target);
    let mut checkpoint = residual;
    let mut sweeps = 0;
    while residual > tol {
        if sweeps == max_sweeps {
            return Err(HasError::NotConverged { sweeps, residual });
        }
        supports.sweep(&mut p, target);
        sweeps += 1;
        residual = supports.residual(&p, target);
        if sweeps % PLATEAU_WINDOW == 0 && residual > tol {
            if residual > PLATEAU_RATIO * checkpoint {
                return Err(HasError::Infeasible { sweeps, residual });
            }
            checkpoint = residual;
        }
    }
    Ok(Projection {
        p,
        sweeps,
        residual,
    })
}

/// Scales `start` row by row until `A p = target`; every update multiplies the
/// cells of one row's support by a common factor, so `D' log p` is unchanged
/// for any kernel basis `D`.
pub fn bregman_project(
    start: &[f64],
    design: &DesignMatrix,
    target: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<Projection> {
    check_target(design, start, target)?;
    project_with(
        &Supports::new(design),
        start.to_vec(),
        target,
        tol,
        max_sweeps,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct GipfOutcome {
    pub p: Vec<f64>,
    pub gamma: f64,
    /// Inner sweeps summed over all projections.
    pub sweeps: usize,
    /// Evaluations of `h(gamma)`.
    pub outer_iterations: usize,
    /// Final max relative subset-sum residual.
    pub residual: f64,
}

struct Outer<'a> {
    supports: &'a Supports,
    base: Vec<f64>,
    current: Vec<f64>,
    opts: &'a FitOptions,
    sweeps: usize,
    evals: usize,
}

impl Outer<'_> {
    /// Projects onto `gamma * A q` and returns `1'p - 1`.
    fn h(&mut self, gamma: f64) -> Result<f64> {
        if self.evals == self.opts.max_outer {
            let gap = self.current.iter().sum::<f64>() - 1.0;
            return Err(HasError::OuterNotConverged {
                iterations: self.evals,
                gap: gap.abs(),
            });
        }
        self.evals += 1;
        let target: Vec<f64> = self.base.iter().map(|t| gamma * t).collect();
        let start = std::mem::take(&mut self.current);
        let proj = project_with(
            self.supports,
            start,
            &target,
            self.opts.tol_inner,
            self.opts.max_inner,
        )?;
        self.sweeps += proj.sweeps;
        self.current = proj.p;
        Ok(self.current.iter().sum::<f64>() - 1.0)
    }
}

/// Fits `q` to the model: the unique positive `p` with `1'p = 1`,
/// `A p = gamma A q` and `D' log p = 0`.
pub fn gipf(q: &[f64], model: &Model, opts: &FitOptions) -> Result<GipfOutcome> {
    let design = model.design();
    let n = design.ncols();
    if q.len() != n {
        return Err(HasError::Dimension(format!(
            "{} proportions for {n} cells",
            q.len()
        )));
    }
    let supports = Supports::new(design);
    let mut covered = vec![false; n];
    for s in &supports.0 {
        for &i in s {
            covered[i] = true;
        }
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(HasError::InvalidModel(format!(
            "cell {} is in no row of the design, so its probability is unrestricted by the sufficient statistics and the MLE does not exist",
            design.cols()[i].label(design.k())
        )));
    }
    let base = design.apply(q)?;
    check_target(design, q, &base)?;
    let mut outer = Outer {
        supports: &supports,
        base,
        current: vec![1.0; n],
        opts,
        sweeps: 0,
        evals: 0,
    };

    let gamma = if model.overall_effect() {
        outer.h(1.0)?;
        1.0
    } else {
        find_gamma(&mut outer)?
    };

    let total: f64 = outer.current.iter().sum();
    let p: Vec<f64> = outer.current.iter().map(|v| v / total).collect();
    let gamma = if model.overall_effect() {
        1.0
    } else {
        gamma / total
    };
    let target: Vec<f64> = outer.base.iter().map(|t| gamma * t).collect();
    let residual = supports.residual(&p, &target);
    Ok(GipfOutcome {
        p,
        gamma,
        sweeps: outer.sweeps,
        outer_iterations: outer.evals,
        residual,
    })
}

const BRACKET_EXPANSIONS: usize = 12;
const SECANT_WIDTH: f64 = 1e-3;

fn find_gamma(outer: &mut Outer<'_>) -> Result<f64> {
    let tol = outer.opts.tol_outer;
    let (mut lo, mut hi) = (1.0 / 8.0, 8.0);
    let mut h_lo = outer.h(lo)?;
    if h_lo.abs() <= tol {
        return Ok(lo);
    }
    let mut h_hi = outer.h(hi)?;
    if h_hi.abs() <= tol {
        return Ok(hi);
    }
    let mut expansions = 0;
    while h_lo > 0.0 || h_hi < 0.0 {
        if expansions == BRACKET_EXPANSIONS {
            return Err(HasError::Bracket { lo, hi, h_lo, h_hi });
        }
        expansions += 1;
        if h_lo > 0.0 {
            hi = lo;
            h_hi = h_lo;
            lo /= 8.0;
            h_lo = outer.h(lo)?;
        } else {
            lo = hi;
            h_lo = h_hi;
            hi *= 8.0;
            h_hi = outer.h(hi)?;
        }
    }

    // bisection in log(gamma) down to a narrow bracket
    while hi / lo - 1.0 > SECANT_WIDTH {
        let mid = (lo * hi).sqrt();
        let h_mid = outer.h(mid)?;
        if h_mid.abs() <= tol {
            return Ok(mid);
        }
        if h_mid < 0.0 {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
            h_hi = h_mid;
        }
    }

    // Illinois regula falsi
    let mut side = 0i8;
    loop {
        let x = (lo * h_hi - hi * h_lo) / (h_hi - h_lo);
        let hx = outer.h(x)?;
        if hx.abs() <= tol || hi - lo <= f64::EPSILON * hi {
            return Ok(x);
        }
        if hx < 0.0 {
            lo = x;
            h_lo = hx;
            if side == -1 {
                h_hi /= 2.0;
            }
            side = -1;
        } else {
            hi = x;
            h_hi = hx;
            if side == 1 {
                h_lo /= 2.0;
            }
            side = 1;
        }
    }
}
