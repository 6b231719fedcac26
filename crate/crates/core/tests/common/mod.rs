//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

use hasfit::{Cell, FeatureSet, SampleSpace};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;

pub fn set(s: &str) -> FeatureSet {
    FeatureSet::from_indices(s.bytes().map(|b| (b - b'A') as usize))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random strictly positive probability vector with entries bounded away from 0.
pub fn random_probs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Index of a cell (given by its feature mask) in the canonical order,
/// found by scanning the cell list.
pub fn position(space: SampleSpace, mask: u32) -> usize {
    space
        .cells()
        .iter()
        .position(|c| c.phi().mask() == mask)
        .expect("cell present")
}

/// Direct evaluation of the alternating log product over cells
/// `present ∪ W`, `W ⊆ v`, skipping the missing zero cell.
pub fn oracle_log_ratio(space: SampleSpace, p: &[f64], v: u32, present: u32) -> f64 {
    let mut acc = 0.0;
    for w in 0..=v {
        if w & !v != 0 {
            continue;
        }
        let cell = w | present;
        if cell == 0 && !space.has_zero_cell() {
            continue;
        }
        let sign = if (v & !w).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        acc += sign * p[position(space, cell)].ln();
    }
    acc
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Membership of a set in a list of subsets.
pub fn cell_of(label: &str) -> Cell {
    Cell::parse(label).unwrap()
}

/// Dense 0-1 matrix of a design, computed cell by cell from labels.
pub fn dense_from_labels(rows: &[u32], space: SampleSpace) -> Vec<Vec<i64>> {
    let cells = space.cells();
    rows.iter()
        .map(|&r| {
            cells
                .iter()
                .map(|c| i64::from(r & !c.phi().mask() == 0))
                .collect()
        })
        .collect()
}

/// Upper tail of the chi-square distribution by adaptive Simpson integration
/// of the density (df >= 2) or of the standard normal density (df = 1).
pub fn oracle_chisq_sf(x: f64, df: usize) -> f64 {
    if df == 1 {
        let z = x.sqrt();
        let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        return 2.0 * adaptive_simpson(&phi, z, z + 40.0, 1e-14, 50);
    }
    let half = df as f64 / 2.0;
    let log_norm = half * 2f64.ln() + log_gamma_half_integer(df);
    let f = |t: f64| {
        if t <= 0.0 {
            if df == 2 {
                (-log_norm).exp()
            } else {
                0.0
            }
        } else {
            ((half - 1.0) * t.ln() - t / 2.0 - log_norm).exp()
        }
    };
    // unit-width panels keep the peak of the density resolved
    let end = x + 400.0 + 20.0 * df as f64;
    let mut acc = 0.0;
    let mut a = x;
    while a < end {
        acc += adaptive_simpson(&f, a, a + 1.0, 1e-16, 50);
        a += 1.0;
    }
    acc
}

/// log Γ(df/2) from factorials: Γ(n) = (n-1)!, Γ(n + 1/2) = (2n)! √π / (4^n n!).
fn log_gamma_half_integer(df: usize) -> f64 {
    let lf = |n: usize| (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
    if df % 2 == 0 {
        lf(df / 2 - 1)
    } else {
        let n = (df - 1) / 2;
        lf(2 * n) + 0.5 * std::f64::consts::PI.ln() - (n as f64) * 4f64.ln() - lf(n)
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = (a + b) / 2.0;
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        eps: f64,
        whole: f64,
        m: f64,
        fm: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, eps / 2.0, left, lm, flm, depth - 1)
            + rec(f, m, fm, b, fb, eps / 2.0, right, rm, frm, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, eps, whole, m, fm, depth)
}

/// Nelder–Mead minimizer with restarts from the best point.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    iters: usize,
    restarts: usize,
) -> Vec<f64> {
    let n = start.len();
    let mut best = start.to_vec();
    for round in 0..=restarts {
        let scale = step / (1.0 + round as f64);
        let mut simplex: Vec<Vec<f64>> = vec![best.clone()];
        for i in 0..n {
            let mut v = best.clone();
            v[i] += scale;
            simplex.push(v);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
        for _ in 0..iters {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();
            if (vals[n] - vals[0]).abs() < 1e-15 * (1.0 + vals[0].abs()) {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..n)
                    .map(|j| centroid[j] + t * (simplex[n][j] - centroid[j]))
                    .collect()
            };
            let xr = along(-1.0);
            let fr = f(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = f(&xe);
                if fe < fr {
                    simplex[n] = xe;
                    vals[n] = fe;
                } else {
                    simplex[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                simplex[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let x = along(-0.5);
                    let v = f(&x);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = f(&x);
                    (x, v)
                };
                if fc < vals[n].min(fr) {
                    simplex[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        simplex[i] = (0..n)
                            .map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]))
                            .collect();
                        vals[i] = f(&simplex[i]);
                    }
                }
            }
        }
        let i = (0..=n)
            .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap())
            .unwrap();
        best = simplex[i].clone();
    }
    best
}

/// Brute-force MLE oracle for a HAS model on IP given by its descending
/// rows (feature masks). Probabilities are `exp(sum of beta over rows
/// contained in the cell)`; the coefficient of the singleton row `{A}` is
/// eliminated by normalization, the rest are optimized by Nelder–Mead.
pub struct HasOracle {
    pub space: SampleSpace,
    pub rows: Vec<u32>,
    pub counts: Vec<f64>,
}

impl HasOracle {
    /// Probabilities for free parameters `theta` (all rows except `{A}`),
    /// or `None` when no normalizing value for `beta_A` exists.
    pub fn probs(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let cells = self.space.cells();
        let free: Vec<u32> = self.rows.iter().copied().filter(|&r| r != 1).collect();
        let base: Vec<f64> = cells
            .iter()
            .map(|c| {
                free.iter()
                    .zip(theta)
                    .filter(|(r, _)| *r & !c.phi().mask() == 0)
                    .map(|(_, b)| b)
                    .sum::<f64>()
                    .exp()
            })
            .collect();
        let (mut s0, mut s1) = (0.0, 0.0);
        for (c, b) in cells.iter().zip(&base) {
            if c.phi().mask() & 1 != 0 {
                s1 += b
            } else {
                s0 += b
            }
        }
        if s0 >= 1.0 {
            return None;
        }
        let ea = (1.0 - s0) / s1;
        Some(
            cells
                .iter()
                .zip(&base)
                .map(|(c, b)| if c.phi().mask() & 1 != 0 { b * ea } else { *b })
                .collect(),
        )
    }

    pub fn loglik(&self, p: &[f64]) -> f64 {
        self.counts.iter().zip(p).map(|(n, q)| n * q.ln()).sum()
    }

    pub fn neg_loglik(&self, theta: &[f64]) -> f64 {
        match self.probs(theta) {
            Some(p) => -self.loglik(&p),
            None => f64::INFINITY,
        }
    }

    pub fn n_free(&self) -> usize {
        self.rows.iter().filter(|&&r| r != 1).count()
    }

    /// Best of a coarse grid search followed by Nelder–Mead refinement.
    pub fn maximize(&self) -> Vec<f64> {
        let n = self.n_free();
        let f = |t: &[f64]| self.neg_loglik(t);
        let mut start = vec![0.0; n];
        // singletons other than A start small so the normalization is feasible
        for (i, r) in self.rows.iter().filter(|&&r| r != 1).enumerate() {
            if r.count_ones() == 1 {
                start[i] = (0.2f64).ln();
            }
        }
        let mut best = start.clone();
        let mut best_val = f(&best);
        let grid = [-1.0, 0.0, 1.0];
        if n <= 6 {
            let total = grid.len().pow(n as u32);
            for idx in 0..total {
                let mut t = start.clone();
                let mut rem = idx;
                for v in t.iter_mut() {
                    *v += grid[rem % grid.len()];
                    rem /= grid.len();
                }
                let val = f(&t);
                if val < best_val {
                    best_val = val;
                    best = t;
                }
            }
        }
        nelder_mead(&f, &best, 0.5, 20_000, 6)
    }
}

/// Multinomial draw by sequential conditional binomials.
pub fn sample_multinomial(rng: &mut impl Rng, n: u64, p: &[f64]) -> Vec<u64> {
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        if i + 1 == p.len() {
            out.push(left);
            break;
        }
        let prob = (pi / mass).clamp(0.0, 1.0);
        let draw = if left == 0 {
            0
        } else {
            rand_distr::Binomial::new(left, prob).unwrap().sample(rng)
        };
        out.push(draw);
        left -= draw;
        mass -= pi;
    }
    out
}

/// A fixed member of HAS [AC][BC] at k = 3 with every cell well populated:
/// free coefficients for the rows B, C, AC, BC; the A coefficient normalizes.
pub fn ac_bc_truth() -> Vec<f64> {
    let space = SampleSpace::ip(3).unwrap();
    let oracle = HasOracle {
        space,
        rows: vec![0b001, 0b010, 0b100, 0b101, 0b110],
        counts: vec![],
    };
    oracle.probs(&[-1.6, -1.2, 0.5, 0.4]).unwrap()
}
