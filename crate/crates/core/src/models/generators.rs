//! Binomial generators `p^{d+} - p^{d-}` read off integer kernel vectors, and
//! (de)homogenization with the zero-cell variable `p0`.

use std::fmt;

use crate::error::{HasError, Result};
use crate::lattice::{Cell, SampleSpace, Space};

use super::Model;

/// A binomial `prod p_i^{a_i} - prod p_j^{b_j}` with disjoint supports.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BinomialGenerator {
    space: SampleSpace,
    plus: Vec<(Cell, u32)>,
    minus: Vec<(Cell, u32)>,
}

fn sort_factors(factors: &mut [(Cell, u32)], k: usize) {
    factors.sort_by_key(|(c, _)| c.label(k));
}

impl BinomialGenerator {
    pub fn new(
        space: SampleSpace,
        mut plus: Vec<(Cell, u32)>,
        mut minus: Vec<(Cell, u32)>,
    ) -> Result<Self> {
        for &(c, e) in plus.iter().chain(&minus) {
            if !space.contains(c) {
                return Err(HasError::MixedSpace);
            }
            if e == 0 {
                return Err(HasError::InvalidArgument("zero exponent".into()));
            }
        }
        if plus.iter().any(|(c, _)| minus.iter().any(|(d, _)| c == d)) {
            return Err(HasError::InvalidArgument("sides share a cell".into()));
        }
        sort_factors(&mut plus, space.k());
        sort_factors(&mut minus, space.k());
        Ok(BinomialGenerator { space, plus, minus })
    }

    pub fn space(&self) -> SampleSpace {
        self.space
    }

    pub fn plus(&self) -> &[(Cell, u32)] {
        &self.plus
    }

    pub fn minus(&self) -> &[(Cell, u32)] {
        &self.minus
    }

    pub fn degree_plus(&self) -> u32 {
        self.plus.iter().map(|f| f.1).sum()
    }

    pub fn degree_minus(&self) -> u32 {
        self.minus.iter().map(|f| f.1).sum()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.degree_plus() == self.degree_minus()
    }

    pub fn uses_zero_cell(&self) -> bool {
        self.plus
            .iter()
            .chain(&self.minus)
            .any(|(c, _)| c.is_zero())
    }

    /// Exponent vector `d+ - d-` in canonical cell order.
    pub fn to_vector(&self) -> Vec<i64> {
        let mut d = vec![0i64; self.space.len()];
        for &(c, e) in &self.plus {
            d[self.space.index_of(c).expect("cell in space")] += i64::from(e);
        }
        for &(c, e) in &self.minus {
            d[self.space.index_of(c).expect("cell in space")] -= i64::from(e);
        }
        d
    }

    /// Log of `p^{d+} / p^{d-}`, given log probabilities in canonical order.
    pub fn log_ratio(&self, log_p: &[f64]) -> f64 {
        self.to_vector()
            .iter()
            .zip(log_p)
            .map(|(&d, l)| d as f64 * l)
            .sum()
    }

    fn render_side(&self, side: &[(Cell, u32)]) -> String {
        if side.is_empty() {
            return "1".to_string();
        }
        let k = self.space.k();
        side.iter()
            .map(|&(c, e)| {
                let name = if c.is_zero() {
                    "p0".to_string()
                } else {
                    format!("p{}", c.label(k))
                };
                if e == 1 {
                    name
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("\u{b7}")
    }
}

impl fmt::Display for BinomialGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} \u{2212} {}",
            self.render_side(&self.plus),
            self.render_side(&self.minus)
        )
    }
}

/// The binomial with exponents given by the positive and negative parts of `d`.
pub fn generator_from_vector(space: SampleSpace, d: &[i64]) -> Result<BinomialGenerator> {
    if d.len() != space.len() {
        return Err(HasError::Dimension(format!(
            "{} exponents for {} cells",
            d.len(),
            space.len()
        )));
    }
    let cells = space.cells();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (&c, &v) in cells.iter().zip(d) {
        let e = u32::try_from(v.unsigned_abs()).map_err(|_| HasError::Overflow)?;
        if v > 0 {
            plus.push((c, e));
        } else if v < 0 {
            minus.push((c, e));
        }
    }
    BinomialGenerator::new(space, plus, minus)
}

/// One generator per kernel basis vector of the model.
pub fn binomial_generators(model: &Model) -> Vec<BinomialGenerator> {
    let space = model.space();
    model
        .kernel()
        .row_vecs()
        .iter()
        .map(|d| generator_from_vector(space, d).expect("kernel vector matches the model space"))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    /// IP to CP: pad the lighter side with powers of `p0`.
    ToCp,
    /// CP to IP: set `p0 = 1`.
    ToIp,
}

pub fn homogenize(
    generators: &[BinomialGenerator],
    direction: Direction,
) -> Result<Vec<BinomialGenerator>> {
    generators
        .iter()
        .map(|g| match direction {
            Direction::ToCp => {
                if g.space.space() != Space::Ip {
                    return Err(HasError::MixedSpace);
                }
                let space = g.space.with_space(Space::Cp);
                let (dp, dm) = (g.degree_plus(), g.degree_minus());
                let mut plus = g.plus.clone();
                let mut minus = g.minus.clone();
                if dp < dm {
                    plus.push((Cell::ZERO, dm - dp));
                } else if dm < dp {
                    minus.push((Cell::ZERO, dp - dm));
                }
                BinomialGenerator::new(space, plus, minus)
            }
            Direction::ToIp => {
                if g.space.space() != Space::Cp {
                    return Err(HasError::MixedSpace);
                }
                let space = g.space.with_space(Space::Ip);
                let keep = |side: &[(Cell, u32)]| {
                    side.iter().copied().filter(|(c, _)| !c.is_zero()).collect()
                };
                BinomialGenerator::new(space, keep(&g.plus), keep(&g.minus))
            }
        })
        .collect()
}

pub fn dehomogenize(generators: &[BinomialGenerator]) -> Result<Vec<BinomialGenerator>> {
    homogenize(generators, Direction::ToIp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ascending_closure, FeatureSet};
    use crate::models::{build_model, ModelKind, ModelSpec};

    fn set(s: &str) -> FeatureSet {
        FeatureSet::from_indices(s.bytes().map(|b| (b - b'A') as usize))
    }

    fn gens(kind: ModelKind, seeds: &[&str], k: usize) -> Vec<BinomialGenerator> {
        let seeds: Vec<_> = seeds.iter().map(|s| set(s)).collect();
        let spec = ModelSpec::new(kind, ascending_closure(&seeds, k).unwrap()).unwrap();
        binomial_generators(&build_model(&spec).unwrap())
    }

    fn render(g: &[BinomialGenerator]) -> Vec<String> {
        g.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn conditional_independence_pair() {
        let g = gens(ModelKind::Has, &["AB"], 3);
        assert_eq!(
            render(&g),
            [
                "p110 \u{2212} p010\u{b7}p100",
                "p001\u{b7}p111 \u{2212} p011\u{b7}p101"
            ]
        );
        assert!(!g[0].is_homogeneous());
        assert!(g[1].is_homogeneous());
        let h = homogenize(&g, Direction::ToCp).unwrap();
        assert_eq!(
            render(&h),
            [
                "p0\u{b7}p110 \u{2212} p010\u{b7}p100",
                "p001\u{b7}p111 \u{2212} p011\u{b7}p101"
            ]
        );
        assert!(h.iter().all(BinomialGenerator::is_homogeneous));
        assert_eq!(dehomogenize(&h).unwrap(), g);
    }

    #[test]
    fn homogeneous_association() {
        let g = gens(ModelKind::Has, &["ABC"], 3);
        assert_eq!(g.len(), 1);
        assert_eq!(
            g[0].to_string(),
            "p011\u{b7}p101\u{b7}p110 \u{2212} p001\u{b7}p010\u{b7}p100\u{b7}p111"
        );
    }

    #[test]
    fn qll_single_generator() {
        let g = gens(ModelKind::Qll, &["AB"], 3);
        assert_eq!(render(&g), ["p001\u{b7}p111 \u{2212} p011\u{b7}p101"]);
        assert!(gens(ModelKind::Qll, &["ABC"], 3).is_empty());
    }

    #[test]
    fn degree_gap_two() {
        let ss = SampleSpace::ip(4).unwrap();
        let c = |s: &str| Cell::parse(s).unwrap();
        let g = BinomialGenerator::new(
            ss,
            vec![(c("1110"), 1)],
            vec![(c("1000"), 1), (c("0100"), 1), (c("0010"), 1)],
        )
        .unwrap();
        let h = homogenize(std::slice::from_ref(&g), Direction::ToCp).unwrap();
        assert_eq!(h[0].plus(), &[(Cell::ZERO, 2), (c("1110"), 1)]);
        assert_eq!(
            h[0].to_string(),
            "p0^2\u{b7}p1110 \u{2212} p0010\u{b7}p0100\u{b7}p1000"
        );
        assert_eq!(dehomogenize(&h).unwrap(), vec![g]);
    }

    #[test]
    fn mixed_space_rejected() {
        let g = gens(ModelKind::Has, &["AB"], 3);
        assert_eq!(dehomogenize(&g), Err(HasError::MixedSpace));
        let h = homogenize(&g, Direction::ToCp).unwrap();
        assert_eq!(homogenize(&h, Direction::ToCp), Err(HasError::MixedSpace));
    }
}
