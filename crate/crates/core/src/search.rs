//! Dual lattice search over hierarchical models.
//!
//! Models are ordered by their ascending classes: a larger ascending class
//! restricts more, so it gives a smaller model. Accepting a model accepts
//! every model with a smaller ascending class; rejecting one rejects every
//! model with a larger ascending class. Waves alternate between testing the
//! most restrictive and the least restrictive undetermined models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HasError, Result};
use crate::fit::{mle, FitOptions, FitResult, ObservedCounts};
use crate::lattice::{default_feature_names, revlex_subsets, ClassKind, FeatureSet, SubsetClass};
use crate::models::{build_model, generating_class_name, ModelKind, ModelSpec};

/// Largest `k` for which the model lattice is enumerated.
pub const MAX_SEARCH_K: usize = 5;

/// Which tail probability decides acceptance.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Accept iff both the Pearson and likelihood-ratio p-values reach alpha.
    #[default]
    Both,
    Pearson,
    LikelihoodRatio,
}

impl DecisionRule {
    fn p_value(self, fit: &FitResult) -> f64 {
        match self {
            DecisionRule::Both => fit.p_value_x2.min(fit.p_value_g2),
            DecisionRule::Pearson => fit.p_value_x2,
            DecisionRule::LikelihoodRatio => fit.p_value_g2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub kind: ModelKind,
    pub alpha: f64,
    pub rule: DecisionRule,
    pub fit: FitOptions,
    /// Feature names used in model names; letters when empty.
    pub names: Vec<String>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            kind: ModelKind::Has,
            alpha: 0.05,
            rule: DecisionRule::Both,
            fit: FitOptions::default(),
            names: Vec::new(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "message")]
pub enum Decision {
    Undetermined,
    Accepted,
    Rejected,
    /// The fit failed; the model takes no part in propagation.
    Error(String),
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct ModelStats {
    #[serde(rename = "X2")]
    pub x2: f64,
    #[serde(rename = "G2")]
    pub g2: f64,
    pub df: usize,
    pub p_value_x2: f64,
    pub p_value_g2: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelRecord {
    pub name: String,
    pub ascending: Vec<String>,
    pub decision: Decision,
    /// Wave in which the model was fitted, or `None` if decided by propagation.
    pub tested_in_wave: Option<usize>,
    pub stats: Option<ModelStats>,
    #[serde(skip)]
    pub class: SubsetClass,
    #[serde(skip)]
    bits: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveDirection {
    /// Most restrictive undetermined models.
    Minimal,
    /// Least restrictive undetermined models.
    Maximal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Wave {
    pub index: usize,
    pub direction: WaveDirection,
    /// Names of the models fitted in this wave.
    pub tested: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchState {
    pub k: usize,
    pub kind: ModelKind,
    pub alpha: f64,
    pub rule: DecisionRule,
    pub waves: Vec<Wave>,
    pub models: Vec<ModelRecord>,
    pub minimal_accepted: Vec<String>,
    pub maximal_rejected: Vec<String>,
}

fn class_bits(class: &SubsetClass) -> u64 {
    class
        .members()
        .iter()
        .fold(0u64, |b, s| b | (1 << s.mask()))
}

fn is_subset_bits(a: u64, b: u64) -> bool {
    a & !b == 0
}

/// Every ascending class admissible for the model kind at `k`, ordered by
/// size and then bit pattern. HAS excludes classes holding a singleton (the
/// matching cell would be unrestricted by any row) and the exhaustive class.
pub fn hierarchical_classes(k: usize, kind: ModelKind) -> Result<Vec<SubsetClass>> {
    if k == 0 || k > MAX_SEARCH_K {
        return Err(HasError::InvalidArgument(format!(
            "model lattice is enumerated for 1 <= k <= {MAX_SEARCH_K}, got {k}"
        )));
    }
    let mut subsets = revlex_subsets(k, false);
    subsets.reverse();
    if kind == ModelKind::Has {
        subsets.retain(|s| s.len() >= 2);
    }
    let full = FeatureSet::full(k);
    let mut out = Vec::new();
    let mut chosen = 0u64;
    enumerate(&subsets, 0, full, &mut chosen, &mut out);
    let mut classes: Vec<SubsetClass> = out
        .into_iter()
        .filter(|&b| b != 0)
        .map(|b| {
            let members = (1..1u32 << k)
                .filter(|m| b & (1 << m) != 0)
                .map(FeatureSet::from_mask)
                .collect();
            SubsetClass::new(k, ClassKind::Ascending, members)
                .expect("enumeration yields ascending classes")
        })
        .filter(|c| kind == ModelKind::Qll || !c.is_exhaustive())
        .collect();
    classes.sort_by_key(|c| (c.len(), class_bits(c)));
    Ok(classes)
}

fn enumerate(
    subsets: &[FeatureSet],
    i: usize,
    full: FeatureSet,
    chosen: &mut u64,
    out: &mut Vec<u64>,
) {
    let Some(&s) = subsets.get(i) else {
        out.push(*chosen);
        return;
    };
    enumerate(subsets, i + 1, full, chosen, out);
    let closed = full
        .difference(s)
        .indices()
        .all(|j| *chosen & (1 << s.union(FeatureSet::singleton(j)).mask()) != 0);
    if closed {
        *chosen |= 1 << s.mask();
        enumerate(subsets, i + 1, full, chosen, out);
        *chosen &= !(1 << s.mask());
    }
}

impl SearchState {
    pub fn fitted_count(&self) -> usize {
        self.models
            .iter()
            .filter(|m| m.tested_in_wave.is_some())
            .count()
    }

    pub fn record(&self, name: &str) -> Option<&ModelRecord> {
        self.models.iter().find(|m| m.name == name)
    }

    fn with_decision(&self, d: &Decision) -> impl Iterator<Item = &ModelRecord> {
        let d = d.clone();
        self.models.iter().filter(move |m| m.decision == d)
    }

    /// No accepted model has a rejected model containing it, i.e. no rejected
    /// model's ascending class lies inside an accepted model's class.
    pub fn is_coherent(&self) -> bool {
        let accepted: Vec<u64> = self
            .with_decision(&Decision::Accepted)
            .map(|m| m.bits)
            .collect();
        let undetermined = self
            .models
            .iter()
            .any(|m| m.decision == Decision::Undetermined);
        !undetermined
            && self
                .with_decision(&Decision::Rejected)
                .all(|r| accepted.iter().all(|&a| !is_subset_bits(r.bits, a)))
    }
}

/// Runs the dual search over all hierarchical models of the given kind.
pub fn eh_search(counts: &ObservedCounts, opts: &SearchOptions) -> Result<SearchState> {
    let k = counts.space().k();
    if opts.kind == ModelKind::Ll {
        return Err(HasError::InvalidArgument(
            "search covers HAS and QLL models".into(),
        ));
    }
    if counts.space().space() != opts.kind.space() {
        return Err(HasError::InvalidCounts(format!(
            "{} models need counts on {}",
            opts.kind,
            opts.kind.space()
        )));
    }
    if !(0.0..=1.0).contains(&opts.alpha) {
        return Err(HasError::InvalidArgument(format!(
            "alpha {} outside [0, 1]",
            opts.alpha
        )));
    }
    let names = if opts.names.is_empty() {
        default_feature_names(k)
    } else {
        opts.names.clone()
    };
    if names.len() != k {
        return Err(HasError::InvalidArgument(format!(
            "{} feature names for k = {k}",
            names.len()
        )));
    }
    let mut models: Vec<ModelRecord> = hierarchical_classes(k, opts.kind)?
        .into_iter()
        .map(|class| ModelRecord {
            name: generating_class_name(&class.complement(), &names),
            ascending: class.members().iter().map(|s| s.name(&names)).collect(),
            decision: Decision::Undetermined,
            tested_in_wave: None,
            stats: None,
            bits: class_bits(&class),
            class,
        })
        .collect();

    let mut waves = Vec::new();
    loop {
        let open: Vec<usize> = (0..models.len())
            .filter(|&i| models[i].decision == Decision::Undetermined)
            .collect();
        if open.is_empty() {
            break;
        }
        let index = waves.len();
        let direction = if index % 2 == 0 {
            WaveDirection::Minimal
        } else {
            WaveDirection::Maximal
        };
        let frontier: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&i| {
                open.iter().all(|&j| {
                    j == i
                        || match direction {
                            WaveDirection::Minimal => {
                                !is_subset_bits(models[i].bits, models[j].bits)
                            }
                            WaveDirection::Maximal => {
                                !is_subset_bits(models[j].bits, models[i].bits)
                            }
                        }
                })
            })
            .collect();

        let outcomes: Vec<Result<FitResult>> = frontier
            .par_iter()
            .map(|&i| {
                let spec = ModelSpec::new(opts.kind, models[i].class.clone())?;
                let model = build_model(&spec)?;
                mle(counts, &model, &opts.fit)
            })
            .collect();

        for (&i, outcome) in frontier.iter().zip(outcomes) {
            models[i].tested_in_wave = Some(index);
            let fit = match outcome {
                Ok(fit) => fit,
                Err(e) => {
                    models[i].decision = Decision::Error(e.to_string());
                    continue;
                }
            };
            models[i].stats = Some(ModelStats {
                x2: fit.x2,
                g2: fit.g2,
                df: fit.df,
                p_value_x2: fit.p_value_x2,
                p_value_g2: fit.p_value_g2,
                gamma: fit.gamma,
            });
            let accept = opts.rule.p_value(&fit) >= opts.alpha;
            let bits = models[i].bits;
            for m in models.iter_mut() {
                if m.decision != Decision::Undetermined {
                    continue;
                }
                if accept && is_subset_bits(m.bits, bits) {
                    m.decision = Decision::Accepted;
                } else if !accept && is_subset_bits(bits, m.bits) {
                    m.decision = Decision::Rejected;
                }
            }
        }
        waves.push(Wave {
            index,
            direction,
            tested: frontier.iter().map(|&i| models[i].name.clone()).collect(),
        });
    }

    let minimal_accepted = frontier_names(&models, &Decision::Accepted, is_subset_bits);
    let maximal_rejected =
        frontier_names(&models, &Decision::Rejected, |a, b| is_subset_bits(b, a));
    Ok(SearchState {
        k,
        kind: opts.kind,
        alpha: opts.alpha,
        rule: opts.rule,
        waves,
        models,
        minimal_accepted,
        maximal_rejected,
    })
}

/// Models with the decision that are not below another such model under `below`.
fn frontier_names(
    models: &[ModelRecord],
    d: &Decision,
    below: impl Fn(u64, u64) -> bool,
) -> Vec<String> {
    let group: Vec<&ModelRecord> = models.iter().filter(|m| &m.decision == d).collect();
    group
        .iter()
        .filter(|m| {
            group
                .iter()
                .all(|o| o.bits == m.bits || !below(m.bits, o.bits))
        })
        .map(|m| m.name.clone())
        .collect()
}
