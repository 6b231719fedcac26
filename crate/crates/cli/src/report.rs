//! Reports: one serializable structure per run, rendered as JSON or text.

use std::fmt::Write as _;

use hasfit::search::{Decision, DecisionRule, ModelStats, SearchState, Wave, WaveDirection};
use hasfit::{BinomialGenerator, FitResult, IntMatrix, Model, ModelKind, Space};
use serde::{Deserialize, Serialize};

use crate::table::subset_name;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    /// Arguments as given on the command line.
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelInfo>,
    pub result: Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub kind: ModelKind,
    pub name: String,
    pub features: Vec<String>,
    pub ascending: Vec<String>,
    pub df: usize,
    pub overall_effect: bool,
}

impl ModelInfo {
    pub fn new(model: &Model, names: &[String]) -> Self {
        ModelInfo {
            kind: model.kind(),
            name: model.spec().name(names),
            features: names.to_vec(),
            ascending: model
                .spec()
                .asc()
                .members()
                .iter()
                .map(|s| subset_name(*s, names))
                .collect(),
            df: model.df(),
            overall_effect: model.overall_effect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Fit(Box<FitResult>),
    Matrices(MatrixDump),
    Generators(GeneratorList),
    Search(SearchSummary),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub name: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub entries: Vec<Vec<i64>>,
}

impl NamedMatrix {
    pub fn new(name: &str, rows: Vec<String>, cols: Vec<String>, m: &IntMatrix) -> Self {
        NamedMatrix {
            name: name.to_string(),
            rows,
            cols,
            entries: m.row_vecs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub k: usize,
    pub space: Space,
    pub matrices: Vec<NamedMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorEntry {
    pub binomial: String,
    pub homogeneous: bool,
    pub uses_zero_cell: bool,
}

impl From<&BinomialGenerator> for GeneratorEntry {
    fn from(g: &BinomialGenerator) -> Self {
        GeneratorEntry {
            binomial: g.to_string(),
            homogeneous: g.is_homogeneous(),
            uses_zero_cell: g.uses_zero_cell(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorList {
    pub generators: Vec<GeneratorEntry>,
    /// IP generators padded with powers of p0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogenized: Option<Vec<GeneratorEntry>>,
    /// CP generators with p0 set to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dehomogenized: Option<Vec<GeneratorEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchModel {
    pub name: String,
    pub ascending: Vec<String>,
    pub decision: Decision,
    pub tested_in_wave: Option<usize>,
    pub stats: Option<ModelStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchWave {
    pub index: usize,
    pub direction: WaveDirection,
    pub tested: Vec<String>,
}

impl From<&Wave> for SearchWave {
    fn from(w: &Wave) -> Self {
        SearchWave {
            index: w.index,
            direction: w.direction,
            tested: w.tested.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub k: usize,
    pub kind: ModelKind,
    pub alpha: f64,
    pub rule: DecisionRule,
    pub fitted: usize,
    pub waves: Vec<SearchWave>,
    pub models: Vec<SearchModel>,
    pub minimal_accepted: Vec<String>,
    pub maximal_rejected: Vec<String>,
}

impl From<&SearchState> for SearchSummary {
    fn from(s: &SearchState) -> Self {
        SearchSummary {
            k: s.k,
            kind: s.kind,
            alpha: s.alpha,
            rule: s.rule,
            fitted: s.fitted_count(),
            waves: s.waves.iter().map(SearchWave::from).collect(),
            models: s
                .models
                .iter()
                .map(|m| SearchModel {
                    name: m.name.clone(),
                    ascending: m.ascending.clone(),
                    decision: m.decision.clone(),
                    tested_in_wave: m.tested_in_wave,
                    stats: m.stats,
                })
                .collect(),
            minimal_accepted: s.minimal_accepted.clone(),
            maximal_rejected: s.maximal_rejected.clone(),
        }
    }
}

/// `x` with 10 significant digits, fixed notation for moderate magnitudes.
pub fn sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into an extra digit, e.g. 9.9999999999 -> 10.000000000
        let s = if s
            .trim_start_matches('-')
            .replace('.', "")
            .trim_start_matches('0')
            .len()
            > 10
            && decimals > 0
        {
            format!("{x:.prec$}", prec = decimals - 1)
        } else {
            s
        };
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.9e}");
        let (mantissa, e) = s.split_once('e').expect("exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {}: {}",
            self.tool,
            self.version,
            self.command.join(" ")
        );
        if let Some(m) = &self.model {
            let _ = writeln!(
                out,
                "model: {} {} on features {}",
                m.kind,
                m.name,
                m.features.join(", ")
            );
            let _ = writeln!(out, "ascending class: {}", m.ascending.join(", "));
            let _ = writeln!(
                out,
                "df: {}, overall effect: {}",
                m.df,
                if m.overall_effect { "yes" } else { "no" }
            );
        }
        out.push('\n');
        match &self.result {
            Output::Fit(fit) => fit_text(&mut out, fit),
            Output::Matrices(dump) => {
                for m in &dump.matrices {
                    matrix_text(&mut out, m);
                }
            }
            Output::Generators(list) => generators_text(&mut out, list),
            Output::Search(s) => search_text(&mut out, s),
        }
        out
    }
}

fn fit_text(out: &mut String, fit: &FitResult) {
    let k = fit.space.k();
    let cells = fit.space.labels();
    let expected = fit.expected();
    let width = k.max(4);
    let _ = writeln!(
        out,
        "{:<width$}  {:>18}  {:>18}",
        "cell", "fitted", "expected"
    );
    for ((label, p), e) in cells.iter().zip(&fit.p_hat).zip(&expected) {
        let _ = writeln!(out, "{label:<width$}  {:>18}  {:>18}", sig10(*p), sig10(*e));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "total: {}", sig10(fit.n_total));
    let _ = writeln!(out, "gamma: {}", sig10(fit.gamma));
    let _ = writeln!(out, "X2: {}  p = {}", sig10(fit.x2), sig10(fit.p_value_x2));
    let _ = writeln!(out, "G2: {}  p = {}", sig10(fit.g2), sig10(fit.p_value_g2));
    let _ = writeln!(out, "df: {}", fit.df);
    if fit.zero_adjusted {
        let _ = writeln!(out, "zero counts were replaced before fitting");
    }
    let _ = writeln!(out, "parameters:");
    for (set, b) in &fit.beta_hat {
        let name = if set.is_empty() {
            "\u{2205}".to_string()
        } else {
            set.to_string()
        };
        let _ = writeln!(out, "  {name:<width$}  {:>18}", sig10(*b));
    }
    let c = &fit.convergence;
    let _ = writeln!(
        out,
        "convergence: {} sweeps, {} outer iterations, max residual {}",
        c.iterations,
        c.outer_iterations,
        sig10(c.max_residual)
    );
}

/// Tab-separated dump: header of column names, then one named row per line.
fn matrix_text(out: &mut String, m: &NamedMatrix) {
    let _ = writeln!(out, "# {}", m.name);
    let _ = writeln!(out, "\t{}", m.cols.join("\t"));
    for (name, row) in m.rows.iter().zip(&m.entries) {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{name}\t{}", cells.join("\t"));
    }
    out.push('\n');
}

fn generators_text(out: &mut String, list: &GeneratorList) {
    let line = |out: &mut String, g: &GeneratorEntry| {
        let tag = if g.homogeneous {
            "homogeneous"
        } else {
            "non-homogeneous"
        };
        let _ = writeln!(out, "  {}  ({tag})", g.binomial);
    };
    let _ = writeln!(out, "generators:");
    if list.generators.is_empty() {
        let _ = writeln!(out, "  (none: saturated model)");
    }
    for g in &list.generators {
        line(out, g);
    }
    for (title, list) in [
        ("homogenized", &list.homogenized),
        ("dehomogenized", &list.dehomogenized),
    ] {
        if let Some(h) = list {
            let _ = writeln!(out, "{title}:");
            for g in h {
                line(out, g);
            }
        }
    }
}

fn search_text(out: &mut String, s: &SearchSummary) {
    let _ = writeln!(
        out,
        "{} search, k = {}, alpha = {}, rule = {}, {} of {} models fitted",
        s.kind,
        s.k,
        sig10(s.alpha),
        serde_json::to_value(s.rule)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        s.fitted,
        s.models.len()
    );
    for w in &s.waves {
        let dir = match w.direction {
            WaveDirection::Minimal => "minimal",
            WaveDirection::Maximal => "maximal",
        };
        let _ = writeln!(out, "wave {} ({dir}): {}", w.index, w.tested.join(" "));
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<24}  {:<10}  {:>5}  {:>3}  {:>16}  {:>16}  {:>16}  {:>16}",
        "model", "decision", "wave", "df", "X2", "p(X2)", "G2", "p(G2)"
    );
    for m in &s.models {
        let decision = match &m.decision {
            Decision::Undetermined => "undecided".to_string(),
            Decision::Accepted => "accepted".to_string(),
            Decision::Rejected => "rejected".to_string(),
            Decision::Error(_) => "error".to_string(),
        };
        let wave = m
            .tested_in_wave
            .map(|w| w.to_string())
            .unwrap_or_else(|| "-".into());
        match &m.stats {
            Some(st) => {
                let _ = writeln!(
                    out,
                    "{:<24}  {decision:<10}  {wave:>5}  {:>3}  {:>16}  {:>16}  {:>16}  {:>16}",
                    m.name,
                    st.df,
                    sig10(st.x2),
                    sig10(st.p_value_x2),
                    sig10(st.g2),
                    sig10(st.p_value_g2)
                );
            }
            None => {
                let _ = writeln!(out, "{:<24}  {decision:<10}  {wave:>5}", m.name);
            }
        }
        if let Decision::Error(msg) = &m.decision {
            let _ = writeln!(out, "    {msg}");
        }
    }
    let _ = writeln!(out);
    let names = |v: &[String]| {
        if v.is_empty() {
            "(none)".to_string()
        } else {
            v.join(" ")
        }
    };
    let _ = writeln!(out, "minimal accepted: {}", names(&s.minimal_accepted));
    let _ = writeln!(out, "maximal rejected: {}", names(&s.maximal_rejected));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig10(0.0), "0");
        assert_eq!(sig10(1.0), "1");
        assert_eq!(sig10(0.259921049894873), "0.2599210499");
        assert_eq!(sig10(5.8123456789012), "5.812345679");
        assert_eq!(sig10(-42.5), "-42.5");
        assert_eq!(sig10(1234567890123.0), "1.23456789e12");
        assert_eq!(sig10(1.5e-12), "1.5e-12");
        assert_eq!(sig10(9.99999999999), "10");
        assert_eq!(sig10(100000.0), "100000");
    }
}
