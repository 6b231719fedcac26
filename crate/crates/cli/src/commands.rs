//! Argument definitions and command dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hasfit::search::DecisionRule;
use hasfit::{
    binomial_generators, build_design, build_model, default_feature_names, eh_search, homogenize,
    invert_corner, mle, Direction, FitOptions, HasError, Model, ModelKind, ModelSpec,
    SearchOptions, Space, ZeroPolicy, MAX_K,
};
use thiserror::Error;

use crate::report::{
    GeneratorEntry, GeneratorList, MatrixDump, ModelInfo, NamedMatrix, Output, Report,
    SearchSummary,
};
use crate::table::{parse_table, subset_name, InputFormat, TableError, TableFile};

/// Overrides both the inner and outer iteration caps.
pub const MAX_ITERS_VAR: &str = "HASFIT_MAX_ITERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Table(#[from] TableError),

    #[error("{tag}: {0}", tag = error_tag(.0))]
    Has(#[from] HasError),

    #[error("E_USAGE: {0}")]
    Usage(String),
}

fn error_tag(e: &HasError) -> &'static str {
    if e.is_convergence_failure() {
        "E_CONVERGENCE"
    } else {
        "E_MODEL"
    }
}

impl CliError {
    /// 2 for invalid input, 3 when fitting fails to converge.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Has(e) if e.is_convergence_failure() => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, ValueEnum)]
pub enum KindArg {
    #[default]
    Has,
    Qll,
    Ll,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Has => ModelKind::Has,
            KindArg::Qll => ModelKind::Qll,
            KindArg::Ll => ModelKind::Ll,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, ValueEnum)]
pub enum RuleArg {
    /// Both the Pearson and the likelihood-ratio p-value must reach alpha
    #[default]
    Both,
    Pearson,
    Lr,
}

impl From<RuleArg> for DecisionRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Both => DecisionRule::Both,
            RuleArg::Pearson => DecisionRule::Pearson,
            RuleArg::Lr => DecisionRule::LikelihoodRatio,
        }
    }
}

/// `error`, `epsilon` or `epsilon:<v>`.
fn parse_zero_policy(s: &str) -> Result<ZeroPolicy, String> {
    match s.split_once(':') {
        None if s == "error" => Ok(ZeroPolicy::Error),
        None if s == "epsilon" => Ok(ZeroPolicy::Epsilon(ZeroPolicy::DEFAULT_EPSILON)),
        Some(("epsilon", v)) => match v.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(ZeroPolicy::Epsilon(v)),
            _ => Err(format!("epsilon must be a positive number, got '{v}'")),
        },
        _ => Err(format!("expected 'error' or 'epsilon[:<v>]', got '{s}'")),
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("tolerance must be a positive number, got '{s}'")),
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("alpha must lie in [0, 1], got '{s}'")),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hasfit",
    version,
    about = "Fit and search HAS, QLL and LL models for binary features"
)]
pub struct Cli {
    /// Report format
    #[arg(long, value_enum, global = true, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximum likelihood fit of one model to a count table
    Fit(FitArgs),
    /// Design, kernel and corner matrices of a model
    Matrices(MatrixArgs),
    /// Binomial generators of a model
    Generators(GeneratorArgs),
    /// Search the lattice of hierarchical models
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Count table (CSV or JSON)
    pub table: PathBuf,

    /// Table format; guessed from the extension when omitted
    #[arg(long, value_enum)]
    pub input_format: Option<InputFormat>,

    /// Treat cells absent from the table as zero counts
    #[arg(long)]
    pub allow_missing_as_zero: bool,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    #[arg(long, value_parser = parse_tolerance, default_value = "1e-10")]
    pub tol_inner: f64,

    #[arg(long, value_parser = parse_tolerance, default_value = "1e-10")]
    pub tol_outer: f64,

    /// error | epsilon | epsilon:<v>
    #[arg(long, value_parser = parse_zero_policy, default_value = "error")]
    pub zero_policy: ZeroPolicy,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Generating class, e.g. "[AC][BC]"
    #[arg(long)]
    pub model: String,

    #[arg(long, value_enum, default_value_t)]
    pub kind: KindArg,

    #[command(flatten)]
    pub table: TableArgs,

    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[arg(long)]
    pub model: String,

    #[arg(long, value_enum, default_value_t)]
    pub kind: KindArg,

    /// Number of features; defaults to the highest letter in the model
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long)]
    pub model: String,

    #[arg(long, value_enum, default_value_t)]
    pub kind: KindArg,

    #[arg(long)]
    pub k: Option<usize>,

    /// Also list the generators moved to the other sample space
    #[arg(long)]
    pub homogenize: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t)]
    pub kind: KindArg,

    #[arg(long, value_parser = parse_alpha, default_value = "0.05")]
    pub alpha: f64,

    #[arg(long, value_enum, default_value_t)]
    pub rule: RuleArg,

    #[command(flatten)]
    pub table: TableArgs,

    #[command(flatten)]
    pub tuning: TuningArgs,
}

fn fit_options(tuning: &TuningArgs) -> Result<FitOptions, CliError> {
    let mut opts = FitOptions {
        tol_inner: tuning.tol_inner,
        tol_outer: tuning.tol_outer,
        zero_policy: tuning.zero_policy,
        ..FitOptions::default()
    };
    if let Ok(v) = std::env::var(MAX_ITERS_VAR) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{MAX_ITERS_VAR} must be a positive integer, got '{v}'"
            ))
        })?;
        opts.max_inner = n;
        opts.max_outer = n;
    }
    Ok(opts)
}

fn read_table(args: &TableArgs, kind: ModelKind) -> Result<TableFile, CliError> {
    let format = args
        .input_format
        .unwrap_or_else(|| InputFormat::from_path(&args.table));
    let table = parse_table(&args.table, format, Some(kind.space()))?;
    if table.space.space() != kind.space() {
        return Err(CliError::Usage(format!(
            "{kind} models need a table on {}, the file declares {}",
            kind.space(),
            table.space.space()
        )));
    }
    Ok(table)
}

/// Feature count implied by the letters of a model string.
fn infer_k(model: &str) -> Option<usize> {
    model
        .bytes()
        .filter(u8::is_ascii_uppercase)
        .map(|b| (b - b'A') as usize + 1)
        .max()
}

fn model_without_table(
    model: &str,
    kind: KindArg,
    k: Option<usize>,
) -> Result<(Model, Vec<String>), CliError> {
    let k = k
        .or_else(|| infer_k(model))
        .ok_or_else(|| CliError::Usage(format!("cannot infer k from model '{model}'; pass --k")))?;
    if k == 0 || k > MAX_K {
        return Err(HasError::FeatureCount(k).into());
    }
    let names = default_feature_names(k);
    let spec = ModelSpec::parse(kind.into(), model, &names)?;
    Ok((build_model(&spec)?, names))
}

pub fn run(cli: &Cli, argv: Vec<String>) -> Result<Report, CliError> {
    let (model, result) = match &cli.command {
        Command::Fit(a) => {
            let kind = ModelKind::from(a.kind);
            let opts = fit_options(&a.tuning)?;
            let table = read_table(&a.table, kind)?;
            let counts = table.counts(a.table.allow_missing_as_zero)?;
            let spec = ModelSpec::parse(kind, &a.model, &table.feature_names)?;
            let model = build_model(&spec)?;
            let fit = mle(&counts, &model, &opts)?;
            (
                Some(ModelInfo::new(&model, &table.feature_names)),
                Output::Fit(Box::new(fit)),
            )
        }
        Command::Matrices(a) => {
            let (model, names) = model_without_table(&a.model, a.kind, a.k)?;
            (
                Some(ModelInfo::new(&model, &names)),
                Output::Matrices(matrices(&model, &names)?),
            )
        }
        Command::Generators(a) => {
            let (model, names) = model_without_table(&a.model, a.kind, a.k)?;
            let gens = binomial_generators(&model);
            let entries = |g: &[hasfit::BinomialGenerator]| {
                g.iter().map(GeneratorEntry::from).collect::<Vec<_>>()
            };
            let mut list = GeneratorList {
                generators: entries(&gens),
                homogenized: None,
                dehomogenized: None,
            };
            if a.homogenize {
                match model.space().space() {
                    Space::Ip => {
                        list.homogenized = Some(entries(&homogenize(&gens, Direction::ToCp)?))
                    }
                    Space::Cp => {
                        list.dehomogenized = Some(entries(&homogenize(&gens, Direction::ToIp)?))
                    }
                }
            }
            (
                Some(ModelInfo::new(&model, &names)),
                Output::Generators(list),
            )
        }
        Command::Search(a) => {
            let kind = ModelKind::from(a.kind);
            let fit = fit_options(&a.tuning)?;
            let table = read_table(&a.table, kind)?;
            let counts = table.counts(a.table.allow_missing_as_zero)?;
            let opts = SearchOptions {
                kind,
                alpha: a.alpha,
                rule: a.rule.into(),
                fit,
                names: table.feature_names.clone(),
            };
            let state = eh_search(&counts, &opts)?;
            (None, Output::Search(SearchSummary::from(&state)))
        }
    };
    Ok(Report {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: argv,
        model,
        result,
    })
}

fn matrices(model: &Model, names: &[String]) -> Result<MatrixDump, CliError> {
    let k = model.k();
    let design = model.design();
    let cells: Vec<String> = design.cols().iter().map(|c| c.label(k)).collect();
    let row_names: Vec<String> = design
        .rows()
        .iter()
        .map(|s| subset_name(*s, names))
        .collect();
    let kernel = model.kernel();
    let kernel_rows: Vec<String> = (1..=kernel.nrows()).map(|i| format!("g{i}")).collect();
    let mut out = vec![
        NamedMatrix::new("design", row_names, cells.clone(), &design.to_dense()?),
        NamedMatrix::new("kernel", kernel_rows, cells, kernel),
    ];
    if model.space().space() == Space::Ip {
        let corner = build_design(k, Space::Ip)?;
        let subsets: Vec<String> = corner
            .rows()
            .iter()
            .map(|s| subset_name(*s, names))
            .collect();
        let ip_cells: Vec<String> = corner.cols().iter().map(|c| c.label(k)).collect();
        let (_, s_inv) = invert_corner(k)?;
        out.push(NamedMatrix::new(
            "corner",
            subsets.clone(),
            ip_cells.clone(),
            &corner.to_dense()?,
        ));
        out.push(NamedMatrix::new(
            "corner inverse",
            ip_cells,
            subsets,
            &s_inv,
        ));
    }
    Ok(MatrixDump {
        k,
        space: model.space().space(),
        matrices: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_policy_values() {
        assert_eq!(parse_zero_policy("error"), Ok(ZeroPolicy::Error));
        assert_eq!(parse_zero_policy("epsilon"), Ok(ZeroPolicy::Epsilon(0.5)));
        assert_eq!(
            parse_zero_policy("epsilon:0.1"),
            Ok(ZeroPolicy::Epsilon(0.1))
        );
        assert!(parse_zero_policy("epsilon:-1").is_err());
        assert!(parse_zero_policy("drop").is_err());
    }

    #[test]
    fn k_from_model_letters() {
        assert_eq!(infer_k("[AC][BC]"), Some(3));
        assert_eq!(infer_k("[A][D]"), Some(4));
        assert_eq!(infer_k("[]"), None);
    }

    #[test]
    fn matrices_for_two_factor_model() {
        let (model, names) = model_without_table("[AC][BC]", KindArg::Has, None).unwrap();
        let dump = matrices(&model, &names).unwrap();
        let design = &dump.matrices[0];
        assert_eq!(design.rows, ["A", "B", "C", "AC", "BC"]);
        assert_eq!(
            design.cols,
            ["100", "010", "001", "110", "101", "011", "111"]
        );
        assert_eq!(dump.matrices[1].entries.len(), 2);
        assert_eq!(dump.matrices[3].rows.len(), 7);
    }
}
