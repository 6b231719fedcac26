use thiserror::Error;

pub type Result<T, E = HasError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HasError {
    #[error("feature count {0} out of range (1..={max})", max = crate::lattice::MAX_K)]
    FeatureCount(usize),

    #[error("dense matrices are limited to k <= {max}, got k = {0}", max = crate::param::MAX_DENSE_K)]
    DenseTooLarge(usize),

    #[error("invalid feature subset: {0}")]
    InvalidSubset(String),

    #[error("invalid subset class: {0}")]
    InvalidClass(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error(
        "zero count in cell {cell}; the MLE may not exist (use an epsilon zero policy to override)"
    )]
    ZeroCount { cell: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("cannot parse model '{input}': {reason}")]
    ModelSyntax { input: String, reason: String },

    #[error("design matrix is rank deficient (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("integer overflow during exact elimination")]
    Overflow,

    #[error("generators span both sample spaces or do not match the requested direction")]
    MixedSpace,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("proportional fitting did not converge after {sweeps} sweeps (max relative residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("target subset sums look infeasible: residual stalled at {residual:e} after {sweeps} sweeps")]
    Infeasible { sweeps: usize, residual: f64 },

    #[error("could not bracket the scale multiplier: h({lo:e}) = {h_lo:e}, h({hi:e}) = {h_hi:e}")]
    Bracket {
        lo: f64,
        hi: f64,
        h_lo: f64,
        h_hi: f64,
    },

    #[error("scale multiplier search did not converge after {iterations} iterations (|1'p - 1| = {gap:e})")]
    OuterNotConverged { iterations: usize, gap: f64 },
}

impl HasError {
    /// True for failures of the iterative fitting algorithms, as opposed to
    /// invalid input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            HasError::NotConverged { .. }
                | HasError::Infeasible { .. }
                | HasError::Bracket { .. }
                | HasError::OuterNotConverged { .. }
        )
    }
}
