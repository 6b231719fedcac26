//! Hierarchical Aitchison–Silvey (HAS), quasi log-linear (QLL) and log-linear
//! (LL) models for binary features on the incomplete sample space that lacks
//! the all-absent cell.
//!
//! ```
//! use hasfit::{build_model, mle, FitOptions, ModelKind, ModelSpec, ObservedCounts};
//!
//! let names = ["A", "B", "C"];
//! let spec = ModelSpec::parse(ModelKind::Has, "[AC][BC]", &names).unwrap();
//! let model = build_model(&spec).unwrap();
//! assert_eq!(model.df(), 2);
//!
//! let counts = ObservedCounts::new(model.space(), vec![9, 8, 7, 6, 5, 4, 3]).unwrap();
//! let fit = mle(&counts, &model, &FitOptions::default()).unwrap();
//! assert!((fit.p_hat.iter().sum::<f64>() - 1.0).abs() < 1e-10);
//! ```

pub mod error;
pub mod fit;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod param;
pub mod search;

pub use error::{HasError, Result};
pub use fit::{
    bregman_project, chisq_sf, gipf, mle, Convergence, FitOptions, FitResult, GipfOutcome,
    ObservedCounts, ZeroPolicy,
};
pub use lattice::{
    ascending_closure, default_feature_names, descending_closure, descending_complement,
    parity_split, revlex_cells, Cell, ClassKind, FeatureSet, ParitySplit, SampleSpace, Space,
    SubsetClass, MAX_K,
};
pub use linalg::IntMatrix;
pub use models::{
    binomial_generators, build_model, dehomogenize, has_overall_effect, homogenize,
    BinomialGenerator, Direction, Model, ModelKind, ModelSpec,
};
pub use param::{
    build_design, corner_params, extended_mean, generalized_ratio, invert_corner, mean_params,
    mixed_split, Conditioning, CornerParams, DesignMatrix, Distribution, ExtendedMean, MeanParams,
    MixedSplit, MAX_DENSE_K,
};
pub use search::{eh_search, DecisionRule, SearchOptions, SearchState};
