//! Sample-efficient estimates of how well the best linear model could fit a labeled
//! distribution: unexplained variance for regression and the best linear
//! classifier's error under a logistic model, from far fewer samples than fitting
//! the model would take.

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod classification;
pub mod dataset;
pub mod error;
pub mod oracles;
pub mod poly;
pub mod quadrature;
pub mod regression;
pub mod rng;
pub mod simplex;
pub mod synth;

pub use classification::{
    bayes_error_oracle, build_link_map, estimate_classification_error, fg_apply, ClassificationReport, FgMode,
    LinkMap,
};
pub use dataset::{
    chain_form, gram_upper, moment_estimate, GramChain, GramOperator, ImplicitGram, LabelKind, LabeledDataset,
    MomentEstimate,
};
pub use error::{Error, Result};
pub use poly::{evaluate_plan, fit_plan, fit_plan_with, PlanOptions, PolynomialPlan};
pub use regression::{
    baseline_unbiased, estimate_general, estimate_isotropic, normalize_labels, theoretical_scaling, whiten,
    EstimateReport, EstimatorMethod, MomentTerm, TheoreticalBound,
};
