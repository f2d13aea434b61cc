//! Continuous black-box optimization benchmarks built from centroid
//! clustering problems.
//!
//! A point dataset and a cluster count `k` define an unconstrained
//! minimization problem over flattened center vectors in `ℝ^{k·d}`: the mean
//! squared distance from each point to its nearest center. The resulting
//! landscapes combine `k!` permutation-symmetric regions with neutral
//! plateaus where a center serves no point, which makes them useful stress
//! tests for optimizers.
//!
//! The crate bundles a 40-problem default suite (10 two-dimensional datasets
//! × k ∈ {2, 3, 5, 10}), K-Means++/Lloyd baselines, a configurable
//! evolution-strategy family with budget-metered evaluation, basin and
//! symmetry analysis of local-search outcomes, run-log analytics (empirical
//! attainment, rank correlations, module frequencies) and a symmetry-breaking
//! stick-breaking reparameterization.

pub mod analysis;
pub mod baseline;
pub mod data;
pub mod error;
pub mod landscape;
pub mod optimizers;
pub mod problem;
pub mod runlog;
pub mod suite;
pub mod transform;

pub use error::{Error, Result};
pub use problem::{
    AssignmentMetric, CenterVector, ClusteringProblem, ErrorAggregation, EvalMeter, Objective,
    RegionId,
};
pub use suite::{build_suite, ProblemSuite, SuiteManifest, SuiteProblem};
