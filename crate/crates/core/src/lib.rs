//! Sublinear estimation of the total weight and the support size of a weighted
//! universe, driven through simulated sampling oracles.
//!
//! A [`Universe`] is an immutable array of non-negative weights. Estimators never
//! read it directly: they go through an [`OracleSession`], which exposes the
//! weighted-conditional, uniform-conditional, evaluation and full-domain access
//! models and counts every query. Exact ground truth (sums, support sizes, total
//! variation distances) is computed from the same universe so estimates can be
//! checked against it.

pub mod error;
pub mod harness;
pub mod oracles;
pub mod partition;
pub mod stats;
pub mod sum_estimators;
pub mod support_estimators;
pub mod universe;

pub use error::{Error, Result};
pub use oracles::{exact_pmf, CondModel, OracleSession, QueryStats, SamplePair};
pub use partition::{flatten, make_partition, Direction, IntervalPartition};
pub use sum_estimators::{
    estimate_sum_monotone, estimate_sum_unimodal, find_valley, test_uniformity, SumBranch, SumEstimate,
    SumParams, UniformityVerdict, UnimodalEstimate, Verdict,
};
pub use support_estimators::{
    estimate_neighborhood_fraction, estimate_support_size, in_neighborhood, NeighborhoodEstimate,
    SupportEstimate, SupportParams, SupportVariant,
};
pub use universe::{exact_tv_distance, generate, GeneratorSpec, Interval, Universe};
