//! Parallel metrization of partitioned finite metric spaces.
//!
//! Two nonempty sets `A`, `B` of a metric space are *parallel* when every
//! point of `A` is at distance `d(A, B)` from `B` and every point of `B` is at
//! distance `d(A, B)` from `A`. Given a finite metric space and a partition of
//! its points, [`construct_parallel_metric`] builds a new metric, exact in
//! dyadic arithmetic and bounded below by `min(m, 1)`, under which all blocks
//! are pairwise parallel. [`certify_parallel`] and friends check the result
//! and its consequences without trusting the construction.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;

pub mod construction;
pub mod cover;
pub mod dyadic;
pub mod metric;
pub mod points;
pub mod verification;

pub use construction::{
    build_base_cover, build_delta, build_scale_cover, chain_closure, construct_parallel_metric,
    construct_parallel_metric_with, optimal_chain, plan_levels, transport_chain, ChainStep,
    ChainWitness, ConstructionError, ConstructionOptions, ConstructionTrace, DeltaTable, LevelPlan,
    ScaleCoverLevel,
};
pub use cover::{semicontinuity_diagnostic, validate_partition, Cover, CoverViolation, Partition, PartitionReport};
pub use dyadic::DyadicValue;
pub use metric::{
    diameter, min_positive_distance, point_set_distance, set_distance, validate_metric, Distance,
    DyadicMetric, FiniteMetricSpace, Metric, MetricError, MetricViolation, ValidationReport,
    DEFAULT_METRIC_TOLERANCE,
};
pub use points::{BlockId, PointId, PointSet};
pub use verification::{
    certify_constructed, certify_parallel, check_domination, check_necessity, disjoint_or_coincide, is_parallel_pair, PairDichotomy,
    oracle_chain_infimum, oracle_delta, quotient_metric, Dichotomy, ParallelCertificate,
    ParallelViolation, QuotientMetric, Side, Verdict, VerifyError, DEFAULT_PARALLEL_TOLERANCE,
};
