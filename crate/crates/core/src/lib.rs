//! Core-stability analysis for non-centroid clustering under the max-loss
//! objective.
//!
//! * [`metric`]: finite pseudometric instances from matrices, graphs or points.
//! * [`engine`]: losses, the CoreCheck factor of a clustering, blocking
//!   coalitions and the instance bound over all clusterings.
//! * [`fixtures`]: the graph gadget and the planar point set with empty cores.
//! * [`optimizer`]: derivative-free search over point coordinates that
//!   maximizes the instance bound.

// index loops read better than iterator chains in the matrix code
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod fixtures;
pub mod metric;
pub mod optimizer;

pub use engine::{
    blocking_report, core_check, enumerate_clusterings, expand_and_check, instance_bound, loss,
    BoundCertificate, BoundOptions, Clustering, Coalition, CoreChecker, CoreReport, EngineError,
    Orbit, Symmetry,
};
pub use fixtures::{build_gadget, euclidean_config, euclidean_fixture, named_coalitions, GadgetParams, NamedCoalitions};
pub use metric::{
    from_points, metric_closure, validate, EuclideanConfig, GraphSpec, Instance, MetricError,
    ValidationReport, Violation, DEFAULT_TOL,
};
pub use optimizer::{evaluate, search, Candidate, Init, Pin, SearchOutcome, SearchParams};
