//! Limited-buyer-type machinery.
//!
//! With a known finite set of buyer types, the menu parameter space splits
//! into convex polytopes on which every type's choice is constant (a
//! *mapping*); cumulative revenue is linear on each polytope, so only the
//! polytope corners matter. This module builds the indifference hyperplanes,
//! enumerates the corner menus (`epsilon`-perturbed into their regions),
//! derives the indicator-vector set and its barycentric spanner, and runs the
//! block-structured partial-information learner on top of them.

mod geometry;
mod lp;
mod model;
mod runner;
mod spanner;

pub use geometry::{
    build_hyperplanes, corner_loss_bound_check, enumerate_extreme_points, mapping_of_menu,
    ExtremePoint, ExtremePointSet, Hyperplane, HyperplaneKind, Mapping, Region,
};
pub use model::{MenuPoint, TypeSet};
pub use runner::{
    exact_block_frequencies, precompute, run_limited_bandit, simulate_block_estimates,
    LimitedPrecomputation,
};
pub use spanner::{barycentric_spanner, build_indicator_set, IndicatorVector, SpannerBasis};
