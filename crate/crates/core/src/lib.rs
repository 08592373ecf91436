//! Learning algorithms for two families of selling mechanisms: menus of
//! two-part tariffs and menus of lotteries.
//!
//! The crate is organized around the pipeline the experiments run through:
//!
//! - [`mechanisms`]: buyer valuations, menus, best-response oracles, and
//!   revenue evaluation for both families.
//! - [`cover`]: revenue-preserving rounding procedures and enumeration of the
//!   finite discretized menu grids every finite-expert learner runs over.
//! - [`experts`]: weighted-majority (full information) and Exp3 (bandit)
//!   learners, generic over any finite menu set.
//! - [`limited_types`]: the finite-buyer-type machinery — indifference
//!   hyperplanes, feasible mappings and their convex regions, extreme-point
//!   menus, barycentric spanners, and the block-structured partial-information
//!   learner built on them.
//! - [`dispersion`]: empirical dispersion measurement (ball-split counts for
//!   tariffs, the constant-crossing-probability construction for lotteries)
//!   and a grid-discretized semi-bandit Exp3-SET learner.
//! - [`distributional`]: ERM over the discretized covers plus the
//!   sample-complexity calculators.
//! - [`harness`]: experiment configuration, adversary generators, CSV trace
//!   output, and reproducibility plumbing used by the CLI.
//!
//! All randomized components are seeded and deterministic: the same
//! configuration and seed produce byte-identical traces. Hot loops
//! (cover-wide revenue evaluation, ERM, Monte Carlo trials, parameter sweeps)
//! run on rayon when the default `parallel` feature is enabled and fall back
//! to sequential execution otherwise.

pub mod cover;
pub mod dispersion;
pub mod distributional;
pub mod error;
pub mod experts;
pub mod harness;
pub mod limited_types;
pub mod mechanisms;
pub mod parallel;

pub use error::{Error, Result};

/// Absolute tolerance for utility/revenue tie comparisons.
pub const TIE_TOL: f64 = 1e-9;

/// Default cap on the number of menus an enumerator is willing to produce.
/// Overridable through `MENU_FORGE_CAP` (see [`harness`]).
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;
