//! Set-membership state estimation for a planar vehicle: zonotopes, SE(2)
//! geometry, observer gain design, the invariant filter on the group and the
//! classical Euclidean filter, plus the Monte Carlo harness that compares them.

pub mod error;
pub mod euclidean;
pub mod gain;
pub mod group_zonotope;
pub mod harness;
pub mod invariant;
pub mod se2;
pub mod selftest;
pub mod zonotope;

pub use error::{Error, Result};
pub use euclidean::{EuclideanFilter, ZsmfState};
pub use gain::GainStrategy;
pub use harness::{
    compare, run_experiment, Comparison, ExperimentConfig, ExperimentResult, FilterKind, GainKind,
    Improvement, MetricsReport,
};
pub use group_zonotope::{GroupZonotope, Side, StateBounds};
pub use invariant::{InnovationMode, InvariantFilter, InzsmfState, SystemModel};
pub use se2::{Se2Element, TangentVector};
pub use zonotope::{IntervalBox, Zonotope};
