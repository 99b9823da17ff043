//! Contextual multi-objective bandit that blends a set of controllers.
//!
//! Each controller (arm) is scored on several objectives at once. A linear
//! ridge estimator with optimistic confidence bounds predicts every arm's
//! feedback vector; the [`Blender`] keeps the arms whose estimated maximal
//! loss is smallest and draws uniformly among them.
//!
//! The crate is `no_std` with `alloc`. File formats, configuration and the
//! command line live in the `moblend` crate.

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod blender;
pub mod env;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod pareto;
pub mod rng;
pub mod rollout;

pub use blender::{assert_nondominated_pick, candidate_set, ArmId, Blender, SelectionMode, StepRecord};
pub use env::{Environment, Transition};
pub use error::{Error, Result};
pub use estimator::{batch_solve, confidence_radius, EstimatorConfig, EstimatorState};
pub use metrics::{
    cml_upper_bound, correct_pick_rate, cumulative_maximal_loss, metric_series, pareto_regret, pr_theory_bound,
    MetricAccumulator, MetricSeries, RunTrace, StepMetrics,
};
pub use pareto::{
    dominates, gaps, maximal_loss, maximal_losses, non_dominated_set, pareto_suboptimality_gap, GapResult,
    ObjectiveVector,
};
pub use rollout::{Policy, Runner, StepOutcome};
