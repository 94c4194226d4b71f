//! Recruitment policies for crowdsourced map freshness.
//!
//! A platform watches one map segment whose age-of-information (AoI) ticks up
//! every slot and drops back to 1 whenever a recruited vehicle delivers a
//! qualifying update. Each slot the platform picks a subset of vehicle types
//! to recruit; arrivals are Bernoulli per type, every recruited arrival is
//! paid its mean cost, and each paid arrival qualifies with its sensing
//! probability. The long-run objective trades expected freshness gain against
//! expected recruitment spend through a weight `beta`.
//!
//! The crate is organised around that pipeline:
//!
//! - [`model`]: instances, action subsets, per-action statistics.
//! - [`structure`]: the ascending-hazard action order, per-switch threshold
//!   upper bounds, and the two-type structure classifier.
//! - [`solver`]: truncated average-cost MDP plus three interchangeable
//!   relative-value-iteration solvers and threshold extraction.
//! - [`eval`]: exact stationary evaluation, Monte-Carlo simulation, reference
//!   baselines, and a brute-force threshold-policy oracle.

pub mod error;
pub mod eval;
pub mod model;
pub mod solver;
pub mod structure;

pub use error::Error;
pub use eval::{
    baseline_auction, baseline_draim, baseline_zero_wait, brute_force_best_threshold_policy,
    evaluate_policy_exact, simulate, stationary_distribution, EvaluationReport, SimResult,
    StationaryDistribution, StepPolicy,
};
pub use model::{ActionSet, ActionStats, ProblemInstance, VehicleType};
pub use solver::{
    build_truncated_mdp, extract_thresholds, rvi_solve, solve_with_truncation_adapt, srvi_solve,
    AdaptOptions, AdaptRound, SolveOptions, SolverId, SolverResult, ThresholdPolicy, TruncatedMdp,
};
pub use solver::{
    bound_based_rvi_solve, solve, SolverResultSummary, ThresholdEntry, NEVER_REACHED,
};
pub use structure::{
    classify_binary_structure, marginal_cost_effectiveness, optimal_action_order,
    threshold_upper_bounds, ActionOrder, BinaryStructure, StructureClass, ThresholdBounds,
};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
