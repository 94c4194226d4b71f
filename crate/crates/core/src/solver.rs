//! Truncated-chain solvers for the long-run average recruitment objective.
//!
//! The exact decision process lives on AoI states `1, 2, 3, ...`. Solving
//! caps the age at a truncation level `M` (state `M` maps back onto itself
//! when recruitment fails) and runs relative value iteration on the finite
//! chain. Every backup is half-damped: the state keeps half of its own
//! previous value and moves half-way toward the one-step target. Damping
//! makes the sweep converge even on deterministic-reset fleets, whose
//! undamped value sequence cycles forever, and it leaves the fixed point's
//! policy, thresholds, and average cost unchanged.
//!
//! Three entry points share one sweep engine and differ only in which
//! candidate actions each state scans:
//!
//! * [`rvi_solve`] scans every subset of the fleet,
//! * [`srvi_solve`] scans the deduplicated ascending action list starting
//!   from the previous state's choice (optimal choices never get less
//!   aggressive as the age grows, so nothing below that floor can win),
//! * [`bound_based_rvi_solve`] additionally starts each state's scan at the
//!   first order step whose threshold upper bound admits the state.
//!
//! [`solve_with_truncation_adapt`] wraps the bound-based solver in a loop
//! that grows `M` until the truncation provably leaves the reported
//! thresholds untouched.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, PartialSolve};
use crate::model::{dedup_sorted_stats, ActionSet, ActionStats, ProblemInstance};
use crate::structure::{optimal_action_order, threshold_upper_bounds, ActionOrder, ThresholdBounds};
use crate::Result;

// ---------------------------------------------------------------------------
// Tunables
// ---------------------------------------------------------------------------

/// Default relative convergence tolerance for value iteration.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Default sweep cap; hitting it is reported as an error, never silently.
pub const DEFAULT_ITERATION_CAP: usize = 10_000_000;

/// Default truncation level when the caller fixes `M` by hand.
pub const DEFAULT_TRUNCATION: usize = 1000;

/// Slack added on top of the minimum viable truncation by the adaptation
/// loop, so the first round usually satisfies the stability criterion.
pub const DEFAULT_ADAPT_MARGIN: usize = 64;

/// Rounds the adaptation loop tries before reporting failure.
pub const DEFAULT_MAX_ADAPT_ROUNDS: usize = 16;

/// Largest truncation the adaptation loop will auto-select. Instances whose
/// bounds blow past this (vanishing freshness weight, near-dead fleets) get
/// an error instead of a multi-gigabyte allocation.
pub const MAX_ADAPT_TRUNCATION: usize = 10_000_000;

/// Threshold value meaning "this switch never happens below the trusted
/// horizon". Stored instead of a fabricated large age.
pub const NEVER_REACHED: u64 = u64::MAX;

/// Absolute slack when picking the arg-min candidate: anything this close to
/// the true minimum counts as tied, and ties go to the candidate that comes
/// first in (success probability, expected cost, membership) order.
const ARGMIN_TIE_TOLERANCE: f64 = 1e-12;

/// Weight a state keeps on its own previous value in every backup. One half
/// is the textbook choice: it kills periodicity outright and costs at most
/// one extra bit of precision per sweep.
const APERIODICITY_MIX: f64 = 0.5;

/// Floor for the denominator of the relative residual.
const RESIDUAL_FLOOR: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Truncated chain
// ---------------------------------------------------------------------------

/// The finite-state restriction of the recruitment process to AoI states
/// `1..=m`, with both action lists the solvers scan.
#[derive(Debug, Clone)]
pub struct TruncatedMdp<'a> {
    instance: &'a ProblemInstance,
    m: usize,
    full: Vec<ActionStats>,
    deduped: Vec<ActionStats>,
}

/// Builds the truncated chain. `m` must be at least 2 so that the chain has
/// a non-trivial cap state.
pub fn build_truncated_mdp(instance: &ProblemInstance, m: usize) -> Result<TruncatedMdp<'_>> {
    if m < 2 {
        return Err(Error::TruncationTooSmall { m, min_required: 2 });
    }
    let full = instance.all_action_stats_sorted();
    let deduped = dedup_sorted_stats(&full);
    Ok(TruncatedMdp { instance, m, full, deduped })
}

impl<'a> TruncatedMdp<'a> {
    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn truncation(&self) -> usize {
        self.m
    }

    /// Every subset with its statistics, ascending; the classical solver's
    /// candidate list.
    pub fn full_action_stats(&self) -> &[ActionStats] {
        &self.full
    }

    /// One representative per distinct success probability, ascending; the
    /// structured solvers' candidate list.
    pub fn deduped_action_stats(&self) -> &[ActionStats] {
        &self.deduped
    }

    /// Transition distribution out of state `s` under `action`, as
    /// `(successor, probability)` pairs with nonzero probability, successors
    /// ascending. Success resets the age to 1; failure ages it by one slot,
    /// saturating at the cap.
    pub fn transition_row(&self, s: usize, action: ActionSet) -> Result<Vec<(usize, f64)>> {
        if s < 1 || s > self.m {
            return Err(Error::InvalidParameter(format!(
                "state {s} outside the truncated chain 1..={}",
                self.m
            )));
        }
        let q = self.instance.success_probability(action)?;
        let next = (s + 1).min(self.m);
        let mut row = Vec::with_capacity(2);
        if q > 0.0 {
            row.push((1, q));
        }
        if q < 1.0 {
            // Merge rather than append if failure also lands on state 1,
            // which happens only in the degenerate chain with m = 1 (already
            // rejected) so the push is safe.
            row.push((next, 1.0 - q));
        }
        Ok(row)
    }
}

// ---------------------------------------------------------------------------
// Options and identities
// ---------------------------------------------------------------------------

/// Which candidate-scan strategy a result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverId {
    #[serde(rename = "rvi")]
    Rvi,
    #[serde(rename = "srvi")]
    Srvi,
    #[serde(rename = "bound-rvi")]
    BoundRvi,
}

impl SolverId {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverId::Rvi => "rvi",
            SolverId::Srvi => "srvi",
            SolverId::BoundRvi => "bound-rvi",
        }
    }

    pub const ALL: [SolverId; 3] = [SolverId::Rvi, SolverId::Srvi, SolverId::BoundRvi];
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rvi" => Ok(SolverId::Rvi),
            "srvi" => Ok(SolverId::Srvi),
            "bound-rvi" => Ok(SolverId::BoundRvi),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver '{other}' (expected rvi, srvi, or bound-rvi)"
            ))),
        }
    }
}

/// Knobs shared by all solve entry points.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative residual below which the sweep stops.
    pub tolerance: f64,
    /// Hard sweep cap; exceeding it is an error carrying partial state.
    pub iteration_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tolerance: DEFAULT_TOLERANCE, iteration_cap: DEFAULT_ITERATION_CAP }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if self.iteration_cap == 0 {
            return Err(Error::InvalidParameter("iteration cap must be at least 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sweep engine
// ---------------------------------------------------------------------------

/// How a solve scans its candidate list each state.
struct ScanPlan<'a> {
    /// Candidates ascending by (success probability, expected cost,
    /// membership). Never empty.
    list: &'a [ActionStats],
    /// Optional per-state first index (the bound-based pruning); indexed by
    /// `state - 1`.
    per_state_start: Option<&'a [usize]>,
    /// Start each state's scan at the previous state's chosen index.
    carry_floor: bool,
}

struct SweepOutcome {
    /// Relative values, index 0 is state 1. Entry 0 equals the average-cost
    /// estimate at the fixed point.
    values: Vec<f64>,
    /// Chosen index into the scan list per state, from the last sweep.
    policy_idx: Vec<usize>,
    iterations: usize,
}

/// Damped relative value iteration with synchronous (batch) sweeps: every
/// backup in a sweep reads the previous sweep's values, and the previous
/// value of state 1 is subtracted from every state as the relative offset.
fn run_sweeps(
    instance: &ProblemInstance,
    m: usize,
    plan: &ScanPlan<'_>,
    opts: &SolveOptions,
) -> Result<SweepOutcome> {
    opts.validate()?;
    debug_assert!(m >= 2);
    debug_assert!(!plan.list.is_empty());

    let beta = instance.beta();
    let one_minus_beta = 1.0 - beta;
    let beta_eps = beta * instance.epsilon_unit();
    let keep = APERIODICITY_MIX;
    let step = 1.0 - APERIODICITY_MIX;

    let mut v = vec![0.0f64; m];
    let mut v_next = vec![0.0f64; m];
    let mut policy_idx = vec![0usize; m];
    let mut iterations = 0usize;

    loop {
        let v_ref = v[0];
        let head = v[0];
        let mut floor = 0usize;
        let mut prev_q = f64::NEG_INFINITY;

        for s in 1..=m {
            let mut start = if plan.carry_floor { floor } else { 0 };
            if let Some(starts) = plan.per_state_start {
                start = start.max(starts[s - 1]);
            }
            let candidates = &plan.list[start..];
            debug_assert!(!candidates.is_empty());

            let d = s as f64;
            // One-slot cost is (1 - beta) E - q * gain + loss; the two
            // age-dependent factors are hoisted out of the candidate loop.
            let gain = beta_eps * (d * d + 2.0 * d);
            let loss = beta_eps * (1.0 + d) * (1.0 + d);
            let stay = v[s - 1];
            let next = v[s.min(m - 1)];

            let backup = |stat: &ActionStats| -> f64 {
                let q = stat.success_prob;
                let u = one_minus_beta * stat.expected_cost - q * gain + loss;
                u + keep * stay + step * (q * head + (1.0 - q) * next)
            };

            // Two passes: exact minimum first, then the earliest candidate
            // within tie tolerance of it, so equal-value actions resolve to
            // the least aggressive, cheapest, canonical one.
            let mut min_val = f64::INFINITY;
            for stat in candidates {
                let b = backup(stat);
                if b < min_val {
                    min_val = b;
                }
            }
            let mut chosen = start;
            for (k, stat) in candidates.iter().enumerate() {
                if backup(stat) <= min_val + ARGMIN_TIE_TOLERANCE {
                    chosen = start + k;
                    break;
                }
            }

            let chosen_q = plan.list[chosen].success_prob;
            debug_assert!(
                chosen_q >= prev_q,
                "optimal success probability decreased within a sweep at state {s} \
                 ({prev_q} -> {chosen_q})"
            );
            prev_q = chosen_q;
            if plan.carry_floor {
                floor = chosen;
            }
            policy_idx[s - 1] = chosen;
            v_next[s - 1] = backup(&plan.list[chosen]) - v_ref;
        }

        iterations += 1;
        let mut residual = 0.0f64;
        for i in 0..m {
            let rel = (v_next[i] - v[i]).abs() / v_next[i].abs().max(RESIDUAL_FLOOR);
            if rel > residual {
                residual = rel;
            }
        }
        std::mem::swap(&mut v, &mut v_next);
        if residual <= opts.tolerance {
            return Ok(SweepOutcome { values: v, policy_idx, iterations });
        }
        if iterations >= opts.iteration_cap {
            let policy = policy_idx.iter().map(|&i| plan.list[i].action).collect();
            return Err(Error::IterationCapExceeded {
                iterations,
                residual,
                partial: Box::new(PartialSolve { values: v, policy }),
            });
        }
    }
}

// ---------------------------------------------------------------------------
// Threshold policies
// ---------------------------------------------------------------------------

/// One switch of a threshold policy, for serialization: from age `theta`
/// onward the policy plays `to` instead of `from`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdEntry {
    pub from: ActionSet,
    pub to: ActionSet,
    pub theta: u64,
}

/// A policy of the structured form: walk the action order and switch to step
/// `k` once the age reaches the k-th threshold. Thresholds are nondecreasing
/// and at least 1; a [`NEVER_REACHED`] entry means the switch is beyond the
/// solver's trusted horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPolicy {
    order: ActionOrder,
    thresholds: Vec<u64>,
}

impl ThresholdPolicy {
    /// Validates lengths and monotonicity. `thresholds` must have exactly
    /// one entry per switch of the order (its length minus one).
    pub fn new(order: ActionOrder, thresholds: Vec<u64>) -> Result<Self> {
        let switches = order.len().saturating_sub(1);
        if thresholds.len() != switches {
            return Err(Error::InvalidParameter(format!(
                "expected {switches} thresholds for a {}-step order, got {}",
                order.len(),
                thresholds.len()
            )));
        }
        if thresholds.iter().any(|&t| t < 1) {
            return Err(Error::InvalidParameter("thresholds must be at least 1".into()));
        }
        if thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("thresholds must be nondecreasing".into()));
        }
        Ok(ThresholdPolicy { order, thresholds })
    }

    pub fn order(&self) -> &ActionOrder {
        &self.order
    }

    pub fn thresholds(&self) -> &[u64] {
        &self.thresholds
    }

    /// The action played at age `aoi`: the deepest order step whose
    /// threshold has been reached.
    pub fn action_at(&self, aoi: u64) -> ActionSet {
        debug_assert!(aoi >= 1);
        let idx = self.thresholds.partition_point(|&t| t <= aoi);
        self.order.steps()[idx].action
    }

    /// The switches as serializable entries.
    pub fn entries(&self) -> Vec<ThresholdEntry> {
        let steps = self.order.steps();
        self.thresholds
            .iter()
            .enumerate()
            .map(|(k, &theta)| ThresholdEntry {
                from: steps[k].action,
                to: steps[k + 1].action,
                theta,
            })
            .collect()
    }
}

/// Reads thresholds off a tabular policy. Only the first `trusted_states`
/// entries are consulted (the caller excludes states the truncation may have
/// distorted); switches that do not happen inside the trusted window come
/// back as [`NEVER_REACHED`].
///
/// The tabular policy must stay on the order and use never-decreasing order
/// steps, otherwise a [`Error::StructuralViolation`] pinpoints the offending
/// state.
pub fn extract_thresholds(
    tabular: &[ActionSet],
    order: &ActionOrder,
    trusted_states: usize,
) -> Result<ThresholdPolicy> {
    let switches = order.len().saturating_sub(1);
    let mut thresholds = vec![NEVER_REACHED; switches];
    let limit = trusted_states.min(tabular.len());

    let mut reached = 0usize;
    for (i, &action) in tabular.iter().take(limit).enumerate() {
        let state = i + 1;
        let idx = order.index_of(action).ok_or_else(|| Error::StructuralViolation {
            state,
            detail: format!("action {action} is not on the optimal order"),
        })?;
        if idx < reached {
            return Err(Error::StructuralViolation {
                state,
                detail: format!("order step fell from {reached} back to {idx}"),
            });
        }
        while reached < idx {
            thresholds[reached] = state as u64;
            reached += 1;
        }
    }
    ThresholdPolicy::new(order.clone(), thresholds)
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// Everything a solve produces.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub solver_id: SolverId,
    /// Truncation level actually solved at.
    pub m_used: usize,
    /// Completed sweeps until the residual dropped below tolerance.
    pub iterations: usize,
    /// Time spent inside the solve call, threshold extraction included.
    pub wall_time: Duration,
    /// Gain estimate: the relative value of state 1 at the fixed point.
    pub average_cost_estimate: f64,
    /// Relative values per state, index 0 is state 1.
    pub values: Vec<f64>,
    /// Chosen action per state, index 0 is state 1.
    pub tabular_policy: Vec<ActionSet>,
    /// The structured form read off the trusted part of the table.
    pub thresholds: ThresholdPolicy,
    /// Rounds of the truncation adaptation loop; empty for fixed-`M` solves.
    pub adapt_trace: Vec<AdaptRound>,
}

impl SolverResult {
    /// Long-run average payoff of the computed policy (cost negated).
    pub fn payoff(&self) -> f64 {
        -self.average_cost_estimate
    }

    pub fn summary(&self) -> SolverResultSummary {
        SolverResultSummary {
            solver_id: self.solver_id,
            m_used: self.m_used as u64,
            iterations: self.iterations as u64,
            wall_time_ns: u64::try_from(self.wall_time.as_nanos()).unwrap_or(u64::MAX),
            thresholds: self.thresholds.entries(),
            average_cost_estimate: self.average_cost_estimate,
        }
    }
}

/// The serializable face of a [`SolverResult`]; also the on-disk policy
/// format the evaluation tools read back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverResultSummary {
    pub solver_id: SolverId,
    pub m_used: u64,
    pub iterations: u64,
    pub wall_time_ns: u64,
    pub thresholds: Vec<ThresholdEntry>,
    pub average_cost_estimate: f64,
}

/// One round of the truncation adaptation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdaptRound {
    pub m: usize,
    pub iterations: usize,
    /// Deepest threshold read off the trusted window, if it was reached.
    pub theta_last: Option<u64>,
    /// Whether `m >= theta_last + iterations` held, which certifies that no
    /// state below the deepest threshold ever saw the truncation boundary.
    pub satisfied: bool,
}

// ---------------------------------------------------------------------------
// Solver entry points
// ---------------------------------------------------------------------------

fn finish(
    id: SolverId,
    m: usize,
    list: &[ActionStats],
    order: &ActionOrder,
    out: SweepOutcome,
    started: Instant,
) -> Result<SolverResult> {
    let tabular: Vec<ActionSet> = out.policy_idx.iter().map(|&i| list[i].action).collect();
    let trusted = m.saturating_sub(out.iterations.saturating_add(1));
    let thresholds = extract_thresholds(&tabular, order, trusted)?;
    Ok(SolverResult {
        solver_id: id,
        m_used: m,
        iterations: out.iterations,
        wall_time: started.elapsed(),
        average_cost_estimate: out.values[0],
        values: out.values,
        tabular_policy: tabular,
        thresholds,
        adapt_trace: Vec::new(),
    })
}

/// Classical relative value iteration: every state scans every subset.
pub fn rvi_solve(mdp: &TruncatedMdp<'_>, tolerance: f64) -> Result<SolverResult> {
    rvi_solve_with(mdp, &SolveOptions { tolerance, ..SolveOptions::default() })
}

pub fn rvi_solve_with(mdp: &TruncatedMdp<'_>, opts: &SolveOptions) -> Result<SolverResult> {
    let started = Instant::now();
    let plan = ScanPlan { list: &mdp.full, per_state_start: None, carry_floor: false };
    let out = run_sweeps(mdp.instance, mdp.m, &plan, opts)?;
    let order = optimal_action_order(mdp.instance);
    finish(SolverId::Rvi, mdp.m, &mdp.full, &order, out, started)
}

/// Structured value iteration: scans the deduplicated ascending list and
/// starts each state at the previous state's choice.
pub fn srvi_solve(mdp: &TruncatedMdp<'_>, tolerance: f64) -> Result<SolverResult> {
    srvi_solve_with(mdp, &SolveOptions { tolerance, ..SolveOptions::default() })
}

pub fn srvi_solve_with(mdp: &TruncatedMdp<'_>, opts: &SolveOptions) -> Result<SolverResult> {
    let started = Instant::now();
    let plan = ScanPlan { list: &mdp.deduped, per_state_start: None, carry_floor: true };
    let out = run_sweeps(mdp.instance, mdp.m, &plan, opts)?;
    let order = optimal_action_order(mdp.instance);
    finish(SolverId::Srvi, mdp.m, &mdp.deduped, &order, out, started)
}

/// Bound-based value iteration: candidates are the order steps, and each
/// state's scan starts at the first step whose threshold upper bound admits
/// it. Requires `m` strictly above the largest bound so that the forced
/// deepest action is valid, and fails fast with
/// [`Error::UnboundedThreshold`] when no finite bounds exist (`beta = 0`).
pub fn bound_based_rvi_solve(
    instance: &ProblemInstance,
    tolerance: f64,
    m: usize,
) -> Result<SolverResult> {
    bound_based_rvi_solve_with(instance, m, &SolveOptions { tolerance, ..SolveOptions::default() })
}

pub fn bound_based_rvi_solve_with(
    instance: &ProblemInstance,
    m: usize,
    opts: &SolveOptions,
) -> Result<SolverResult> {
    let started = Instant::now();
    let order = optimal_action_order(instance);
    let bounds = threshold_upper_bounds(instance, &order)?;
    bound_solve_inner(instance, m, &order, &bounds, opts, started)
}

fn bound_solve_inner(
    instance: &ProblemInstance,
    m: usize,
    order: &ActionOrder,
    bounds: &ThresholdBounds,
    opts: &SolveOptions,
    started: Instant,
) -> Result<SolverResult> {
    let largest = bounds.largest().unwrap_or(0);
    let min_required = (largest as usize).saturating_add(1).max(2);
    if m < min_required {
        return Err(Error::TruncationTooSmall { m, min_required });
    }
    // starts[s - 1] counts the switches whose bound admits state s; bounds
    // are nondecreasing so a partition point suffices.
    let starts: Vec<usize> =
        (1..=m as u64).map(|s| bounds.bounds.partition_point(|&b| b <= s)).collect();
    let plan = ScanPlan {
        list: order.steps(),
        per_state_start: Some(&starts),
        carry_floor: true,
    };
    let out = run_sweeps(instance, m, &plan, opts)?;
    finish(SolverId::BoundRvi, m, order.steps(), order, out, started)
}

/// Dispatch by id at a fixed truncation level.
pub fn solve(
    instance: &ProblemInstance,
    solver: SolverId,
    m: usize,
    opts: &SolveOptions,
) -> Result<SolverResult> {
    match solver {
        SolverId::Rvi => rvi_solve_with(&build_truncated_mdp(instance, m)?, opts),
        SolverId::Srvi => srvi_solve_with(&build_truncated_mdp(instance, m)?, opts),
        SolverId::BoundRvi => bound_based_rvi_solve_with(instance, m, opts),
    }
}

// ---------------------------------------------------------------------------
// Truncation adaptation
// ---------------------------------------------------------------------------

/// Knobs for [`solve_with_truncation_adapt_with`].
#[derive(Debug, Clone)]
pub struct AdaptOptions {
    pub tolerance: f64,
    pub iteration_cap: usize,
    /// Starting truncation; raised to the bound-based minimum if below it.
    /// `None` starts at the largest bound plus `margin`.
    pub initial_m: Option<usize>,
    /// Slack added on top of the minimum viable truncation each round.
    pub margin: usize,
    pub max_rounds: usize,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        AdaptOptions {
            tolerance: DEFAULT_TOLERANCE,
            iteration_cap: DEFAULT_ITERATION_CAP,
            initial_m: None,
            margin: DEFAULT_ADAPT_MARGIN,
            max_rounds: DEFAULT_MAX_ADAPT_ROUNDS,
        }
    }
}

/// Bound-based solve at an automatically chosen truncation: grow `M` until
/// `M >= theta_last + iterations`, which certifies that the deepest reported
/// switch sits well inside the window the truncation cannot have distorted.
/// The returned result carries the full round trace.
pub fn solve_with_truncation_adapt(
    instance: &ProblemInstance,
    tolerance: f64,
    initial_m: Option<usize>,
) -> Result<SolverResult> {
    let opts = AdaptOptions { tolerance, initial_m, ..AdaptOptions::default() };
    solve_with_truncation_adapt_with(instance, &opts)
}

pub fn solve_with_truncation_adapt_with(
    instance: &ProblemInstance,
    adapt: &AdaptOptions,
) -> Result<SolverResult> {
    if adapt.margin == 0 {
        return Err(Error::InvalidParameter("adaptation margin must be at least 1".into()));
    }
    if adapt.max_rounds == 0 {
        return Err(Error::InvalidParameter("adaptation needs at least 1 round".into()));
    }
    let solve_opts =
        SolveOptions { tolerance: adapt.tolerance, iteration_cap: adapt.iteration_cap };
    solve_opts.validate()?;

    let order = optimal_action_order(instance);
    let bounds = threshold_upper_bounds(instance, &order)?;
    let largest = bounds.largest().unwrap_or(1) as usize;

    let mut m = match adapt.initial_m {
        Some(requested) => requested.max(largest.saturating_add(1)).max(2),
        None => largest.saturating_add(adapt.margin),
    };
    let mut trace: Vec<AdaptRound> = Vec::new();

    loop {
        if m > MAX_ADAPT_TRUNCATION {
            return Err(Error::InvalidParameter(format!(
                "truncation adaptation would need M = {m}, beyond the supported \
                 {MAX_ADAPT_TRUNCATION}"
            )));
        }
        let started = Instant::now();
        let mut result = bound_solve_inner(instance, m, &order, &bounds, &solve_opts, started)?;
        let theta_last = result.thresholds.thresholds().last().copied();
        let (reached, satisfied) = match theta_last {
            // A one-step order has no switches to distort.
            None => (None, true),
            Some(NEVER_REACHED) => (None, false),
            Some(t) => (Some(t), m as u64 >= t + result.iterations as u64),
        };
        trace.push(AdaptRound { m, iterations: result.iterations, theta_last: reached, satisfied });
        if satisfied {
            result.adapt_trace = trace;
            return Ok(result);
        }
        if trace.len() >= adapt.max_rounds {
            return Err(Error::AdaptationFailed { rounds: trace.len(), last_m: m });
        }
        let mut next = match reached {
            Some(t) => (t as usize)
                .saturating_add(result.iterations)
                .saturating_add(adapt.margin),
            None => m.saturating_mul(2),
        };
        if trace.len() >= 2 {
            // Two straight misses: the linear estimate is growing too
            // slowly, switch to geometric growth.
            next = next.max(m.saturating_mul(2));
        }
        m = next.max(m + 1);
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
