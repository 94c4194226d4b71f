//! Policy evaluation: exact stationary analysis, Monte-Carlo simulation,
//! reference baselines, and a brute-force threshold-policy oracle.
//!
//! Under any piecewise-constant recruitment policy the AoI process
//! regenerates at age 1, so its stationary law is an explicit product of
//! per-age survival probabilities with a geometric tail once the policy
//! stops changing. The exact evaluator walks the finite head and sums the
//! tail in closed form, which makes it an independent check on the solvers:
//! it shares no value-iteration machinery with them.

use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::model::{ActionSet, ActionStats, ProblemInstance, VehicleType};
use crate::solver::{
    solve_with_truncation_adapt, ThresholdPolicy, DEFAULT_TOLERANCE, NEVER_REACHED,
};
use crate::structure::{optimal_action_order, ThresholdBounds};
use crate::Result;

// ---------------------------------------------------------------------------
// Limits
// ---------------------------------------------------------------------------

/// Largest age the exact evaluator will walk explicitly before the
/// stationary tail must begin. Policies switching later than this are almost
/// certainly malformed input.
pub const MAX_EXACT_HEAD: u64 = 10_000_000;

/// Cap on the brute-force oracle's candidate box volume.
pub const ORACLE_CANDIDATE_LIMIT: u128 = 10_000_000;

// ---------------------------------------------------------------------------
// Step policies
// ---------------------------------------------------------------------------

/// An age-to-action map that changes at finitely many ages: segment `k`
/// plays `actions[k]` for every age in `starts[k]..starts[k + 1]`, and the
/// last segment extends forever. Unlike [`ThresholdPolicy`] the actions are
/// arbitrary subsets in arbitrary order, which is exactly what misspecified
/// baselines produce.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPolicy {
    starts: Vec<u64>,
    actions: Vec<ActionSet>,
}

impl StepPolicy {
    /// The policy that plays one action at every age.
    pub fn uniform(action: ActionSet) -> StepPolicy {
        StepPolicy { starts: vec![1], actions: vec![action] }
    }

    /// Builds from `(first_age, action)` segments. Ages must start at 1 and
    /// strictly increase.
    pub fn from_segments(segments: Vec<(u64, ActionSet)>) -> Result<StepPolicy> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("a step policy needs at least one segment".into()));
        }
        if segments[0].0 != 1 {
            return Err(Error::InvalidParameter(format!(
                "the first segment must start at age 1, got {}",
                segments[0].0
            )));
        }
        if segments.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter(
                "segment start ages must strictly increase".into(),
            ));
        }
        let (starts, actions) = segments.into_iter().unzip();
        Ok(StepPolicy { starts, actions })
    }

    /// Flattens a threshold policy: each finite threshold starts the next
    /// order step, switches sharing an age collapse to the deepest step, and
    /// switches marked [`NEVER_REACHED`] are treated as never happening.
    pub fn from_threshold_policy(policy: &ThresholdPolicy) -> StepPolicy {
        let steps = policy.order().steps();
        let mut starts = vec![1u64];
        let mut actions = vec![steps[0].action];
        for (k, &theta) in policy.thresholds().iter().enumerate() {
            if theta == NEVER_REACHED {
                break;
            }
            let action = steps[k + 1].action;
            if *starts.last().unwrap() == theta {
                *actions.last_mut().unwrap() = action;
            } else {
                starts.push(theta);
                actions.push(action);
            }
        }
        StepPolicy { starts, actions }
    }

    /// The action played at `aoi` (which must be at least 1).
    pub fn action_at(&self, aoi: u64) -> ActionSet {
        debug_assert!(aoi >= 1);
        let idx = self.starts.partition_point(|&s| s <= aoi);
        self.actions[idx - 1]
    }

    pub fn segment_count(&self) -> usize {
        self.starts.len()
    }

    /// `(first_age, action)` per segment, ascending.
    pub fn segments(&self) -> Vec<(u64, ActionSet)> {
        self.starts.iter().copied().zip(self.actions.iter().copied()).collect()
    }

    /// Age at which the final, forever-constant segment begins.
    pub fn tail_start(&self) -> u64 {
        *self.starts.last().unwrap()
    }
}

// ---------------------------------------------------------------------------
// Exact stationary evaluation
// ---------------------------------------------------------------------------

/// Stationary AoI distribution: explicit probabilities for the head ages
/// `1..tail_start` and a geometric description from `tail_start` on.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryDistribution {
    /// `head[i]` is the probability of age `i + 1`; covers ages strictly
    /// below `tail_start`.
    pub head: Vec<f64>,
    pub tail_start: u64,
    /// Probability of age `tail_start`.
    pub tail_first_mass: f64,
    /// Ratio between consecutive tail ages (the final failure probability).
    pub tail_ratio: f64,
}

impl StationaryDistribution {
    /// Probability of exactly `age`.
    pub fn pi(&self, age: u64) -> f64 {
        debug_assert!(age >= 1);
        if age < self.tail_start {
            self.head[(age - 1) as usize]
        } else {
            self.tail_first_mass * self.tail_ratio.powi((age - self.tail_start) as i32)
        }
    }
}

/// Long-run per-slot averages of a policy on an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub average_aoi: f64,
    pub average_recruit_cost: f64,
    /// Negated long-run average objective cost.
    pub payoff: f64,
    /// Always zero: the geometric tail is summed in closed form rather than
    /// truncated.
    pub tail_mass_dropped: f64,
}

/// Unnormalized stationary accumulators: `h*` are moments of the weight
/// measure, `spend` and `gain` are weight-weighted per-age costs.
#[derive(Debug, Clone, Copy, Default)]
struct FlowSums {
    h0: f64,
    h1: f64,
    spend: f64,
    gain: f64,
}

fn add_age(sums: &mut FlowSums, w: f64, age: u64, stat: &ActionStats, epsilon: f64) {
    let a = age as f64;
    sums.h0 += w;
    sums.h1 += w * a;
    sums.spend += w * stat.expected_cost;
    sums.gain += w * epsilon * (stat.success_prob * (a * a + 2.0 * a) - (1.0 + a) * (1.0 + a));
}

struct ChainPass {
    /// Weight per head age (age `i + 1` at index `i`), unnormalized.
    head_w: Vec<f64>,
    sums: FlowSums,
    tail_start: u64,
    /// Weight of the tail's first age; zero when an earlier always-successful
    /// segment makes the tail unreachable.
    tail_w: f64,
    final_stat: ActionStats,
}

/// Walks the head ages once, accumulating stationary weights and costs.
fn chain_pass(instance: &ProblemInstance, policy: &StepPolicy) -> Result<ChainPass> {
    let tail_start = policy.tail_start();
    if tail_start > MAX_EXACT_HEAD {
        return Err(Error::InvalidParameter(format!(
            "policy switches at age {tail_start}, beyond the exact evaluator's \
             head limit {MAX_EXACT_HEAD}"
        )));
    }
    let segments = policy.segments();
    let mut stats = Vec::with_capacity(segments.len());
    for &(_, action) in &segments {
        stats.push(ActionStats {
            action,
            success_prob: instance.success_probability(action)?,
            expected_cost: instance.expected_recruit_cost(action)?,
        });
    }

    let epsilon = instance.epsilon_unit();
    let mut sums = FlowSums::default();
    let mut head_w = Vec::with_capacity((tail_start - 1) as usize);
    let mut w = 1.0f64;
    let mut seg = 0usize;
    for age in 1..tail_start {
        while seg + 1 < segments.len() && segments[seg + 1].0 <= age {
            seg += 1;
        }
        head_w.push(w);
        add_age(&mut sums, w, age, &stats[seg], epsilon);
        w *= 1.0 - stats[seg].success_prob;
    }
    Ok(ChainPass { head_w, sums, tail_start, tail_w: w, final_stat: *stats.last().unwrap() })
}

/// Closed-form moments of the geometric tail: sums of `w`, `w * age`, and
/// `w * age^2` over ages `tail_start..`, where the weight decays by `x` per
/// age starting from `a`.
fn tail_moments(a: f64, tail_start: u64, x: f64) -> (f64, f64, f64) {
    let one = 1.0 - x;
    let t0 = 1.0 / one;
    let t1 = x / (one * one);
    let t2 = x * (1.0 + x) / (one * one * one);
    let t = tail_start as f64;
    (a * t0, a * (t * t0 + t1), a * (t * t * t0 + 2.0 * t * t1 + t2))
}

/// Folds head accumulators and the closed-form tail into per-slot averages.
fn aggregate(
    instance: &ProblemInstance,
    sums: &FlowSums,
    tail_w: f64,
    tail_start: u64,
    final_stat: &ActionStats,
) -> Result<EvaluationReport> {
    let (mut s0, mut s1, mut spend, mut gain) = (sums.h0, sums.h1, sums.spend, sums.gain);
    if tail_w > 0.0 {
        let q = final_stat.success_prob;
        if q <= 0.0 {
            return Err(Error::DivergentChain);
        }
        let (s0t, s1t, s2t) = tail_moments(tail_w, tail_start, 1.0 - q);
        s0 += s0t;
        s1 += s1t;
        spend += final_stat.expected_cost * s0t;
        let quad = s2t + 2.0 * s1t;
        gain += instance.epsilon_unit() * (q * quad - (quad + s0t));
    }
    let beta = instance.beta();
    let average_recruit_cost = spend / s0;
    let average_gain = gain / s0;
    Ok(EvaluationReport {
        average_aoi: s1 / s0,
        average_recruit_cost,
        payoff: -((1.0 - beta) * average_recruit_cost - beta * average_gain),
        tail_mass_dropped: 0.0,
    })
}

/// Exact long-run averages of `policy` on `instance`.
///
/// Fails with [`Error::DivergentChain`] when the final segment never
/// succeeds yet is reachable, because the age then drifts to infinity.
pub fn evaluate_policy_exact(
    instance: &ProblemInstance,
    policy: &StepPolicy,
) -> Result<EvaluationReport> {
    let pass = chain_pass(instance, policy)?;
    aggregate(instance, &pass.sums, pass.tail_w, pass.tail_start, &pass.final_stat)
}

/// Exact stationary AoI distribution of `policy` on `instance`.
pub fn stationary_distribution(
    instance: &ProblemInstance,
    policy: &StepPolicy,
) -> Result<StationaryDistribution> {
    let pass = chain_pass(instance, policy)?;
    let q = pass.final_stat.success_prob;
    let tail_total = if pass.tail_w > 0.0 {
        if q <= 0.0 {
            return Err(Error::DivergentChain);
        }
        pass.tail_w / q
    } else {
        0.0
    };
    let total = pass.sums.h0 + tail_total;
    Ok(StationaryDistribution {
        head: pass.head_w.iter().map(|w| w / total).collect(),
        tail_start: pass.tail_start,
        tail_first_mass: pass.tail_w / total,
        tail_ratio: 1.0 - q,
    })
}

// ---------------------------------------------------------------------------
// Monte-Carlo simulation
// ---------------------------------------------------------------------------

/// Empirical per-slot averages from one simulated trajectory, with
/// batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub horizon: u64,
    pub seed: u64,
    pub empirical_payoff: f64,
    pub empirical_payoff_se: f64,
    pub empirical_avg_aoi: f64,
    pub empirical_avg_aoi_se: f64,
    pub empirical_avg_cost: f64,
    pub empirical_avg_cost_se: f64,
    /// Number of slots in which a qualifying update arrived.
    pub update_count: u64,
}

/// Per-slot mechanics: every type draws its arrival, recruited arrivals are
/// paid and then draw qualification, any qualification resets the age to 1.
/// The realized slot payoff charges the post-transition squared age against
/// the payments, so its long-run mean matches [`evaluate_policy_exact`].
pub fn simulate(
    instance: &ProblemInstance,
    policy: &StepPolicy,
    horizon: u64,
    seed: u64,
) -> Result<SimResult> {
    if horizon < 1 {
        return Err(Error::InvalidParameter("simulation horizon must be at least 1".into()));
    }
    for &(_, action) in &policy.segments() {
        instance.success_probability(action)?;
    }

    let types = instance.types();
    let arrival: Vec<Bernoulli> = types
        .iter()
        .map(|t| Bernoulli::new(t.arrival_prob))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidParameter(format!("arrival probability: {e}")))?;
    let qualify: Vec<Bernoulli> = types
        .iter()
        .map(|t| Bernoulli::new(t.mean_sensing))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidParameter(format!("sensing probability: {e}")))?;

    let beta = instance.beta();
    let beta_eps = beta * instance.epsilon_unit();
    let one_minus_beta = 1.0 - beta;

    let batches: usize = if horizon >= 1000 {
        100
    } else if horizon >= 20 {
        10
    } else {
        1
    };
    let batch_len = horizon / batches as u64;
    let mut batch_payoff = vec![0.0f64; batches];
    let mut batch_aoi = vec![0.0f64; batches];
    let mut batch_cost = vec![0.0f64; batches];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut age: u64 = 1;
    let mut total_payoff = 0.0f64;
    let mut total_aoi = 0.0f64;
    let mut total_cost = 0.0f64;
    let mut update_count = 0u64;

    for t in 0..horizon {
        let action = policy.action_at(age);
        let mut paid = 0.0f64;
        let mut success = false;
        for n in 0..types.len() {
            let arrived = arrival[n].sample(&mut rng);
            if arrived && action.contains(n) {
                paid += types[n].mean_cost;
                if qualify[n].sample(&mut rng) {
                    success = true;
                }
            }
        }
        let next_age = if success { 1 } else { age + 1 };
        let slot_payoff = -beta_eps * (next_age as f64) * (next_age as f64) - one_minus_beta * paid;

        total_payoff += slot_payoff;
        total_aoi += age as f64;
        total_cost += paid;
        if success {
            update_count += 1;
        }
        let b = (t / batch_len) as usize;
        if b < batches {
            batch_payoff[b] += slot_payoff;
            batch_aoi[b] += age as f64;
            batch_cost[b] += paid;
        }
        age = next_age;
    }

    let se = |sums: &[f64]| -> f64 {
        if batches < 2 {
            return 0.0;
        }
        let means: Vec<f64> = sums.iter().map(|s| s / batch_len as f64).collect();
        let grand = means.iter().sum::<f64>() / batches as f64;
        let var =
            means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    };

    let h = horizon as f64;
    Ok(SimResult {
        horizon,
        seed,
        empirical_payoff: total_payoff / h,
        empirical_payoff_se: se(&batch_payoff),
        empirical_avg_aoi: total_aoi / h,
        empirical_avg_aoi_se: se(&batch_aoi),
        empirical_avg_cost: total_cost / h,
        empirical_avg_cost_se: se(&batch_cost),
        update_count,
    })
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Recruit the whole fleet at every age: maximal freshness, zero patience.
pub fn baseline_zero_wait(instance: &ProblemInstance) -> StepPolicy {
    StepPolicy::uniform(ActionSet::full(instance.fleet_size()))
}

fn misspecified_policy(
    instance: &ProblemInstance,
    label: &str,
    reshape: impl Fn(&VehicleType) -> VehicleType,
) -> Result<StepPolicy> {
    let assumed = ProblemInstance::new(
        format!("{}-{label}", instance.label()),
        instance.beta(),
        instance.epsilon_unit(),
        instance.types().iter().map(reshape).collect(),
    )?;
    let solved = solve_with_truncation_adapt(&assumed, DEFAULT_TOLERANCE, None)?;
    Ok(StepPolicy::from_threshold_policy(&solved.thresholds))
}

/// Plans as if every paid arrival qualified (`mean_sensing = 1`), then runs
/// that policy on the true instance. Mirrors recruitment schemes that ignore
/// sensing quality.
pub fn baseline_draim(instance: &ProblemInstance) -> Result<StepPolicy> {
    misspecified_policy(instance, "assume-qualified", |t| {
        VehicleType::new(t.id, t.arrival_prob, t.mean_cost, 1.0)
    })
}

/// Plans as if every type arrived every slot (`arrival_prob = 1`), then runs
/// that policy on the true instance. Mirrors auction-style schemes that
/// treat the candidate pool as always available.
pub fn baseline_auction(instance: &ProblemInstance) -> Result<StepPolicy> {
    misspecified_policy(instance, "assume-present", |t| {
        VehicleType::new(t.id, 1.0, t.mean_cost, t.mean_sensing)
    })
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Exhaustively evaluates every nondecreasing threshold vector inside the
/// per-switch bound box and returns the best policy with its payoff.
///
/// The search shares prefix accumulators along the lexicographic tree, so
/// each candidate costs O(1) on top of its leaf evaluation. Ties keep the
/// lexicographically smallest vector. The box volume is capped by
/// [`ORACLE_CANDIDATE_LIMIT`].
pub fn brute_force_best_threshold_policy(
    instance: &ProblemInstance,
    bounds: &ThresholdBounds,
) -> Result<(ThresholdPolicy, f64)> {
    let order = optimal_action_order(instance);
    let switches = order.len() - 1;
    if bounds.bounds.len() != switches {
        return Err(Error::InvalidParameter(format!(
            "expected {switches} bounds for a {}-step order, got {}",
            order.len(),
            bounds.bounds.len()
        )));
    }
    let volume: u128 = bounds.bounds.iter().map(|&b| b as u128).product();
    if volume > ORACLE_CANDIDATE_LIMIT {
        return Err(Error::OracleTooLarge { candidates: volume, limit: ORACLE_CANDIDATE_LIMIT });
    }

    let mut search = OracleSearch {
        instance,
        steps: order.steps(),
        bounds: &bounds.bounds,
        epsilon: instance.epsilon_unit(),
        chosen: vec![0u64; switches],
        best_vec: None,
        best_payoff: f64::NEG_INFINITY,
    };
    search.descend(0, 1, 1.0, FlowSums::default())?;
    let best_vec = search
        .best_vec
        .ok_or_else(|| Error::InvalidParameter("empty threshold search box".into()))?;
    let best_payoff = search.best_payoff;
    let policy = ThresholdPolicy::new(order, best_vec)?;
    Ok((policy, best_payoff))
}

struct OracleSearch<'a> {
    instance: &'a ProblemInstance,
    steps: &'a [ActionStats],
    bounds: &'a [u64],
    epsilon: f64,
    chosen: Vec<u64>,
    best_vec: Option<Vec<u64>>,
    best_payoff: f64,
}

impl OracleSearch<'_> {
    /// Places switch `i` at every admissible age; `sums` covers ages below
    /// `age` and `w` is the stationary weight of `age` itself. The policy
    /// plays step `i` from `age` until the switch being placed.
    fn descend(&mut self, i: usize, age: u64, w: f64, sums: FlowSums) -> Result<()> {
        if i == self.bounds.len() {
            let report = aggregate(self.instance, &sums, w, age, &self.steps[i])?;
            if report.payoff > self.best_payoff {
                self.best_payoff = report.payoff;
                self.best_vec = Some(self.chosen.clone());
            }
            return Ok(());
        }
        let step = self.steps[i];
        let mut w_cur = w;
        let mut sums_cur = sums;
        for theta in age..=self.bounds[i] {
            self.chosen[i] = theta;
            self.descend(i + 1, theta, w_cur, sums_cur)?;
            add_age(&mut sums_cur, w_cur, theta, &step, self.epsilon);
            w_cur *= 1.0 - step.success_prob;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
