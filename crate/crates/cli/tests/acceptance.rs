//! Acceptance gate: eleven numbered criteria covering solver optimality,
//! solver interchangeability, truncation stability, evaluation consistency,
//! classification, qualitative sensitivity, baseline dominance, and timing.
//!
//! Each criterion is one test that prints `criterion N: PASS` when it holds,
//! so the test listing doubles as the acceptance ledger. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines directly.

use std::time::Duration;

use aoi_recruit_cli::{RandomInstanceSpec, SweepParam};
use aoi_recruit_core::eval::{
    baseline_auction, baseline_draim, baseline_zero_wait, brute_force_best_threshold_policy,
    evaluate_policy_exact, simulate, StepPolicy,
};
use aoi_recruit_core::solver::{
    build_truncated_mdp, rvi_solve_with, solve, solve_with_truncation_adapt, srvi_solve_with,
    SolveOptions, SolverId, SolverResult,
};
use aoi_recruit_core::structure::{
    classify_binary_structure, optimal_action_order, threshold_upper_bounds, BinaryStructure,
};
use aoi_recruit_core::{ActionSet, ProblemInstance, Result, VehicleType};

const TOLERANCE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Shared instance recipes (frozen; criteria 3-5 re-derive these batches)
// ---------------------------------------------------------------------------

/// Two-type fleet used throughout: equal arrivals, the higher-sensing type
/// slightly pricier. Sits strictly inside the LH region.
fn table_instance(beta: f64) -> ProblemInstance {
    ProblemInstance::new(
        "lh-table",
        beta,
        1.0,
        vec![VehicleType::new(0, 0.5, 2.0, 0.6), VehicleType::new(1, 0.5, 2.5, 0.7)],
    )
    .unwrap()
}

/// Oracle-batch recipe: moderate hazards keep every threshold box inside
/// the brute-force search guard; the near-zero weight bucket also scales
/// costs down so its bounds stay searchable.
fn oracle_batch() -> Vec<ProblemInstance> {
    let mut batch = Vec::new();
    for &beta in &[0.0001, 0.1, 0.5] {
        for n in 1..=3usize {
            for seed in 0..24u64 {
                let mut spec = RandomInstanceSpec::new(n, 7000 + seed * 13);
                spec.beta = beta;
                spec.p_range = (0.3, 0.7);
                spec.r_range = (0.3, 0.7);
                spec.c_range = if beta <= 0.001 {
                    (0.002, 0.02)
                } else if beta <= 0.2 {
                    (0.1, 1.0)
                } else {
                    (0.5, 4.0)
                };
                batch.push(spec.generate().unwrap());
            }
        }
    }
    batch.push(table_instance(0.0001));
    batch
}

/// Equivalence-batch recipe: all fleet sizes up to 6, three objective
/// weights, the default generator ranges.
fn equivalence_batch() -> Vec<ProblemInstance> {
    (0..60u64)
        .map(|case| {
            let mut spec = RandomInstanceSpec::new(1 + (case as usize % 6), 5000 + case * 29);
            spec.beta = [0.1, 0.5, 0.9][case as usize % 3];
            spec.generate().unwrap()
        })
        .collect()
}

fn adapt_solve(instance: &ProblemInstance) -> SolverResult {
    solve_with_truncation_adapt(instance, TOLERANCE, None)
        .unwrap_or_else(|e| panic!("adaptive solve failed on {}: {e}", instance.label()))
}

fn exact_payoff(instance: &ProblemInstance, policy: &StepPolicy) -> f64 {
    evaluate_policy_exact(instance, policy)
        .unwrap_or_else(|e| panic!("exact evaluation failed on {}: {e}", instance.label()))
        .payoff
}

fn solved_payoff(instance: &ProblemInstance, solved: &SolverResult) -> f64 {
    exact_payoff(instance, &StepPolicy::from_threshold_policy(&solved.thresholds))
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_solver_matches_the_brute_force_oracle() {
    let batch = oracle_batch();
    assert!(batch.len() > 200, "need more than 200 oracle comparisons");
    for instance in &batch {
        let order = optimal_action_order(instance);
        let bounds = threshold_upper_bounds(instance, &order).unwrap();
        let solved = adapt_solve(instance);
        let (oracle_policy, oracle_payoff) = brute_force_best_threshold_policy(instance, &bounds)
            .unwrap_or_else(|e| panic!("oracle failed on {}: {e}", instance.label()));
        if solved.thresholds.thresholds() == oracle_policy.thresholds() {
            continue;
        }
        let diff = (solved.payoff() - oracle_payoff).abs() / oracle_payoff.abs().max(1.0);
        assert!(
            diff <= 1e-9,
            "{}: solver thresholds {:?} differ from oracle {:?} and payoffs differ by {diff:.3e}",
            instance.label(),
            solved.thresholds.thresholds(),
            oracle_policy.thresholds()
        );
    }
    println!("criterion 1: PASS ({} instances against the oracle)", batch.len());
}

#[test]
fn criterion_02_the_three_solvers_are_interchangeable() {
    let batch = equivalence_batch();
    assert!(batch.len() >= 50);
    let opts = SolveOptions { tolerance: TOLERANCE, ..SolveOptions::default() };
    for instance in &batch {
        let bound = adapt_solve(instance);
        let mdp = build_truncated_mdp(instance, bound.m_used).unwrap();
        let rvi = rvi_solve_with(&mdp, &opts).unwrap();
        let srvi = srvi_solve_with(&mdp, &opts).unwrap();
        for other in [&rvi, &srvi] {
            assert_eq!(
                bound.thresholds.entries(),
                other.thresholds.entries(),
                "{}: {} disagrees with bound-rvi on the policy",
                instance.label(),
                other.solver_id
            );
            let gain_gap = (bound.average_cost_estimate - other.average_cost_estimate).abs();
            assert!(
                gain_gap <= 10.0 * TOLERANCE,
                "{}: gains differ by {gain_gap:.3e}",
                instance.label()
            );
            assert_eq!(
                bound.iterations,
                other.iterations,
                "{}: sweep counts differ",
                instance.label()
            );
        }
    }
    println!("criterion 2: PASS ({} instances across rvi/srvi/bound-rvi)", batch.len());
}

#[test]
fn criterion_03_every_threshold_respects_its_upper_bound() {
    let mut checked = 0usize;
    for instance in oracle_batch().iter().chain(equivalence_batch().iter()) {
        let order = optimal_action_order(instance);
        let bounds = threshold_upper_bounds(instance, &order).unwrap();
        let solved = adapt_solve(instance);
        assert!(
            solved.adapt_trace.last().is_some_and(|round| round.satisfied),
            "{}: adaptation should certify the thresholds",
            instance.label()
        );
        for (k, (&theta, &bound)) in
            solved.thresholds.thresholds().iter().zip(&bounds.bounds).enumerate()
        {
            assert!(
                theta <= bound,
                "{}: switch {k} at age {theta} exceeds its bound {bound}",
                instance.label()
            );
            checked += 1;
        }
    }
    println!("criterion 3: PASS ({checked} thresholds within bounds)");
}

#[test]
fn criterion_04_doubling_the_truncation_changes_nothing() {
    let batch = equivalence_batch();
    for instance in &batch {
        let base = adapt_solve(instance);
        let opts = SolveOptions { tolerance: TOLERANCE, ..SolveOptions::default() };
        let doubled = solve(instance, SolverId::BoundRvi, base.m_used * 2, &opts).unwrap();
        assert_eq!(
            base.thresholds.entries(),
            doubled.thresholds.entries(),
            "{}: thresholds moved when M doubled from {}",
            instance.label(),
            base.m_used
        );
    }
    println!("criterion 4: PASS ({} instances stable under doubled truncation)", batch.len());
}

#[test]
#[allow(clippy::assertions_on_constants)]
fn criterion_05_sweep_monotonicity_assertions_are_armed() {
    // Constant within one build, but the constant is the point: the suite
    // must be running under a profile that keeps the solver's internal
    // checks alive.
    assert!(
        cfg!(debug_assertions),
        "the test profile must keep debug assertions on; the per-sweep \
         monotonicity checks inside the solvers are debug assertions"
    );
    // Drive the assertion through every solver on a spread of instances;
    // any within-sweep hazard decrease would panic here.
    let opts = SolveOptions { tolerance: TOLERANCE, ..SolveOptions::default() };
    let mut sweeps = 0usize;
    for instance in equivalence_batch().iter().take(20) {
        let bound = adapt_solve(instance);
        let mdp = build_truncated_mdp(instance, bound.m_used).unwrap();
        sweeps += bound.iterations;
        sweeps += rvi_solve_with(&mdp, &opts).unwrap().iterations;
        sweeps += srvi_solve_with(&mdp, &opts).unwrap().iterations;
    }
    println!("criterion 5: PASS (assertions active through {sweeps} monitored sweeps)");
}

#[test]
fn criterion_06_simulation_agrees_with_the_closed_form() {
    let mut within = 0usize;
    for seed in 0..20u64 {
        let mut spec = RandomInstanceSpec::new(1 + (seed as usize % 4), 3000 + seed * 17);
        spec.beta = [0.1, 0.4, 0.7][seed as usize % 3];
        let instance = spec.generate().unwrap();
        let solved = adapt_solve(&instance);
        let policy = StepPolicy::from_threshold_policy(&solved.thresholds);
        let exact = exact_payoff(&instance, &policy);
        let sim = simulate(&instance, &policy, 1_000_000, 9000 + seed).unwrap();
        assert!(sim.empirical_payoff_se > 0.0);
        if (sim.empirical_payoff - exact).abs() <= 4.0 * sim.empirical_payoff_se {
            within += 1;
        }
    }
    assert!(within >= 19, "only {within}/20 runs landed within 4 standard errors");
    println!("criterion 6: PASS ({within}/20 million-slot runs within 4 standard errors)");
}

#[test]
fn criterion_07_hand_derived_fixed_points_are_exact() {
    let opts = SolveOptions { tolerance: TOLERANCE, ..SolveOptions::default() };
    for (cost, expected_payoff, expected_theta) in [(2.0, -1.5, 1), (8.0, -3.25, 2)] {
        let instance = ProblemInstance::new(
            format!("deterministic-reset-c{cost}"),
            0.5,
            1.0,
            vec![VehicleType::new(0, 1.0, cost, 1.0)],
        )
        .unwrap();
        let solved = solve(&instance, SolverId::BoundRvi, 64, &opts).unwrap();
        assert!(
            (solved.payoff() - expected_payoff).abs() <= 1e-12,
            "c={cost}: gain {:.15} is not {expected_payoff}",
            solved.payoff()
        );
        assert_eq!(solved.thresholds.thresholds(), &[expected_theta]);
        let evaluated =
            exact_payoff(&instance, &StepPolicy::from_threshold_policy(&solved.thresholds));
        assert!((evaluated - expected_payoff).abs() <= 1e-12);
    }
    println!("criterion 7: PASS (two-state and three-state cycles exact to 1e-12)");
}

#[test]
fn criterion_08_the_reference_fleet_classifies_as_low_then_high() {
    let class = classify_binary_structure(&table_instance(0.5)).unwrap();
    assert_eq!(class.structure, BinaryStructure::Lh);
    assert!(!class.degenerate);
    // Hand values: each type's cost per unit of hazard is mean_cost over
    // mean_sensing, so the ratio is (2/0.6)/(2.5/0.7) = 14/15; the failure
    // ratio is (1 - 0.35)/(1 - 0.30) = 13/14.
    let rho = 14.0 / 15.0;
    let kappa = 13.0 / 14.0;
    assert!(
        (class.gamma_ratio - rho).abs() <= 1e-6,
        "cost-effectiveness ratio {} is not {rho}",
        class.gamma_ratio
    );
    assert!(
        (class.survival_ratio - kappa).abs() <= 1e-6,
        "survival ratio {} is not {kappa}",
        class.survival_ratio
    );
    println!("criterion 8: PASS (ratios {:.6} and {:.6})", class.gamma_ratio, class.survival_ratio);
}

#[test]
fn criterion_09_thresholds_move_the_expected_way_with_arrivals() {
    let base = table_instance(0.0001);
    let lh_order = [
        ActionSet::EMPTY,
        ActionSet::singleton(0),
        ActionSet::singleton(1),
        ActionSet::from_ids(&[0, 1]),
    ];
    let order_holds = |instance: &ProblemInstance| {
        let steps = optimal_action_order(instance);
        steps.len() == lh_order.len()
            && steps.steps().iter().zip(&lh_order).all(|(s, &a)| s.action == a)
    };

    // Raising the low-sensing arrival rate postpones recruiting it.
    let mut first_switch = Vec::new();
    for i in 1..=9u32 {
        let value = 0.05 * i as f64;
        let shifted = SweepParam::ArrivalProb(0).apply(&base, value).unwrap();
        if !order_holds(&shifted) {
            continue;
        }
        first_switch.push(adapt_solve(&shifted).thresholds.thresholds()[0]);
    }
    assert!(first_switch.len() >= 2, "the low-type sweep kept too few points");
    assert!(
        first_switch.windows(2).all(|w| w[0] <= w[1]),
        "first switch ages {first_switch:?} should be nondecreasing"
    );

    // Raising the high-sensing arrival rate hastens switching to it.
    let mut second_switch = Vec::new();
    for i in 11..=19u32 {
        let value = 0.05 * i as f64;
        let shifted = SweepParam::ArrivalProb(1).apply(&base, value).unwrap();
        if !order_holds(&shifted) {
            continue;
        }
        second_switch.push(adapt_solve(&shifted).thresholds.thresholds()[1]);
    }
    assert!(second_switch.len() >= 2, "the high-type sweep kept too few points");
    assert!(
        second_switch.windows(2).all(|w| w[0] >= w[1]),
        "second switch ages {second_switch:?} should be nonincreasing"
    );
    println!(
        "criterion 9: PASS ({} + {} grid points moved monotonically)",
        first_switch.len(),
        second_switch.len()
    );
}

#[test]
fn criterion_10_the_solver_dominates_every_baseline() {
    let duo = ProblemInstance::new(
        "duo",
        0.5,
        1.0,
        vec![VehicleType::new(0, 0.8, 1.0, 0.3), VehicleType::new(1, 0.5, 2.0, 0.9)],
    )
    .unwrap();

    let baselines = |instance: &ProblemInstance| -> Result<[(&'static str, StepPolicy); 3]> {
        Ok([
            ("zero-wait", baseline_zero_wait(instance)),
            ("assume-qualified", baseline_draim(instance)?),
            ("assume-present", baseline_auction(instance)?),
        ])
    };

    // Grid: the two-type fleet across objective weights, plus random fleets.
    let mut grid = Vec::new();
    for &beta in &[0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0] {
        grid.push(duo.with_beta(beta).unwrap());
    }
    for case in 0..12u64 {
        let mut spec = RandomInstanceSpec::new(1 + (case as usize % 4), 1000 + case * 7);
        spec.beta = [0.2, 0.5, 0.8][case as usize % 3];
        grid.push(spec.generate().unwrap());
    }
    let mut points = 0usize;
    for instance in &grid {
        let solved = adapt_solve(instance);
        let best = solved_payoff(instance, &solved);
        for (name, policy) in baselines(instance).unwrap() {
            let payoff = exact_payoff(instance, &policy);
            assert!(
                best >= payoff - 1e-9 * payoff.abs().max(1.0),
                "{} at beta {}: {name} payoff {payoff} beats the solver's {best}",
                instance.label(),
                instance.beta()
            );
            points += 1;
        }
    }

    // Non-vacuous misspecification leaves a strict gap.
    let strict = duo.with_beta(0.4).unwrap();
    let solved = adapt_solve(&strict);
    let best = solved_payoff(&strict, &solved);
    for (name, policy) in baselines(&strict).unwrap() {
        let gap = best - exact_payoff(&strict, &policy);
        assert!(gap > 1e-6, "{name} should lose strictly here, gap {gap:.3e}");
    }

    // Vacuous misspecification ties exactly: full weight on freshness for
    // the always-recruit policy, perfect sensing for the assume-qualified
    // policy, guaranteed arrivals for the assume-present policy.
    let vacuous: [(&str, ProblemInstance); 3] = [
        ("zero-wait", duo.with_beta(1.0).unwrap()),
        (
            "assume-qualified",
            ProblemInstance::new(
                "certain-sensing",
                0.4,
                1.0,
                vec![VehicleType::new(0, 0.8, 1.0, 1.0), VehicleType::new(1, 0.5, 2.0, 1.0)],
            )
            .unwrap(),
        ),
        (
            "assume-present",
            ProblemInstance::new(
                "certain-arrival",
                0.4,
                1.0,
                vec![VehicleType::new(0, 1.0, 1.0, 0.3), VehicleType::new(1, 1.0, 2.0, 0.9)],
            )
            .unwrap(),
        ),
    ];
    for (name, instance) in &vacuous {
        let solved = adapt_solve(instance);
        let best = solved_payoff(instance, &solved);
        let policy = match *name {
            "zero-wait" => baseline_zero_wait(instance),
            "assume-qualified" => baseline_draim(instance).unwrap(),
            _ => baseline_auction(instance).unwrap(),
        };
        let payoff = exact_payoff(instance, &policy);
        assert!(
            (best - payoff).abs() <= 1e-9 * payoff.abs().max(1.0),
            "{name} should tie on {}: {best} vs {payoff}",
            instance.label()
        );
    }
    println!("criterion 10: PASS ({points} grid points dominated, ties only when vacuous)");
}

#[test]
fn criterion_11_solver_wall_times_order_as_designed() {
    let opts = SolveOptions { tolerance: TOLERANCE, ..SolveOptions::default() };
    let m = 1000;
    let reps = 5;
    let instance_count = 8u64;
    let mut totals: [Duration; 3] = [Duration::ZERO; 3];
    for seed in 0..instance_count {
        let mut spec = RandomInstanceSpec::new(8, 2024 + seed);
        spec.beta = 0.4;
        let instance = spec.generate().unwrap();
        let mdp = build_truncated_mdp(&instance, m).unwrap();
        let run = |id: SolverId| -> SolverResult {
            match id {
                SolverId::Rvi => rvi_solve_with(&mdp, &opts).unwrap(),
                SolverId::Srvi => srvi_solve_with(&mdp, &opts).unwrap(),
                SolverId::BoundRvi => {
                    solve(&instance, SolverId::BoundRvi, m, &opts).unwrap()
                }
            }
        };
        // One warmup round, then timed rounds that interleave the solvers
        // so background load perturbs all three evenly.
        let policies: Vec<_> =
            SolverId::ALL.into_iter().map(|id| run(id).thresholds.entries()).collect();
        assert!(
            policies.iter().all(|p| *p == policies[0]),
            "solvers disagree on seed {seed}"
        );
        for _ in 0..reps {
            for (slot, id) in SolverId::ALL.into_iter().enumerate() {
                totals[slot] += run(id).wall_time;
            }
        }
    }
    let mean = |total: Duration| -> f64 {
        total.as_secs_f64() / (reps as f64 * instance_count as f64)
    };
    let (rvi, srvi, bound) = (mean(totals[0]), mean(totals[1]), mean(totals[2]));
    assert!(
        bound <= srvi && srvi <= rvi,
        "expected bound <= srvi <= rvi, got {bound:.6}s, {srvi:.6}s, {rvi:.6}s"
    );
    assert!(
        rvi >= 3.0 * bound,
        "classical over bound-based speedup only {:.2}x",
        rvi / bound
    );
    println!(
        "criterion 11: PASS (mean seconds over {instance_count} fleets: \
         rvi {rvi:.4}, srvi {srvi:.4}, bound-rvi {bound:.4})"
    );
}
