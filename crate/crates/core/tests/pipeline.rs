//! End-to-end checks through the public API: JSON in, solve, evaluate,
//! simulate, and cross-validate the pieces against each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aoi_recruit_core::{
    build_truncated_mdp, evaluate_policy_exact, optimal_action_order, rvi_solve, simulate,
    solve_with_truncation_adapt, srvi_solve, stationary_distribution, threshold_upper_bounds,
    ProblemInstance, StepPolicy, VehicleType, NEVER_REACHED,
};

const INSTANCE_JSON: &str = r#"{
    "label": "segment-17",
    "beta": 0.45,
    "epsilon_unit": 1.0,
    "types": [
        { "arrival_prob": 0.65, "mean_cost": 1.2, "mean_sensing": 0.55 },
        { "arrival_prob": 0.35, "mean_cost": 2.4, "mean_sensing": 0.85 }
    ]
}"#;

#[test]
fn json_to_policy_to_evaluation_round_trip() {
    let inst = ProblemInstance::from_json(INSTANCE_JSON).unwrap();
    let solved = solve_with_truncation_adapt(&inst, 1e-10, None).unwrap();
    assert!(solved.adapt_trace.last().unwrap().satisfied);
    assert!(solved.thresholds.thresholds().iter().all(|&t| t != NEVER_REACHED));

    // The exact stationary evaluator shares no machinery with the solver;
    // agreement here validates both.
    let policy = StepPolicy::from_threshold_policy(&solved.thresholds);
    let exact = evaluate_policy_exact(&inst, &policy).unwrap();
    assert!(
        (solved.average_cost_estimate + exact.payoff).abs() < 1e-8,
        "solver gain {} vs exact payoff {}",
        solved.average_cost_estimate,
        exact.payoff
    );

    let pi = stationary_distribution(&inst, &policy).unwrap();
    let head_total: f64 = pi.head.iter().sum();
    let tail_total = pi.tail_first_mass / (1.0 - pi.tail_ratio);
    assert!((head_total + tail_total - 1.0).abs() < 1e-12);

    let sim = simulate(&inst, &policy, 400_000, 20_240_817).unwrap();
    assert!(sim.empirical_payoff_se > 0.0);
    assert!(
        (sim.empirical_payoff - exact.payoff).abs() <= 4.0 * sim.empirical_payoff_se,
        "simulated {} vs exact {} (se {})",
        sim.empirical_payoff,
        exact.payoff,
        sim.empirical_payoff_se
    );
    assert!((sim.empirical_avg_aoi - exact.average_aoi).abs() <= 4.0 * sim.empirical_avg_aoi_se);
}

#[test]
fn solvers_are_interchangeable_on_random_fleets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00C0_FFEE);
    for case in 0..12u32 {
        let n = 1 + (case as usize % 4);
        let beta = [0.1, 0.5, 0.9][case as usize % 3];
        let types: Vec<VehicleType> = (0..n)
            .map(|id| {
                VehicleType::new(
                    id,
                    rng.gen_range(0.2..0.95),
                    rng.gen_range(0.5..4.0),
                    rng.gen_range(0.2..0.95),
                )
            })
            .collect();
        let inst = ProblemInstance::new(format!("random-{case}"), beta, 1.0, types).unwrap();

        let adapted = solve_with_truncation_adapt(&inst, 1e-10, None).unwrap();
        let m = adapted.m_used;
        let mdp = build_truncated_mdp(&inst, m).unwrap();
        let r = rvi_solve(&mdp, 1e-10).unwrap();
        let s = srvi_solve(&mdp, 1e-10).unwrap();

        assert_eq!(
            r.thresholds.thresholds(),
            adapted.thresholds.thresholds(),
            "case {case}: rvi vs bound thresholds"
        );
        assert_eq!(
            s.thresholds.thresholds(),
            adapted.thresholds.thresholds(),
            "case {case}: srvi vs bound thresholds"
        );
        let spread = (r.average_cost_estimate - adapted.average_cost_estimate)
            .abs()
            .max((s.average_cost_estimate - adapted.average_cost_estimate).abs());
        assert!(spread < 1e-9, "case {case}: gain spread {spread}");

        // Every reported switch respects its analytic upper bound.
        let order = optimal_action_order(&inst);
        let bounds = threshold_upper_bounds(&inst, &order).unwrap();
        for (k, &theta) in adapted.thresholds.thresholds().iter().enumerate() {
            assert!(
                theta <= bounds.bounds[k],
                "case {case}: threshold {k} at {theta} above bound {}",
                bounds.bounds[k]
            );
        }
    }
}
