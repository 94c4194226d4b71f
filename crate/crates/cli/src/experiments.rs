//! Benchmark experiments behind the `bench` subcommands: solver timing and
//! the CSV parameter sweeps.
//!
//! Grid experiments fan the independent grid points across a local thread
//! pool (sized by the `AOI_RECRUIT_THREADS` variable when set) and stitch
//! the rows back in grid order, so the CSV is deterministic. The timing
//! experiment never touches the pool: competing solves would steal cache
//! and cores from the very thing being measured.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use aoi_recruit_core::eval::{
    baseline_auction, baseline_draim, baseline_zero_wait, evaluate_policy_exact, EvaluationReport,
    StepPolicy,
};
use aoi_recruit_core::solver::{
    bound_based_rvi_solve_with, build_truncated_mdp, rvi_solve_with, solve_with_truncation_adapt,
    srvi_solve_with, SolveOptions, SolverId, SolverResult, ThresholdEntry, NEVER_REACHED,
};
use aoi_recruit_core::structure::classify_binary_structure;
use aoi_recruit_core::{ActionSet, Error, ProblemInstance, Result, VehicleType};

use crate::csvfmt::{csv_field, fmt_sig12};
use crate::gen::RandomInstanceSpec;
use crate::structure_name;

// ---------------------------------------------------------------------------
// Sweep parameters
// ---------------------------------------------------------------------------

/// A single scalar knob of an instance that a grid experiment can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    Epsilon,
    ArrivalProb(usize),
    MeanCost(usize),
    MeanSensing(usize),
}

impl SweepParam {
    /// Rebuilds the instance with this knob set to `value`, re-running the
    /// full instance validation.
    pub fn apply(&self, base: &ProblemInstance, value: f64) -> Result<ProblemInstance> {
        match *self {
            SweepParam::Beta => base.with_beta(value),
            SweepParam::Epsilon => ProblemInstance::new(
                base.label().to_string(),
                base.beta(),
                value,
                base.types().to_vec(),
            ),
            SweepParam::ArrivalProb(i) => rebuild_type(base, i, |t| t.arrival_prob = value),
            SweepParam::MeanCost(i) => rebuild_type(base, i, |t| t.mean_cost = value),
            SweepParam::MeanSensing(i) => rebuild_type(base, i, |t| t.mean_sensing = value),
        }
    }
}

fn rebuild_type(
    base: &ProblemInstance,
    index: usize,
    set: impl FnOnce(&mut VehicleType),
) -> Result<ProblemInstance> {
    let mut types = base.types().to_vec();
    let slot = types.get_mut(index).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "type index {index} is out of range for a fleet of {}",
            base.fleet_size()
        ))
    })?;
    set(slot);
    ProblemInstance::new(base.label().to_string(), base.beta(), base.epsilon_unit(), types)
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "beta" => return Ok(SweepParam::Beta),
            "epsilon" => return Ok(SweepParam::Epsilon),
            _ => {}
        }
        let bad = || {
            Error::InvalidParameter(format!(
                "unknown sweep parameter {text:?}; use beta, epsilon, or p<i>/c<i>/r<i>"
            ))
        };
        let (kind, index_text) = text.split_at(text.len().min(1));
        let index: usize = index_text.parse().map_err(|_| bad())?;
        match kind {
            "p" => Ok(SweepParam::ArrivalProb(index)),
            "c" => Ok(SweepParam::MeanCost(index)),
            "r" => Ok(SweepParam::MeanSensing(index)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SweepParam::Beta => write!(f, "beta"),
            SweepParam::Epsilon => write!(f, "epsilon"),
            SweepParam::ArrivalProb(i) => write!(f, "p{i}"),
            SweepParam::MeanCost(i) => write!(f, "c{i}"),
            SweepParam::MeanSensing(i) => write!(f, "r{i}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Thread pool
// ---------------------------------------------------------------------------

/// Local pool for grid experiments. `AOI_RECRUIT_THREADS` pins the size;
/// unset (or 0) lets the pool pick one thread per core.
fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var("AOI_RECRUIT_THREADS") {
        let threads: usize = text.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("AOI_RECRUIT_THREADS={text:?} is not a thread count"))
        })?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build the thread pool: {e}")))
}

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

/// Runs all three solvers `reps` times each at one truncation level,
/// checks they found the same policy, and reports mean wall times.
/// Single-threaded on purpose.
pub fn run_timing(
    instance: &ProblemInstance,
    m: usize,
    reps: usize,
    opts: &SolveOptions,
) -> Result<String> {
    let mdp = build_truncated_mdp(instance, m)?;
    let mut rows = vec!["solver_id,n,mean_wall_time_ns,iterations".to_string()];
    let mut reference: Option<SolverResult> = None;
    for solver in SolverId::ALL {
        let mut total_ns: u128 = 0;
        let mut first: Option<SolverResult> = None;
        for _ in 0..reps {
            let result = match solver {
                SolverId::Rvi => rvi_solve_with(&mdp, opts)?,
                SolverId::Srvi => srvi_solve_with(&mdp, opts)?,
                SolverId::BoundRvi => bound_based_rvi_solve_with(instance, m, opts)?,
            };
            total_ns += result.wall_time.as_nanos();
            if first.is_none() {
                first = Some(result);
            }
        }
        let result = first.expect("reps is validated nonzero");
        if let Some(reference) = &reference {
            check_equivalent(reference, &result)?;
        }
        let mean_ns = (total_ns as f64 / reps as f64).round() as u128;
        rows.push(format!(
            "{},{},{mean_ns},{}",
            solver.as_str(),
            instance.fleet_size(),
            result.iterations
        ));
        if reference.is_none() {
            reference = Some(result);
        }
    }
    Ok(rows.join("\n"))
}

fn check_equivalent(reference: &SolverResult, other: &SolverResult) -> Result<()> {
    if reference.thresholds.entries() != other.thresholds.entries() {
        return Err(Error::EquivalenceFailure(format!(
            "{} and {} disagree on the threshold policy",
            reference.solver_id, other.solver_id
        )));
    }
    let diff = (reference.average_cost_estimate - other.average_cost_estimate).abs();
    let scale = reference.average_cost_estimate.abs().max(1.0);
    if diff > 1e-9 * scale {
        return Err(Error::EquivalenceFailure(format!(
            "{} found average cost {} but {} found {}",
            reference.solver_id,
            reference.average_cost_estimate,
            other.solver_id,
            other.average_cost_estimate
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Payoff comparisons
// ---------------------------------------------------------------------------

const PAYOFF_HEADER: &str = "mechanism,grid_point,payoff,avg_aoi,avg_cost,error";
const MECHANISMS: [&str; 4] = ["solver", "zero-wait", "draim", "auction"];

fn mechanism_report(
    instance: &ProblemInstance,
    mechanism: &str,
    tolerance: f64,
) -> Result<EvaluationReport> {
    let policy = match mechanism {
        "solver" => {
            let result = solve_with_truncation_adapt(instance, tolerance, None)?;
            StepPolicy::from_threshold_policy(&result.thresholds)
        }
        "zero-wait" => baseline_zero_wait(instance),
        "draim" => baseline_draim(instance)?,
        "auction" => baseline_auction(instance)?,
        other => {
            return Err(Error::InvalidParameter(format!("unknown mechanism {other:?}")));
        }
    };
    evaluate_policy_exact(instance, &policy)
}

/// One CSV row per mechanism. A mechanism that fails on this instance gets
/// an error cell instead of numbers; the others still report.
fn payoff_rows(instance: &ProblemInstance, grid_point: &str, tolerance: f64) -> Vec<String> {
    MECHANISMS
        .iter()
        .map(|mechanism| match mechanism_report(instance, mechanism, tolerance) {
            Ok(report) => format!(
                "{mechanism},{grid_point},{},{},{},",
                fmt_sig12(report.payoff),
                fmt_sig12(report.average_aoi),
                fmt_sig12(report.average_recruit_cost)
            ),
            Err(err) => {
                format!("{mechanism},{grid_point},,,,{}", csv_field(&err.to_string()))
            }
        })
        .collect()
}

fn stitch(header: &str, per_point: Vec<Vec<String>>) -> String {
    let mut rows = vec![header.to_string()];
    rows.extend(per_point.into_iter().flatten());
    rows.join("\n")
}

/// Solver versus baselines across an objective-weight grid, evaluated
/// exactly on the true instance at every point.
pub fn run_payoff_beta(
    instance: &ProblemInstance,
    grid: &[f64],
    tolerance: f64,
) -> Result<String> {
    let pool = thread_pool()?;
    let per_point: Result<Vec<Vec<String>>> = pool.install(|| {
        grid.par_iter()
            .map(|&beta| {
                let shifted = instance.with_beta(beta)?;
                Ok(payoff_rows(&shifted, &fmt_sig12(beta), tolerance))
            })
            .collect()
    });
    Ok(stitch(PAYOFF_HEADER, per_point?))
}

/// Solver versus baselines across fleet sizes `1..=n_max`, on random fleets
/// that share a seed and therefore nest as the size grows.
pub fn run_payoff_n(spec: &RandomInstanceSpec, n_max: usize, tolerance: f64) -> Result<String> {
    let pool = thread_pool()?;
    let per_point: Result<Vec<Vec<String>>> = pool.install(|| {
        (1..=n_max)
            .into_par_iter()
            .map(|n| {
                let mut sized = spec.clone();
                sized.n = n;
                sized.label = Some(format!("random-n{n}-seed{}", spec.seed));
                let instance = sized.generate()?;
                Ok(payoff_rows(&instance, &n.to_string(), tolerance))
            })
            .collect()
    });
    Ok(stitch(PAYOFF_HEADER, per_point?))
}

// ---------------------------------------------------------------------------
// Threshold and structure sweeps
// ---------------------------------------------------------------------------

fn ids_tag(action: ActionSet) -> String {
    if action.is_empty() {
        "O".to_string()
    } else {
        action.ids().map(|id| id.to_string()).collect::<Vec<_>>().join("+")
    }
}

fn switch_name(entry: &ThresholdEntry) -> String {
    format!("theta_{}_to_{}", ids_tag(entry.from), ids_tag(entry.to))
}

fn theta_cell(theta: u64) -> String {
    if theta == NEVER_REACHED {
        "never".to_string()
    } else {
        theta.to_string()
    }
}

/// Optimal switch ages across a one-parameter grid: one row per switch per
/// grid point, solved with truncation adaptation.
pub fn run_threshold_sweep(
    instance: &ProblemInstance,
    param: SweepParam,
    grid: &[f64],
    tolerance: f64,
) -> Result<String> {
    let pool = thread_pool()?;
    let per_point: Result<Vec<Vec<String>>> = pool.install(|| {
        grid.par_iter()
            .map(|&value| {
                let shifted = param.apply(instance, value)?;
                let result = solve_with_truncation_adapt(&shifted, tolerance, None)?;
                Ok(result
                    .thresholds
                    .entries()
                    .iter()
                    .enumerate()
                    .map(|(k, entry)| {
                        format!(
                            "{param},{},{},{},{k}",
                            fmt_sig12(value),
                            switch_name(entry),
                            theta_cell(entry.theta)
                        )
                    })
                    .collect())
            })
            .collect()
    });
    Ok(stitch("param,value,threshold_name,theta,order", per_point?))
}

/// Two-type structure classification across a one-parameter grid.
pub fn run_classify_grid(
    instance: &ProblemInstance,
    param: SweepParam,
    grid: &[f64],
) -> Result<String> {
    let mut rows = vec!["param,value,structure,gamma_ratio,survival_ratio,degenerate".to_string()];
    for &value in grid {
        let shifted = param.apply(instance, value)?;
        let class = classify_binary_structure(&shifted)?;
        rows.push(format!(
            "{param},{},{},{},{},{}",
            fmt_sig12(value),
            structure_name(class.structure),
            fmt_sig12(class.gamma_ratio),
            fmt_sig12(class.survival_ratio),
            class.degenerate
        ));
    }
    Ok(rows.join("\n"))
}
