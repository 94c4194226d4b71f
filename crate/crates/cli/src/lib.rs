//! Command line front end for the recruitment solver library.
//!
//! One binary, `aoi-recruit`, with subcommands that mirror the library
//! pipeline: inspect an instance's action order, threshold bounds, or
//! two-type structure; solve it with any of the three value-iteration
//! solvers; evaluate or simulate a saved policy; generate random fleets;
//! and run benchmark sweeps that emit CSV.
//!
//! Output convention: without `--out`, the machine-readable artifact (JSON
//! or CSV) goes to stdout and nothing else does. With `--out`, the artifact
//! goes to the file and stdout carries a short human summary instead.
//!
//! Exit codes: 0 on success, 1 for invalid input (bad files, bad flags,
//! infeasible instances), 2 for runtime failures (iteration caps, divergent
//! chains, oversized searches).

mod csvfmt;
mod experiments;
mod gen;
mod policyio;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use aoi_recruit_core::eval::{evaluate_policy_exact, simulate};
use aoi_recruit_core::solver::{
    solve, solve_with_truncation_adapt_with, AdaptOptions, SolveOptions, SolverId, SolverResult,
    ThresholdEntry, DEFAULT_ITERATION_CAP, DEFAULT_TOLERANCE, DEFAULT_TRUNCATION, NEVER_REACHED,
};
use aoi_recruit_core::structure::{
    classify_binary_structure, optimal_action_order, threshold_upper_bounds, BinaryStructure,
    StructureClass,
};
use aoi_recruit_core::{ActionStats, Error, Result};

pub use experiments::SweepParam;
pub use gen::RandomInstanceSpec;

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses `argv`, runs the chosen subcommand, and returns the process exit
/// code. Kept as a library function so tests can drive the full binary
/// without spawning processes.
pub fn cli_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Command tree
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "aoi-recruit", version, about = "Recruitment policies for map freshness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance and write the policy summary.
    Solve(SolveArgs),
    /// Print the ascending action order with its marginal ratios.
    Order(InstanceArgs),
    /// Print the per-switch threshold upper bounds.
    Bounds(InstanceArgs),
    /// Classify a two-type instance's activation structure.
    Classify(InstanceArgs),
    /// Evaluate a saved policy exactly on an instance.
    Eval(EvalArgs),
    /// Simulate a saved policy on an instance.
    Simulate(SimulateArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Benchmark experiments that emit CSV.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Solver to run.
    #[arg(long, default_value = "bound-rvi", value_parser = parse_solver_id)]
    solver: SolverId,
    /// Convergence tolerance on the relative value residual.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Truncation level; with --adapt this seeds the adaptation loop.
    #[arg(long)]
    truncation: Option<usize>,
    /// Grow the truncation until the thresholds are provably stable.
    #[arg(long)]
    adapt: bool,
    /// Hard cap on value-iteration sweeps.
    #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
    iteration_cap: usize,
    /// Write the policy summary JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Policy summary JSON file, as written by `solve`.
    #[arg(long)]
    policy: PathBuf,
    /// Write the evaluation report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Policy summary JSON file, as written by `solve`.
    #[arg(long)]
    policy: PathBuf,
    /// Number of slots to simulate.
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    /// Seed for the deterministic random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the simulation report JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Number of vehicle types.
    #[arg(long)]
    n: usize,
    /// Seed for the deterministic random stream.
    #[arg(long)]
    seed: u64,
    /// Objective weight on freshness.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Freshness value of one unit of squared-age reduction.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Smallest arrival probability drawn.
    #[arg(long, default_value_t = 0.1)]
    p_min: f64,
    /// Largest arrival probability drawn.
    #[arg(long, default_value_t = 0.9)]
    p_max: f64,
    /// Smallest mean recruitment cost drawn.
    #[arg(long, default_value_t = 0.5)]
    c_min: f64,
    /// Largest mean recruitment cost drawn.
    #[arg(long, default_value_t = 5.0)]
    c_max: f64,
    /// Smallest sensing probability drawn.
    #[arg(long, default_value_t = 0.2)]
    r_min: f64,
    /// Largest sensing probability drawn.
    #[arg(long, default_value_t = 0.95)]
    r_max: f64,
    /// Label stored in the instance; defaults to one derived from n and seed.
    #[arg(long)]
    label: Option<String>,
    /// Write the instance JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Time the three solvers on one instance and check they agree.
    Timing(TimingArgs),
    /// Exact payoff of the solver and the baselines across a beta grid.
    PayoffBeta(PayoffBetaArgs),
    /// Exact payoff of the solver and the baselines across fleet sizes.
    PayoffN(PayoffNArgs),
    /// Optimal thresholds across a one-parameter grid.
    Sweep(SweepArgs),
    /// Two-type structure classification across a one-parameter grid.
    ClassifyGrid(ClassifyGridArgs),
}

#[derive(Debug, Args)]
struct TimingArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Truncation level shared by all solvers.
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    truncation: usize,
    /// Convergence tolerance on the relative value residual.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Timed repetitions per solver.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PayoffBetaArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated beta values.
    #[arg(long)]
    grid: String,
    /// Convergence tolerance on the relative value residual.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PayoffNArgs {
    /// Seed for the generated fleets; fleets nest as n grows.
    #[arg(long)]
    seed: u64,
    /// Largest fleet size.
    #[arg(long, default_value_t = 6)]
    n_max: usize,
    /// Objective weight on freshness.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Freshness value of one unit of squared-age reduction.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Smallest arrival probability drawn.
    #[arg(long, default_value_t = 0.1)]
    p_min: f64,
    /// Largest arrival probability drawn.
    #[arg(long, default_value_t = 0.9)]
    p_max: f64,
    /// Smallest mean recruitment cost drawn.
    #[arg(long, default_value_t = 0.5)]
    c_min: f64,
    /// Largest mean recruitment cost drawn.
    #[arg(long, default_value_t = 5.0)]
    c_max: f64,
    /// Smallest sensing probability drawn.
    #[arg(long, default_value_t = 0.2)]
    r_min: f64,
    /// Largest sensing probability drawn.
    #[arg(long, default_value_t = 0.95)]
    r_max: f64,
    /// Convergence tolerance on the relative value residual.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Parameter to vary: beta, epsilon, or p<i>/c<i>/r<i> for type i.
    #[arg(long, value_parser = parse_sweep_param)]
    param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long)]
    grid: String,
    /// Convergence tolerance on the relative value residual.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyGridArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Parameter to vary: beta, epsilon, or p<i>/c<i>/r<i> for type i.
    #[arg(long, value_parser = parse_sweep_param)]
    param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long)]
    grid: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_solver_id(text: &str) -> std::result::Result<SolverId, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

fn parse_sweep_param(text: &str) -> std::result::Result<SweepParam, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Order(args) => run_order(args),
        Command::Bounds(args) => run_bounds(args),
        Command::Classify(args) => run_classify(args),
        Command::Eval(args) => run_eval(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Gen(args) => run_gen(args),
        Command::Bench(bench) => match bench {
            BenchCommand::Timing(args) => run_bench_timing(args),
            BenchCommand::PayoffBeta(args) => run_bench_payoff_beta(args),
            BenchCommand::PayoffN(args) => run_bench_payoff_n(args),
            BenchCommand::Sweep(args) => run_bench_sweep(args),
            BenchCommand::ClassifyGrid(args) => run_bench_classify_grid(args),
        },
    }
}

/// Artifact routing: `--out` gets the artifact and stdout the summary;
/// otherwise stdout carries the artifact alone, ready to pipe.
fn emit(artifact: &str, out: Option<&Path>, human: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut text = artifact.to_string();
            if !text.ends_with('\n') {
                text.push('\n');
            }
            std::fs::write(path, text).map_err(|e| {
                Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
            })?;
            print!("{human}");
            println!("wrote {}", path.display());
        }
        None => println!("{artifact}"),
    }
    Ok(())
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serialization cannot fail")
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let result = if args.adapt {
        if args.solver != SolverId::BoundRvi {
            return Err(Error::InvalidParameter(format!(
                "--adapt implies the bound-rvi solver, not {}",
                args.solver
            )));
        }
        let adapt = AdaptOptions {
            tolerance: args.tolerance,
            iteration_cap: args.iteration_cap,
            initial_m: args.truncation,
            ..AdaptOptions::default()
        };
        solve_with_truncation_adapt_with(&instance, &adapt)?
    } else {
        let opts = SolveOptions { tolerance: args.tolerance, iteration_cap: args.iteration_cap };
        solve(&instance, args.solver, args.truncation.unwrap_or(DEFAULT_TRUNCATION), &opts)?
    };
    let artifact = to_pretty(&result.summary());
    emit(&artifact, args.out.as_deref(), &solve_summary(instance.label(), &result))
}

fn solve_summary(label: &str, result: &SolverResult) -> String {
    let mut text = format!(
        "solved {label}: average cost {:.6} (payoff {:.6})\n",
        result.average_cost_estimate,
        result.payoff()
    );
    text.push_str(&format!(
        "solver {}, M {}, {} sweeps, {:.3} ms\n",
        result.solver_id,
        result.m_used,
        result.iterations,
        result.wall_time.as_secs_f64() * 1e3
    ));
    if !result.adapt_trace.is_empty() {
        text.push_str(&format!("adaptation: {} round(s)\n", result.adapt_trace.len()));
    }
    let entries = result.thresholds.entries();
    if entries.is_empty() {
        text.push_str("no switches: one action covers every age\n");
    }
    for (k, entry) in entries.iter().enumerate() {
        text.push_str(&format!("switch {k}: {}\n", describe_switch(entry)));
    }
    text
}

fn describe_switch(entry: &ThresholdEntry) -> String {
    if entry.theta == NEVER_REACHED {
        format!("{} -> {} beyond the trusted horizon", entry.from, entry.to)
    } else {
        format!("{} -> {} at age {}", entry.from, entry.to, entry.theta)
    }
}

/// Serializable view of the action order; the order type itself stays a
/// plain computation result in the library.
#[derive(Serialize)]
struct OrderArtifact<'a> {
    steps: &'a [ActionStats],
    marginal_ratios: &'a [f64],
}

fn run_order(args: InstanceArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let order = optimal_action_order(&instance);
    let artifact = to_pretty(&OrderArtifact {
        steps: order.steps(),
        marginal_ratios: order.marginal_ratios(),
    });
    let chain =
        order.steps().iter().map(|s| s.action.to_string()).collect::<Vec<_>>().join(" -> ");
    let ratios =
        order.marginal_ratios().iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", ");
    let human = format!("order: {chain}\nmarginal ratios: [{ratios}]\n");
    emit(&artifact, args.out.as_deref(), &human)
}

fn run_bounds(args: InstanceArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let order = optimal_action_order(&instance);
    let bounds = threshold_upper_bounds(&instance, &order)?;
    let artifact = to_pretty(&bounds);
    let list = bounds.bounds.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
    let human = match bounds.largest() {
        Some(largest) => format!("threshold bounds per switch: [{list}] (largest {largest})\n"),
        None => "no switches, so no threshold bounds\n".to_string(),
    };
    emit(&artifact, args.out.as_deref(), &human)
}

pub(crate) fn structure_name(structure: BinaryStructure) -> &'static str {
    match structure {
        BinaryStructure::Lh => "LH",
        BinaryStructure::Hl => "HL",
        BinaryStructure::NoneL => "None-L",
        BinaryStructure::NoneH => "None-H",
    }
}

fn run_classify(args: InstanceArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let class = classify_binary_structure(&instance)?;
    let artifact = to_pretty(&class);
    emit(&artifact, args.out.as_deref(), &classify_summary(&class))
}

fn classify_summary(class: &StructureClass) -> String {
    let mut text = format!(
        "structure {}: cost-effectiveness ratio {:.6}, survival ratio {:.6}\n",
        structure_name(class.structure),
        class.gamma_ratio,
        class.survival_ratio
    );
    if class.degenerate {
        text.push_str("the ratios sit exactly on a decision boundary\n");
    }
    if class.sensing_tie {
        text.push_str("sensing probabilities tie; the cheaper type took the L role\n");
    }
    text
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let (_, policy) = policyio::load_policy(&args.policy)?;
    let report = evaluate_policy_exact(&instance, &policy)?;
    let artifact = to_pretty(&report);
    let human = format!(
        "payoff {:.6}, average AoI {:.6}, average recruit cost {:.6}\n",
        report.payoff, report.average_aoi, report.average_recruit_cost
    );
    emit(&artifact, args.out.as_deref(), &human)
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let (_, policy) = policyio::load_policy(&args.policy)?;
    let result = simulate(&instance, &policy, args.horizon, args.seed)?;
    let artifact = to_pretty(&result);
    let human = format!(
        "payoff {:.6} (se {:.6}), average AoI {:.6}, {} updates over {} slots\n",
        result.empirical_payoff,
        result.empirical_payoff_se,
        result.empirical_avg_aoi,
        result.update_count,
        result.horizon
    );
    emit(&artifact, args.out.as_deref(), &human)
}

fn run_gen(args: GenArgs) -> Result<()> {
    let spec = RandomInstanceSpec {
        n: args.n,
        seed: args.seed,
        beta: args.beta,
        epsilon_unit: args.epsilon,
        p_range: (args.p_min, args.p_max),
        c_range: (args.c_min, args.c_max),
        r_range: (args.r_min, args.r_max),
        label: args.label,
    };
    let instance = spec.generate()?;
    let artifact = instance.to_json();
    let human = format!(
        "generated {}: {} types, beta {}, epsilon {}\n",
        instance.label(),
        instance.fleet_size(),
        instance.beta(),
        instance.epsilon_unit()
    );
    emit(&artifact, args.out.as_deref(), &human)
}

// ---------------------------------------------------------------------------
// Bench dispatch
// ---------------------------------------------------------------------------

fn run_bench_timing(args: TimingArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    if args.reps == 0 {
        return Err(Error::InvalidParameter("timing needs at least one repetition".into()));
    }
    let opts = SolveOptions { tolerance: args.tolerance, iteration_cap: DEFAULT_ITERATION_CAP };
    let csv = experiments::run_timing(&instance, args.truncation, args.reps, &opts)?;
    emit(&csv, args.out.as_deref(), &csv_summary(&csv))
}

fn run_bench_payoff_beta(args: PayoffBetaArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let grid = parse_grid(&args.grid)?;
    let csv = experiments::run_payoff_beta(&instance, &grid, args.tolerance)?;
    emit(&csv, args.out.as_deref(), &csv_summary(&csv))
}

fn run_bench_payoff_n(args: PayoffNArgs) -> Result<()> {
    if args.n_max == 0 {
        return Err(Error::InvalidParameter("the largest fleet size must be at least 1".into()));
    }
    let spec = RandomInstanceSpec {
        n: args.n_max,
        seed: args.seed,
        beta: args.beta,
        epsilon_unit: args.epsilon,
        p_range: (args.p_min, args.p_max),
        c_range: (args.c_min, args.c_max),
        r_range: (args.r_min, args.r_max),
        label: None,
    };
    let csv = experiments::run_payoff_n(&spec, args.n_max, args.tolerance)?;
    emit(&csv, args.out.as_deref(), &csv_summary(&csv))
}

fn run_bench_sweep(args: SweepArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let grid = parse_grid(&args.grid)?;
    let csv = experiments::run_threshold_sweep(&instance, args.param, &grid, args.tolerance)?;
    emit(&csv, args.out.as_deref(), &csv_summary(&csv))
}

fn run_bench_classify_grid(args: ClassifyGridArgs) -> Result<()> {
    let instance = policyio::load_instance(&args.instance)?;
    let grid = parse_grid(&args.grid)?;
    let csv = experiments::run_classify_grid(&instance, args.param, &grid)?;
    emit(&csv, args.out.as_deref(), &csv_summary(&csv))
}

fn csv_summary(csv: &str) -> String {
    let rows = csv.lines().count().saturating_sub(1);
    format!("{rows} data rows\n")
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let mut grid = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::InvalidParameter("the grid has an empty entry".into()));
        }
        let value: f64 = part
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("grid entry {part:?} is not a number")))?;
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("grid entry {part} is not finite")));
        }
        grid.push(value);
    }
    Ok(grid)
}
