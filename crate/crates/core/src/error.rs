//! Error type shared across the crate.

use std::fmt;

use crate::model::ActionSet;

/// Partial solver state carried out of an aborted iteration, mostly useful
/// for post-mortems on instances that refuse to converge.
#[derive(Debug, Clone)]
pub struct PartialSolve {
    /// Relative values at the moment the cap was hit (index 0 is state 1).
    pub values: Vec<f64>,
    /// Greedy action per state from the last completed sweep.
    pub policy: Vec<ActionSet>,
}

#[derive(Debug)]
pub enum Error {
    /// Instance-level validation failure (probabilities out of range,
    /// empty fleet, malformed JSON, and so on).
    InvalidInstance(String),
    /// An action referenced a vehicle type id outside the fleet.
    InvalidAction { id: usize, fleet_size: usize },
    /// AoI arguments must be >= 1.
    InvalidAoi { aoi: u64 },
    /// Marginal cost-effectiveness is undefined unless the target action has
    /// strictly larger success probability.
    NonAscendingSuccessProb { from: f64, to: f64 },
    /// Threshold upper bounds diverge when recruitment cost carries all the
    /// weight (`beta = 0`): never recruiting is optimal and no finite bound
    /// exists.
    UnboundedThreshold,
    /// The two-type structure classifier got a fleet of a different size.
    NotBinary { fleet_size: usize },
    /// Both single-type hazards are zero, so the classifier ratios are 0/0.
    DegenerateClassification,
    /// Truncation level too small for the requested operation.
    TruncationTooSmall { m: usize, min_required: usize },
    /// The value iteration hit its sweep cap before meeting the tolerance.
    IterationCapExceeded {
        iterations: usize,
        residual: f64,
        partial: Box<PartialSolve>,
    },
    /// The truncation adaptation loop never satisfied the stability
    /// criterion.
    AdaptationFailed { rounds: usize, last_m: usize },
    /// A tabular policy violated the structure threshold extraction relies
    /// on (hazard-monotone choices drawn from the action order).
    StructuralViolation { state: usize, detail: String },
    /// The policy's final action never succeeds, so AoI drifts to infinity
    /// and no stationary distribution exists.
    DivergentChain,
    /// The brute-force oracle's candidate box is too large to enumerate.
    OracleTooLarge { candidates: u128, limit: u128 },
    /// Interchangeable solvers disagreed where they must not.
    EquivalenceFailure(String),
    /// Malformed run parameters (ranges, horizons, grids).
    InvalidParameter(String),
}

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    /// The CLI maps these to exit code 1 and everything else to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInstance(_)
                | Error::InvalidAction { .. }
                | Error::InvalidAoi { .. }
                | Error::NonAscendingSuccessProb { .. }
                | Error::UnboundedThreshold
                | Error::NotBinary { .. }
                | Error::DegenerateClassification
                | Error::TruncationTooSmall { .. }
                | Error::InvalidParameter(_)
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            Error::InvalidAction { id, fleet_size } => {
                write!(f, "action references type {id} but the fleet has {fleet_size} types")
            }
            Error::InvalidAoi { aoi } => write!(f, "AoI must be >= 1, got {aoi}"),
            Error::NonAscendingSuccessProb { from, to } => write!(
                f,
                "marginal cost-effectiveness needs ascending success probability \
                 (from {from}, to {to})"
            ),
            Error::UnboundedThreshold => {
                write!(f, "threshold bounds diverge at beta = 0 (never recruiting is optimal)")
            }
            Error::NotBinary { fleet_size } => {
                write!(f, "structure classification needs exactly 2 types, got {fleet_size}")
            }
            Error::DegenerateClassification => {
                write!(f, "both single-type hazards are zero; classification ratios undefined")
            }
            Error::TruncationTooSmall { m, min_required } => {
                write!(f, "truncation M = {m} too small, need at least {min_required}")
            }
            Error::IterationCapExceeded { iterations, residual, .. } => write!(
                f,
                "value iteration hit the cap after {iterations} sweeps \
                 (last relative residual {residual:.3e})"
            ),
            Error::AdaptationFailed { rounds, last_m } => write!(
                f,
                "truncation adaptation gave up after {rounds} rounds (last M = {last_m})"
            ),
            Error::StructuralViolation { state, detail } => {
                write!(f, "policy structure violated at state {state}: {detail}")
            }
            Error::DivergentChain => {
                write!(f, "final action never succeeds; AoI chain has no stationary distribution")
            }
            Error::OracleTooLarge { candidates, limit } => write!(
                f,
                "oracle candidate box has {candidates} vectors, over the {limit} guard"
            ),
            Error::EquivalenceFailure(msg) => write!(f, "solver equivalence failure: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
