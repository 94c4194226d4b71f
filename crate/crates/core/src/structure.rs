//! Structure of the optimal policy: which actions can ever be optimal, in
//! what order AoI activates them, and how far out each switch can sit.
//!
//! The optimal policy only ever walks up a fixed sequence of actions as AoI
//! grows. That sequence is the lower envelope of the (success probability,
//! expected cost) point cloud: starting from the empty action, repeatedly
//! jump to the candidate minimising the marginal cost per unit of added
//! success probability. The per-switch upper bounds derived from those
//! marginal ratios cap where each switch can happen, which later prunes both
//! the truncation level and the solver's candidate sets.

use serde::Serialize;

use crate::error::Error;
use crate::model::{ActionStats, ProblemInstance};
use crate::Result;

// ---------------------------------------------------------------------------
// Marginal cost-effectiveness and the action order
// ---------------------------------------------------------------------------

/// Extra expected cost per unit of extra success probability when switching
/// between two actions. Requires strictly ascending success probability.
pub fn marginal_cost_effectiveness(from: &ActionStats, to: &ActionStats) -> Result<f64> {
    if to.success_prob <= from.success_prob {
        return Err(Error::NonAscendingSuccessProb {
            from: from.success_prob,
            to: to.success_prob,
        });
    }
    Ok((to.expected_cost - from.expected_cost) / (to.success_prob - from.success_prob))
}

/// The ascending sequence of actions an optimal policy can use, with the
/// marginal ratio of each switch.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionOrder {
    steps: Vec<ActionStats>,
    marginal_ratios: Vec<f64>,
}

impl ActionOrder {
    pub(crate) fn from_parts(steps: Vec<ActionStats>, marginal_ratios: Vec<f64>) -> Self {
        debug_assert_eq!(steps.len(), marginal_ratios.len() + 1);
        // Tiny relative slack: near-collinear steps can invert by ulps.
        debug_assert!(
            marginal_ratios
                .windows(2)
                .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0)),
            "marginal ratios must be nondecreasing along the order"
        );
        ActionOrder { steps, marginal_ratios }
    }

    /// Steps in ascending success probability; first is always the empty
    /// action, last the highest-hazard action.
    pub fn steps(&self) -> &[ActionStats] {
        &self.steps
    }

    /// One ratio per consecutive step pair; nondecreasing along the order.
    pub fn marginal_ratios(&self) -> &[f64] {
        &self.marginal_ratios
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_step(&self) -> &ActionStats {
        self.steps.last().expect("order is never empty")
    }

    /// Position of an action in the order, if it is on it.
    pub fn index_of(&self, action: crate::model::ActionSet) -> Option<usize> {
        self.steps.iter().position(|s| s.action == action)
    }
}

/// Builds the action order by greedy marginal-ratio descent.
///
/// From the current step, among all enumerated actions with strictly larger
/// success probability, pick the one with the smallest marginal ratio; ties
/// go to the larger success probability. This walks the lower envelope of
/// the (success probability, cost) cloud from (0, 0) to the maximal-hazard
/// action, and the recorded ratios come out nondecreasing.
pub fn optimal_action_order(instance: &ProblemInstance) -> ActionOrder {
    let stats = instance.enumerate_action_stats();
    let mut steps = vec![stats[0]];
    let mut ratios = Vec::new();
    let mut cur = 0usize;
    while cur + 1 < stats.len() {
        let from = stats[cur];
        let mut best_j = cur + 1;
        let mut best_ratio = ratio_unchecked(&from, &stats[cur + 1]);
        for (offset, cand) in stats[cur + 2..].iter().enumerate() {
            let r = ratio_unchecked(&from, cand);
            // `<=` so an exact tie falls to the larger success probability.
            if r <= best_ratio {
                best_ratio = r;
                best_j = cur + 2 + offset;
            }
        }
        steps.push(stats[best_j]);
        ratios.push(best_ratio);
        cur = best_j;
    }
    ActionOrder::from_parts(steps, ratios)
}

fn ratio_unchecked(from: &ActionStats, to: &ActionStats) -> f64 {
    (to.expected_cost - from.expected_cost) / (to.success_prob - from.success_prob)
}

// ---------------------------------------------------------------------------
// Threshold upper bounds
// ---------------------------------------------------------------------------

/// Per-switch upper bounds on where the optimal policy can move to the next
/// action in the order. Entry k bounds the switch from step k to step k+1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdBounds {
    pub bounds: Vec<u64>,
}

impl ThresholdBounds {
    pub fn largest(&self) -> Option<u64> {
        self.bounds.iter().copied().max()
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }
}

/// Upper-bounds each switch state from the marginal ratio of the switch:
/// `ceil(sqrt(1/eps + gamma * (1-beta)/(beta*eps)) - 1)`, clamped to at
/// least 1. Diverges at `beta = 0`, where never recruiting is optimal and no
/// finite switch exists.
pub fn threshold_upper_bounds(
    instance: &ProblemInstance,
    order: &ActionOrder,
) -> Result<ThresholdBounds> {
    let beta = instance.beta();
    if beta == 0.0 {
        return Err(Error::UnboundedThreshold);
    }
    let eps = instance.epsilon_unit();
    let scale = (1.0 - beta) / (beta * eps);
    let bounds = order
        .marginal_ratios()
        .iter()
        .map(|&gamma| {
            let v = (1.0 / eps + scale * gamma).sqrt() - 1.0;
            v.ceil().max(1.0) as u64
        })
        .collect();
    Ok(ThresholdBounds { bounds })
}

// ---------------------------------------------------------------------------
// Two-type structure classification
// ---------------------------------------------------------------------------

/// Which of the four qualitative policy shapes a two-type instance has.
/// "L" is the type with the smaller sensing probability (ties broken toward
/// the cheaper type).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinaryStructure {
    /// Low-sensing type activates first, then the high-sensing type.
    #[serde(rename = "LH")]
    Lh,
    /// High-sensing type activates first.
    #[serde(rename = "HL")]
    Hl,
    /// The low-sensing type never appears alone.
    #[serde(rename = "None-L")]
    NoneL,
    /// The high-sensing type never appears alone.
    #[serde(rename = "None-H")]
    NoneH,
}

impl std::fmt::Display for BinaryStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BinaryStructure::Lh => "LH",
            BinaryStructure::Hl => "HL",
            BinaryStructure::NoneL => "None-L",
            BinaryStructure::NoneH => "None-H",
        };
        write!(f, "{s}")
    }
}

/// Classification result with the two diagnostic ratios it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureClass {
    pub structure: BinaryStructure,
    /// Ratio of single-type marginal cost-effectivenesses, L over H.
    pub gamma_ratio: f64,
    /// Ratio of single-type failure probabilities, H over L.
    pub survival_ratio: f64,
    /// True when the ratios sit exactly on a decision boundary; the reported
    /// structure is then the adjacent richer one.
    pub degenerate: bool,
    /// True when both sensing probabilities are equal and the L role was
    /// assigned to the cheaper type.
    pub sensing_tie: bool,
}

/// Assigns the L and H roles for a two-type instance: L has the smaller
/// sensing probability, ties broken toward the smaller mean cost. Returns
/// (l_index, h_index).
pub fn binary_roles(instance: &ProblemInstance) -> Result<(usize, usize)> {
    if instance.fleet_size() != 2 {
        return Err(Error::NotBinary { fleet_size: instance.fleet_size() });
    }
    let t = instance.types();
    let l_first = match t[0].mean_sensing.partial_cmp(&t[1].mean_sensing).unwrap() {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => t[0].mean_cost <= t[1].mean_cost,
    };
    Ok(if l_first { (0, 1) } else { (1, 0) })
}

/// Decides the qualitative policy shape of a two-type instance from two
/// ratios: `rho`, the single-type marginal-ratio quotient L/H, and `kappa`,
/// the failure-probability quotient H/L.
///
/// Interior regions: LH when `kappa < rho < 1`; HL when `1 < rho < kappa`;
/// None-L when `rho` is above both 1 and `kappa`; None-H when below both.
/// Exact boundary hits (`rho = 1` or `rho = kappa`) collapse to the adjacent
/// richer structure and set the degenerate flag.
pub fn classify_binary_structure(instance: &ProblemInstance) -> Result<StructureClass> {
    let (l, h) = binary_roles(instance)?;
    let t = instance.types();
    let sensing_tie = t[l].mean_sensing == t[h].mean_sensing;

    let q_l = t[l].arrival_prob * t[l].mean_sensing;
    let q_h = t[h].arrival_prob * t[h].mean_sensing;
    let e_l = t[l].arrival_prob * t[l].mean_cost;
    let e_h = t[h].arrival_prob * t[h].mean_cost;

    if q_l <= 0.0 && q_h <= 0.0 {
        return Err(Error::DegenerateClassification);
    }
    let rho = if q_l <= 0.0 {
        f64::INFINITY
    } else if q_h <= 0.0 {
        0.0
    } else {
        let gamma_l = e_l / q_l;
        let gamma_h = e_h / q_h;
        if gamma_l == 0.0 && gamma_h == 0.0 {
            // Both types are free; equal effectiveness, boundary case.
            1.0
        } else {
            gamma_l / gamma_h
        }
    };
    let kappa = if q_l >= 1.0 && q_h >= 1.0 {
        1.0
    } else {
        (1.0 - q_h) / (1.0 - q_l)
    };

    let (structure, degenerate) = if rho == 1.0 || rho == kappa {
        // Boundary: collapse toward the adjacent two-switch structure.
        let richer = if kappa > 1.0 { BinaryStructure::Hl } else { BinaryStructure::Lh };
        (richer, true)
    } else if kappa < rho && rho < 1.0 {
        (BinaryStructure::Lh, false)
    } else if 1.0 < rho && rho < kappa {
        (BinaryStructure::Hl, false)
    } else if rho >= kappa.max(1.0) {
        (BinaryStructure::NoneL, false)
    } else {
        (BinaryStructure::NoneH, false)
    };

    Ok(StructureClass { structure, gamma_ratio: rho, survival_ratio: kappa, degenerate, sensing_tie })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
