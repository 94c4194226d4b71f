//! Problem instances and per-action statistics.
//!
//! An instance is a fleet of vehicle types plus the objective weight `beta`
//! and the freshness unit conversion `epsilon_unit`. An action is a subset of
//! type ids recruited for one slot. Everything downstream consumes two
//! numbers per action: the success probability (chance at least one recruited
//! arrival qualifies, resetting AoI to 1) and the expected recruitment spend
//! for the slot.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::Result;

/// Hard cap on fleet size; actions are stored as `u32` bitmasks and the
/// power-set enumeration is exponential anyway.
pub const MAX_FLEET_SIZE: usize = 30;

/// Success probabilities closer than this are treated as the same hazard
/// when deduplicating the enumerated action list. Products evaluated in
/// different factor orders can drift by ulps; anything this close is far
/// below policy relevance.
pub const HAZARD_DEDUP_TOLERANCE: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Vehicle types and instances
// ---------------------------------------------------------------------------

/// One vehicle class.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleType {
    /// Position in the fleet; always equals the index in the instance's list.
    pub id: usize,
    /// Per-slot Bernoulli arrival probability.
    pub arrival_prob: f64,
    /// Mean payment per recruited arrival (paid whether or not the update
    /// qualifies).
    pub mean_cost: f64,
    /// Probability that a paid arrival's update actually qualifies.
    pub mean_sensing: f64,
}

impl VehicleType {
    pub fn new(id: usize, arrival_prob: f64, mean_cost: f64, mean_sensing: f64) -> Self {
        VehicleType { id, arrival_prob, mean_cost, mean_sensing }
    }
}

/// A validated problem instance.
///
/// Constructed through [`ProblemInstance::new`] or [`ProblemInstance::from_json`],
/// both of which enforce the domain invariants, so downstream code can assume
/// probabilities are in range and the fleet is non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    label: String,
    beta: f64,
    epsilon_unit: f64,
    types: Vec<VehicleType>,
}

impl ProblemInstance {
    /// Validates and builds an instance.
    ///
    /// Rules: 1 <= fleet size <= [`MAX_FLEET_SIZE`]; ids equal positions;
    /// arrival and sensing probabilities in [0, 1]; costs finite and >= 0;
    /// `beta` in [0, 1]; `epsilon_unit` > 0. When `beta > 0` at least one
    /// type must have a positive arrival-times-sensing product, otherwise no
    /// policy can ever refresh the map and the freshness term is vacuous.
    pub fn new(
        label: impl Into<String>,
        beta: f64,
        epsilon_unit: f64,
        types: Vec<VehicleType>,
    ) -> Result<Self> {
        let label = label.into();
        if types.is_empty() {
            return Err(Error::InvalidInstance("fleet is empty".into()));
        }
        if types.len() > MAX_FLEET_SIZE {
            return Err(Error::InvalidInstance(format!(
                "fleet has {} types, limit is {MAX_FLEET_SIZE}",
                types.len()
            )));
        }
        for (pos, ty) in types.iter().enumerate() {
            if ty.id != pos {
                return Err(Error::InvalidInstance(format!(
                    "type at position {pos} has id {}, ids must equal positions",
                    ty.id
                )));
            }
            if !ty.arrival_prob.is_finite() || !(0.0..=1.0).contains(&ty.arrival_prob) {
                return Err(Error::InvalidInstance(format!(
                    "type {pos}: arrival_prob {} outside [0, 1]",
                    ty.arrival_prob
                )));
            }
            if !ty.mean_sensing.is_finite() || !(0.0..=1.0).contains(&ty.mean_sensing) {
                return Err(Error::InvalidInstance(format!(
                    "type {pos}: mean_sensing {} outside [0, 1]",
                    ty.mean_sensing
                )));
            }
            if !ty.mean_cost.is_finite() || ty.mean_cost < 0.0 {
                return Err(Error::InvalidInstance(format!(
                    "type {pos}: mean_cost {} must be finite and >= 0",
                    ty.mean_cost
                )));
            }
        }
        if !beta.is_finite() || !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidInstance(format!("beta {beta} outside [0, 1]")));
        }
        if !epsilon_unit.is_finite() || epsilon_unit <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "epsilon_unit {epsilon_unit} must be finite and > 0"
            )));
        }
        if beta > 0.0 && !types.iter().any(|t| t.arrival_prob * t.mean_sensing > 0.0) {
            return Err(Error::InvalidInstance(
                "beta > 0 but no type can ever deliver a qualifying update".into(),
            ));
        }
        Ok(ProblemInstance { label, beta, epsilon_unit, types })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn epsilon_unit(&self) -> f64 {
        self.epsilon_unit
    }

    pub fn fleet_size(&self) -> usize {
        self.types.len()
    }

    pub fn types(&self) -> &[VehicleType] {
        &self.types
    }

    /// Same fleet with a different objective weight (re-validated).
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        ProblemInstance::new(self.label.clone(), beta, self.epsilon_unit, self.types.clone())
    }

    // -----------------------------------------------------------------------
    // JSON interface
    // -----------------------------------------------------------------------

    /// Parses the on-disk instance schema. Unknown keys are rejected and the
    /// numbers go through the same validation as [`ProblemInstance::new`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInstance(format!("instance JSON: {e}")))?;
        let types = file
            .types
            .into_iter()
            .enumerate()
            .map(|(id, t)| VehicleType::new(id, t.arrival_prob, t.mean_cost, t.mean_sensing))
            .collect();
        ProblemInstance::new(file.label, file.beta, file.epsilon_unit, types)
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            label: self.label.clone(),
            beta: self.beta,
            epsilon_unit: self.epsilon_unit,
            types: self
                .types
                .iter()
                .map(|t| TypeFile {
                    arrival_prob: t.arrival_prob,
                    mean_cost: t.mean_cost,
                    mean_sensing: t.mean_sensing,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    // -----------------------------------------------------------------------
    // Per-action statistics
    // -----------------------------------------------------------------------

    /// Probability that at least one recruited arrival qualifies this slot:
    /// one minus the product of per-type survivals `1 - p_n * r_n`. Empty
    /// action: 0.
    pub fn success_probability(&self, action: ActionSet) -> Result<f64> {
        self.check_action(action)?;
        Ok(self.success_probability_unchecked(action))
    }

    /// Expected spend for the slot: sum over recruited types of
    /// `arrival_prob * mean_cost` (payment is due on arrival, qualified or
    /// not).
    pub fn expected_recruit_cost(&self, action: ActionSet) -> Result<f64> {
        self.check_action(action)?;
        Ok(self.expected_recruit_cost_unchecked(action))
    }

    /// Expected one-slot freshness gain at AoI `aoi`, in `epsilon_unit`s:
    /// success resets the squared age to 1, failure lets it grow, so the
    /// gain is `epsilon * (Q * (aoi^2 + 2 aoi) - (1 + aoi)^2)`. Negative
    /// whenever success is unlikely enough.
    pub fn expected_freshness_gain(&self, action: ActionSet, aoi: u64) -> Result<f64> {
        self.check_action(action)?;
        if aoi < 1 {
            return Err(Error::InvalidAoi { aoi });
        }
        let q = self.success_probability_unchecked(action);
        Ok(self.freshness_gain_from_q(q, aoi))
    }

    /// One-slot objective cost `(1 - beta) * spend - beta * gain`; the solver
    /// minimises its long-run average.
    pub fn immediate_cost(&self, action: ActionSet, aoi: u64) -> Result<f64> {
        self.check_action(action)?;
        if aoi < 1 {
            return Err(Error::InvalidAoi { aoi });
        }
        let q = self.success_probability_unchecked(action);
        let e = self.expected_recruit_cost_unchecked(action);
        Ok((1.0 - self.beta) * e - self.beta * self.freshness_gain_from_q(q, aoi))
    }

    /// All distinct hazards in ascending order, cheapest representative each.
    ///
    /// Enumerates the whole power set, sorts by (success probability,
    /// expected cost, canonical membership), then keeps one action per hazard
    /// group ([`HAZARD_DEDUP_TOLERANCE`]). The first entry is always the
    /// empty action at (0, 0) and the result is strictly ascending in
    /// success probability.
    pub fn enumerate_action_stats(&self) -> Vec<ActionStats> {
        dedup_sorted_stats(&self.all_action_stats_sorted())
    }

    /// Every subset with its statistics, sorted ascending by (success
    /// probability, expected cost, canonical membership) but not
    /// deduplicated. The classical solver scans this full list.
    pub(crate) fn all_action_stats_sorted(&self) -> Vec<ActionStats> {
        let n = self.types.len();
        let count = 1usize << n;
        let mut all = Vec::with_capacity(count);
        for mask in 0..count as u32 {
            let action = ActionSet(mask);
            all.push(ActionStats {
                action,
                success_prob: self.success_probability_unchecked(action),
                expected_cost: self.expected_recruit_cost_unchecked(action),
            });
        }
        all.sort_by(|a, b| {
            a.success_prob
                .total_cmp(&b.success_prob)
                .then(a.expected_cost.total_cmp(&b.expected_cost))
                .then(a.action.0.cmp(&b.action.0))
        });
        all
    }

    pub(crate) fn freshness_gain_from_q(&self, q: f64, aoi: u64) -> f64 {
        let d = aoi as f64;
        self.epsilon_unit * (q * (d * d + 2.0 * d) - (1.0 + d) * (1.0 + d))
    }

    fn check_action(&self, action: ActionSet) -> Result<()> {
        let n = self.types.len();
        if let Some(id) = action.ids().find(|&id| id >= n) {
            return Err(Error::InvalidAction { id, fleet_size: n });
        }
        Ok(())
    }

    fn success_probability_unchecked(&self, action: ActionSet) -> f64 {
        if action.is_empty() {
            return 0.0;
        }
        let mut surviving = 1.0;
        for id in action.ids() {
            let t = &self.types[id];
            surviving *= 1.0 - t.arrival_prob * t.mean_sensing;
        }
        1.0 - surviving
    }

    fn expected_recruit_cost_unchecked(&self, action: ActionSet) -> f64 {
        // Explicit +0.0 seed: an empty sum() would yield -0.0, which leaks
        // into serialized artifacts.
        action.ids().fold(0.0, |acc, id| {
            let t = &self.types[id];
            acc + t.arrival_prob * t.mean_cost
        })
    }
}

/// Collapses a (success probability, expected cost, membership)-sorted stats
/// list to one representative per hazard group. Grouping is anchored at the
/// first member of each group so near-equal probabilities cannot chain into
/// one oversized group; the sort order guarantees the kept representative is
/// the cheapest, smallest-membership action of its group.
pub(crate) fn dedup_sorted_stats(all: &[ActionStats]) -> Vec<ActionStats> {
    let mut kept: Vec<ActionStats> = Vec::new();
    for stat in all {
        match kept.last() {
            Some(anchor) if stat.success_prob - anchor.success_prob <= HAZARD_DEDUP_TOLERANCE => {}
            _ => kept.push(*stat),
        }
    }
    kept
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    label: String,
    beta: f64,
    epsilon_unit: f64,
    types: Vec<TypeFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TypeFile {
    arrival_prob: f64,
    mean_cost: f64,
    mean_sensing: f64,
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

/// A subset of vehicle type ids, stored as a bitmask.
///
/// The `Ord` impl (mask order) is the canonical membership order used for
/// tie-breaks. Serialises as a sorted array of ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ActionSet(u32);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    /// All ids `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_FLEET_SIZE);
        if n == 0 {
            ActionSet(0)
        } else {
            ActionSet((1u32 << n) - 1)
        }
    }

    pub fn singleton(id: usize) -> Self {
        ActionSet::EMPTY.with(id)
    }

    pub fn from_ids(ids: &[usize]) -> Self {
        ids.iter().fold(ActionSet::EMPTY, |acc, &id| acc.with(id))
    }

    pub fn with(self, id: usize) -> Self {
        assert!(id < 32, "type id {id} out of bitmask range");
        ActionSet(self.0 | 1u32 << id)
    }

    pub fn contains(self, id: usize) -> bool {
        id < 32 && self.0 & (1u32 << id) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset_of(self, other: ActionSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member ids in ascending order.
    pub fn ids(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32usize).filter(move |&i| mask & (1u32 << i) != 0)
    }

    pub fn mask(self) -> u32 {
        self.0
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, id) in self.ids().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for ActionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.ids())
    }
}

impl<'de> Deserialize<'de> for ActionSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&id) = ids.iter().find(|&&id| id >= 32) {
            return Err(D::Error::custom(format!("type id {id} out of range")));
        }
        Ok(ActionSet::from_ids(&ids))
    }
}

/// An action with its two policy-relevant numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionStats {
    pub action: ActionSet,
    pub success_prob: f64,
    pub expected_cost: f64,
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
