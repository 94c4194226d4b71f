//! Reading instances and saved policy summaries from disk.

use std::path::Path;

use aoi_recruit_core::eval::StepPolicy;
use aoi_recruit_core::solver::{SolverResultSummary, ThresholdEntry, NEVER_REACHED};
use aoi_recruit_core::{Error, ProblemInstance, Result};

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInstance(format!("cannot read {}: {e}", path.display())))?;
    ProblemInstance::from_json(&text)
}

/// Loads a policy summary as written by the solve command and flattens its
/// switch list into the step policy the evaluators consume.
pub fn load_policy(path: &Path) -> Result<(SolverResultSummary, StepPolicy)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    let summary: SolverResultSummary = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("policy JSON: {e}")))?;
    let policy = step_policy_from_entries(&summary.thresholds)?;
    Ok((summary, policy))
}

/// Rebuilds the age-to-action map from saved switch entries. The entries
/// must chain (each switch starts from the previous one's target) with
/// nondecreasing switch ages; a switch marked never-reached ends the chain.
pub fn step_policy_from_entries(entries: &[ThresholdEntry]) -> Result<StepPolicy> {
    let first = entries.first().ok_or_else(|| {
        Error::InvalidParameter(
            "the policy file lists no switches, so the base action is unknown".into(),
        )
    })?;
    let mut segments = vec![(1u64, first.from)];
    let mut prev_to = first.from;
    let mut prev_theta = 1u64;
    for (k, entry) in entries.iter().enumerate() {
        if entry.from != prev_to {
            return Err(Error::InvalidParameter(format!(
                "switch {k} starts from {} but the previous switch ended at {}",
                entry.from, prev_to
            )));
        }
        if entry.theta == NEVER_REACHED {
            break;
        }
        if entry.theta < 1 {
            return Err(Error::InvalidParameter(format!("switch {k} happens before age 1")));
        }
        if entry.theta < prev_theta {
            return Err(Error::InvalidParameter(format!(
                "switch {k} at age {} undoes the earlier switch at age {prev_theta}",
                entry.theta
            )));
        }
        let last = segments.last_mut().expect("segments start nonempty");
        if last.0 == entry.theta {
            last.1 = entry.to;
        } else {
            segments.push((entry.theta, entry.to));
        }
        prev_to = entry.to;
        prev_theta = entry.theta;
    }
    StepPolicy::from_segments(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aoi_recruit_core::ActionSet;

    fn entry(from: ActionSet, to: ActionSet, theta: u64) -> ThresholdEntry {
        ThresholdEntry { from, to, theta }
    }

    #[test]
    fn chained_switches_become_segments() {
        let a0 = ActionSet::EMPTY;
        let a1 = ActionSet::singleton(0);
        let a2 = ActionSet::from_ids(&[0, 1]);
        let policy =
            step_policy_from_entries(&[entry(a0, a1, 2), entry(a1, a2, 5)]).unwrap();
        assert_eq!(policy.segments(), vec![(1, a0), (2, a1), (5, a2)]);
    }

    #[test]
    fn equal_ages_collapse_to_the_deeper_action() {
        let a0 = ActionSet::EMPTY;
        let a1 = ActionSet::singleton(0);
        let a2 = ActionSet::from_ids(&[0, 1]);
        let policy =
            step_policy_from_entries(&[entry(a0, a1, 3), entry(a1, a2, 3)]).unwrap();
        assert_eq!(policy.segments(), vec![(1, a0), (3, a2)]);
        let immediate = step_policy_from_entries(&[entry(a0, a1, 1)]).unwrap();
        assert_eq!(immediate.segments(), vec![(1, a1)]);
    }

    #[test]
    fn a_never_reached_switch_ends_the_chain() {
        let a0 = ActionSet::EMPTY;
        let a1 = ActionSet::singleton(0);
        let a2 = ActionSet::from_ids(&[0, 1]);
        let policy = step_policy_from_entries(&[
            entry(a0, a1, 4),
            entry(a1, a2, NEVER_REACHED),
        ])
        .unwrap();
        assert_eq!(policy.segments(), vec![(1, a0), (4, a1)]);
    }

    #[test]
    fn broken_chains_and_decreasing_ages_are_rejected() {
        let a0 = ActionSet::EMPTY;
        let a1 = ActionSet::singleton(0);
        let a2 = ActionSet::from_ids(&[0, 1]);
        assert!(step_policy_from_entries(&[]).is_err());
        assert!(step_policy_from_entries(&[entry(a0, a1, 3), entry(a0, a2, 4)]).is_err());
        assert!(step_policy_from_entries(&[entry(a0, a1, 3), entry(a1, a2, 2)]).is_err());
        assert!(step_policy_from_entries(&[entry(a0, a1, 0)]).is_err());
    }
}
