//! Graduated response to low-trust members: isolation with a server alert,
//! quarantine and reevaluation, then probation before full reintegration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trust::TrustState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LifecycleState {
    Active,
    Isolated,
    Quarantined { elapsed: u32 },
    Reintegrating { remaining_probation: u32 },
}

impl LifecycleState {
    /// Active and reintegrating members exchange recommendations and take
    /// cooperation tasks; isolated and quarantined ones are only observed.
    pub fn participates(&self) -> bool {
        matches!(
            self,
            LifecycleState::Active | LifecycleState::Reintegrating { .. }
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            LifecycleState::Active => "active",
            LifecycleState::Isolated => "isolated",
            LifecycleState::Quarantined { .. } => "quarantined",
            LifecycleState::Reintegrating { .. } => "monitored",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyParams {
    pub isolate_threshold: f64,
    pub reintegrate_threshold: f64,
    /// Quarantine window in epochs.
    pub quarantine_window: u32,
    /// Probation length in epochs.
    pub probation_length: u32,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            isolate_threshold: 0.3,
            reintegrate_threshold: 0.6,
            quarantine_window: 5,
            probation_length: 5,
        }
    }
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("policy.isolate_threshold", self.isolate_threshold),
            ("policy.reintegrate_threshold", self.reintegrate_threshold),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(k, "must lie in [0, 1]"));
            }
        }
        if self.isolate_threshold >= self.reintegrate_threshold {
            return Err(Error::invalid(
                "policy.isolate_threshold",
                "must be below policy.reintegrate_threshold",
            ));
        }
        if self.quarantine_window == 0 {
            return Err(Error::invalid("policy.quarantine_window", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub node_id: usize,
    pub community_id: usize,
    pub epoch: u32,
    pub trust_at_isolation: TrustState,
}

/// Advances one member's lifecycle by one policy cycle.
///
/// `node_id`, `community_id` and `epoch` only label the alert.
pub fn evaluate_policy(
    trust: TrustState,
    lifecycle: LifecycleState,
    params: &PolicyParams,
    node_id: usize,
    community_id: usize,
    epoch: u32,
) -> (LifecycleState, Option<Alert>) {
    let alert = || Alert {
        node_id,
        community_id,
        epoch,
        trust_at_isolation: trust,
    };
    match lifecycle {
        LifecycleState::Active if trust.at_most(params.isolate_threshold) => {
            (LifecycleState::Isolated, Some(alert()))
        }
        LifecycleState::Active => (LifecycleState::Active, None),
        LifecycleState::Isolated => (LifecycleState::Quarantined { elapsed: 0 }, None),
        LifecycleState::Quarantined { elapsed } => {
            if trust.at_least(params.reintegrate_threshold) {
                (
                    LifecycleState::Reintegrating {
                        remaining_probation: params.probation_length,
                    },
                    None,
                )
            } else if elapsed + 1 >= params.quarantine_window {
                (LifecycleState::Isolated, None)
            } else {
                (
                    LifecycleState::Quarantined {
                        elapsed: elapsed + 1,
                    },
                    None,
                )
            }
        }
        LifecycleState::Reintegrating {
            remaining_probation,
        } => {
            if trust.at_most(params.isolate_threshold) {
                (LifecycleState::Isolated, Some(alert()))
            } else if remaining_probation == 0 {
                (LifecycleState::Active, None)
            } else {
                (
                    LifecycleState::Reintegrating {
                        remaining_probation: remaining_probation - 1,
                    },
                    None,
                )
            }
        }
    }
}

/// Members of `community` allowed to exchange recommendations and cooperate.
pub fn filter_participants(community: &[usize], lifecycles: &[LifecycleState]) -> Vec<usize> {
    community
        .iter()
        .copied()
        .filter(|&id| lifecycles[id].participates())
        .collect()
}

/// Server-side registry of flagged nodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServerView {
    /// node id -> epoch of its first alert
    pub flagged: BTreeMap<usize, u32>,
}

impl ServerView {
    pub fn is_flagged(&self, node_id: usize) -> bool {
        self.flagged.contains_key(&node_id)
    }
}

/// Records the alert; repeated alerts for a flagged node are no-ops.
pub fn propagate_alert(alert: &Alert, mut view: ServerView) -> ServerView {
    view.flagged.entry(alert.node_id).or_insert(alert.epoch);
    view
}
