//! Discrete-time simulation of CL-supervised communities.

mod calibrate;
mod convergence;
mod episode;
mod experiments;
mod world;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::qos::{Condition, NetCWeights, NetworkProfile, NormalizationBounds};
use crate::tca::BoostParams;
use crate::trust::{BehaviorIndicators, TrustParams, TrustState};

pub use calibrate::{
    calibrate, with_poor_centre, CalibrationOutcome, CalibrationPoint, CalibrationReport,
    CalibrationTargets,
};
pub use convergence::detect_convergence;
pub use episode::{honest_episode, EpisodeOutcome};
pub use experiments::{
    experiment_badmouthing, experiment_convergence, experiment_scalability, run_many, summary_row,
    ExperimentOutput, GroupRuns, SummaryRow,
};
pub use world::{build_network, run, DiagnosticsRow, NodeSpec, RunOutput, Topology, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Honest,
    BadMouther,
    NonCooperative,
}

impl Role {
    pub fn is_malicious(self) -> bool {
        self != Role::Honest
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Honest => "Honest",
            Role::BadMouther => "BadMouther",
            Role::NonCooperative => "NonCooperative",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Tca,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "Baseline",
            Mode::Tca => "TCA",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Mode::Baseline),
            "tca" => Ok(Mode::Tca),
            _ => Err(Error::invalid(
                "mode",
                format!("expected baseline|tca, got `{s}`"),
            )),
        }
    }
}

/// Cooperation and direct-honesty rates of one role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleBehavior {
    pub cooperation: f64,
    pub direct_honesty: f64,
}

/// How members behave and exchange recommendations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BehaviorParams {
    pub honest: RoleBehavior,
    pub bad_mouther: RoleBehavior,
    pub non_cooperative: RoleBehavior,
    /// Upper end of a bad-mouther's uniform lie about its targets.
    pub bad_mouth_max: f64,
    /// Bad-mouthers praise fellow malicious nodes with 1.0.
    pub collusion: bool,
    /// Cooperation estimates (recommendations and CL views) divide out the
    /// channel's known delivery rate.
    pub loss_compensated_estimates: bool,
    /// Every member gets its own channel instead of sharing the CL's.
    pub per_node_channels: bool,
    /// Trust state assigned at admission.
    pub initial_trust: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            honest: RoleBehavior {
                cooperation: 0.95,
                direct_honesty: 0.95,
            },
            bad_mouther: RoleBehavior {
                cooperation: 0.95,
                direct_honesty: 0.95,
            },
            non_cooperative: RoleBehavior {
                cooperation: 0.1,
                direct_honesty: 0.2,
            },
            bad_mouth_max: 0.2,
            collusion: false,
            loss_compensated_estimates: true,
            per_node_channels: false,
            initial_trust: 0.5,
        }
    }
}

impl BehaviorParams {
    pub fn true_behavior(&self, role: Role) -> BehaviorIndicators {
        let (b, truthful) = match role {
            Role::Honest => (self.honest, 0.95),
            Role::BadMouther => (self.bad_mouther, 0.1),
            Role::NonCooperative => (self.non_cooperative, 0.95),
        };
        BehaviorIndicators::new(b.cooperation, b.direct_honesty, truthful)
    }

    pub fn initial_state(&self) -> TrustState {
        TrustState::from_value(self.initial_trust).unwrap_or(TrustState::NEUTRAL)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, r) in [
            ("behavior.honest", self.honest),
            ("behavior.bad_mouther", self.bad_mouther),
            ("behavior.non_cooperative", self.non_cooperative),
        ] {
            for (f, v) in [
                ("cooperation", r.cooperation),
                ("direct_honesty", r.direct_honesty),
            ] {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("{k}.{f}"), "must lie in [0, 1]"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.bad_mouth_max) {
            return Err(Error::invalid(
                "behavior.bad_mouth_max",
                "must lie in [0, 1]",
            ));
        }
        if self.non_cooperative.cooperation > 0.2 {
            return Err(Error::invalid(
                "behavior.non_cooperative.cooperation",
                "must be <= 0.2",
            ));
        }
        let grid = (self.initial_trust * 10.0).round() / 10.0;
        if !(0.0..=1.0).contains(&self.initial_trust) || (grid - self.initial_trust).abs() > 1e-9 {
            return Err(Error::invalid(
                "behavior.initial_trust",
                "must be a grid value in {0.0, 0.1, ..., 1.0}",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profiles {
    pub good: NetworkProfile,
    pub medium: NetworkProfile,
    pub poor: NetworkProfile,
}

impl Default for Profiles {
    fn default() -> Self {
        Self {
            good: NetworkProfile::default_for(Condition::Good),
            medium: NetworkProfile::default_for(Condition::Medium),
            poor: NetworkProfile::default_for(Condition::Poor),
        }
    }
}

impl Profiles {
    pub fn get(&self, c: Condition) -> &NetworkProfile {
        match c {
            Condition::Good => &self.good,
            Condition::Medium => &self.medium,
            Condition::Poor => &self.poor,
        }
    }

    pub fn get_mut(&mut self, c: Condition) -> &mut NetworkProfile {
        match c {
            Condition::Good => &mut self.good,
            Condition::Medium => &mut self.medium,
            Condition::Poor => &mut self.poor,
        }
    }
}

/// Everything describing the modelled system, independent of any single
/// experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelParams {
    pub bounds: NormalizationBounds,
    pub netc_weights: NetCWeights,
    pub profiles: Profiles,
    pub trust: TrustParams,
    pub boost: BoostParams,
    pub policy: PolicyParams,
    pub behavior: BehaviorParams,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        crate::qos::validate_bounds(&self.bounds, "qos.bounds")?;
        self.netc_weights.validate()?;
        for c in Condition::ALL {
            let p = self.profiles.get(c);
            if p.condition != c {
                return Err(Error::invalid(
                    format!("qos.profiles.{}", c.as_str().to_lowercase()),
                    "profile condition does not match its section",
                ));
            }
            p.validate(
                &self.bounds,
                &format!("qos.profiles.{}", c.as_str().to_lowercase()),
            )?;
        }
        self.trust.validate()?;
        self.boost.validate()?;
        if (self.trust.max_boost - (1.0 + self.boost.lambda)).abs() > 1e-12 {
            return Err(Error::invalid(
                "trust.max_boost",
                "must equal 1 + boost.lambda",
            ));
        }
        self.policy.validate()?;
        self.behavior.validate()?;
        Ok(())
    }
}

/// One experiment's world and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    pub community_size: usize,
    pub p_m: f64,
    /// Role assigned to malicious nodes.
    pub attack: Role,
    pub profile: Condition,
    pub mode: Mode,
    pub epochs_cap: u32,
    pub seeds: Vec<u64>,
    pub k_stable: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_nodes: 50,
            community_size: 25,
            p_m: 0.0,
            attack: Role::BadMouther,
            profile: Condition::Poor,
            mode: Mode::Tca,
            epochs_cap: 32,
            seeds: (0..200).collect(),
            k_stable: 3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.community_size < 2 {
            return Err(Error::invalid("experiment.community_size", "must be >= 2"));
        }
        if self.n_nodes < self.community_size {
            return Err(Error::invalid(
                "experiment.n_nodes",
                "must be >= community_size",
            ));
        }
        if !self.p_m.is_finite() || !(0.0..1.0).contains(&self.p_m) {
            return Err(Error::invalid("experiment.p_m", "must lie in [0, 1)"));
        }
        if self.attack == Role::Honest {
            return Err(Error::invalid(
                "experiment.attack",
                "must be a malicious role",
            ));
        }
        if self.epochs_cap == 0 {
            return Err(Error::invalid("experiment.epochs_cap", "must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("experiment.seeds", "must not be empty"));
        }
        if self.k_stable == 0 {
            return Err(Error::invalid("experiment.k_stable", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }
}

/// Per-node outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub seed: u64,
    pub node_id: usize,
    pub role: Role,
    pub profile: Condition,
    pub mode: Mode,
    pub convergence_epoch: Option<u32>,
    pub final_state: TrustState,
}

impl ConvergenceRecord {
    /// Honest nodes must end trusted, malicious ones untrusted.
    pub fn correctly_classified(&self, trust: &TrustParams) -> bool {
        if self.role.is_malicious() {
            self.final_state.at_most(trust.untrusted_threshold)
        } else {
            self.final_state.at_least(trust.trusted_threshold)
        }
    }
}
