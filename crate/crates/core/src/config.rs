//! One TOML file drives every module. Missing sections and keys take their
//! defaults; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{DatasetConfig, ForestParams};
use crate::policy::PolicyParams;
use crate::qos::{Condition, NetCWeights, NetworkProfile, NormalizationBounds, PerMetric, Range};
use crate::sim::{
    BehaviorParams, CalibrationTargets, ExperimentConfig, Mode, ModelParams, Profiles, Role,
};
use crate::tca::BoostParams;
use crate::trust::TrustParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub qos: QosSection,
    pub trust: TrustParams,
    pub boost: BoostParams,
    pub policy: PolicyParams,
    pub behavior: BehaviorParams,
    pub forest: ForestParams,
    pub dataset: DatasetConfig,
    pub experiment: ExperimentSection,
    pub calibration: CalibrationTargets,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QosSection {
    pub bounds: NormalizationBounds,
    pub weights: NetCWeights,
    pub profiles: ProfilesSection,
}

impl Default for QosSection {
    fn default() -> Self {
        Self {
            bounds: NormalizationBounds::default(),
            weights: NetCWeights::default(),
            profiles: ProfilesSection::default(),
        }
    }
}

/// Sampling ranges of one profile in native units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub ar_coefficient: f64,
    pub snr: Range,
    pub packet_loss: Range,
    pub jitter: Range,
    pub latency: Range,
    pub throughput: Range,
    pub sinr: Range,
}

impl ProfileSection {
    fn from_profile(p: &NetworkProfile) -> Self {
        let r = p.ranges;
        Self {
            ar_coefficient: p.ar_coefficient,
            snr: r.snr,
            packet_loss: r.packet_loss,
            jitter: r.jitter,
            latency: r.latency,
            throughput: r.throughput,
            sinr: r.sinr,
        }
    }

    fn to_profile(self, condition: Condition) -> NetworkProfile {
        NetworkProfile {
            condition,
            ranges: PerMetric {
                snr: self.snr,
                packet_loss: self.packet_loss,
                jitter: self.jitter,
                latency: self.latency,
                throughput: self.throughput,
                sinr: self.sinr,
            },
            ar_coefficient: self.ar_coefficient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfilesSection {
    pub good: ProfileSection,
    pub medium: ProfileSection,
    pub poor: ProfileSection,
}

impl Default for ProfilesSection {
    fn default() -> Self {
        Self::from_profiles(&Profiles::default())
    }
}

impl ProfilesSection {
    pub fn from_profiles(p: &Profiles) -> Self {
        Self {
            good: ProfileSection::from_profile(&p.good),
            medium: ProfileSection::from_profile(&p.medium),
            poor: ProfileSection::from_profile(&p.poor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub n_nodes: usize,
    pub community_size: usize,
    pub p_m: f64,
    pub attack: Role,
    pub profile: Condition,
    pub mode: Mode,
    pub epochs_cap: u32,
    pub k_stable: u32,
    /// First seed; runs use `seed .. seed + seeds`.
    pub seed: u64,
    pub seeds: u64,
    /// Trained forest used in TCA mode. Without one the rule-based fallback
    /// predictor is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub fig_a: FigA,
    pub fig_b: FigB,
    pub fig_c: FigC,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            n_nodes: e.n_nodes,
            community_size: e.community_size,
            p_m: e.p_m,
            attack: e.attack,
            profile: e.profile,
            mode: e.mode,
            epochs_cap: e.epochs_cap,
            k_stable: e.k_stable,
            seed: 0,
            seeds: 200,
            model: None,
            fig_a: FigA::default(),
            fig_b: FigB::default(),
            fig_c: FigC::default(),
        }
    }
}

/// Convergence per channel profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigA {
    pub profiles: Vec<Condition>,
    pub seeds: u64,
}

impl Default for FigA {
    fn default() -> Self {
        Self {
            profiles: Condition::ALL.to_vec(),
            seeds: 1000,
        }
    }
}

/// Bad-mouthing sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigB {
    pub profile: Condition,
    pub p_m: Vec<f64>,
    pub seeds: u64,
}

impl Default for FigB {
    fn default() -> Self {
        Self {
            profile: Condition::Poor,
            p_m: vec![0.2, 0.3, 0.4, 0.5],
            seeds: 500,
        }
    }
}

/// Scalability sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigC {
    pub profile: Condition,
    pub sizes: Vec<usize>,
    pub seeds: u64,
}

impl Default for FigC {
    fn default() -> Self {
        Self {
            profile: Condition::Poor,
            sizes: vec![50, 100, 150, 200, 250],
            seeds: 200,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = Self::read_text(path)?;
        Self::from_toml_str(&text)
    }

    pub fn read_text(path: &Path) -> Result<String> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        Ok(fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_params(&self) -> ModelParams {
        let p = &self.qos.profiles;
        let mut trust = self.trust;
        trust.max_boost = 1.0 + self.boost.lambda;
        ModelParams {
            bounds: self.qos.bounds,
            netc_weights: self.qos.weights,
            profiles: Profiles {
                good: p.good.to_profile(Condition::Good),
                medium: p.medium.to_profile(Condition::Medium),
                poor: p.poor.to_profile(Condition::Poor),
            },
            trust,
            boost: self.boost,
            policy: self.policy,
            behavior: self.behavior,
        }
    }

    /// Writes the profiles and evidence floor of `model` back into the file
    /// representation.
    pub fn set_model(&mut self, model: &ModelParams) {
        self.qos.profiles = ProfilesSection::from_profiles(&model.profiles);
        self.trust.q_floor = model.trust.q_floor;
    }

    pub fn seed_list(&self, count: u64) -> Vec<u64> {
        let s = self.experiment.seed;
        (s..s.saturating_add(count)).collect()
    }

    /// The single-experiment view used by `simulate` and as the base of
    /// every sweep.
    pub fn experiment_config(&self, seeds: u64) -> ExperimentConfig {
        let e = &self.experiment;
        ExperimentConfig {
            n_nodes: e.n_nodes,
            community_size: e.community_size,
            p_m: e.p_m,
            attack: e.attack,
            profile: e.profile,
            mode: e.mode,
            epochs_cap: e.epochs_cap,
            seeds: self.seed_list(seeds),
            k_stable: e.k_stable,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params().validate()?;
        self.forest.validate()?;
        self.dataset.validate()?;
        self.calibration.validate()?;
        let e = &self.experiment;
        if e.seeds == 0 {
            return Err(Error::invalid("experiment.seeds", "must be >= 1"));
        }
        self.experiment_config(e.seeds).validate()?;
        if e.fig_a.profiles.is_empty() {
            return Err(Error::invalid(
                "experiment.fig_a.profiles",
                "must not be empty",
            ));
        }
        if e.fig_b.p_m.is_empty()
            || e.fig_b
                .p_m
                .iter()
                .any(|p| !p.is_finite() || !(0.0..1.0).contains(p))
        {
            return Err(Error::invalid(
                "experiment.fig_b.p_m",
                "entries must lie in [0, 1) and the list must not be empty",
            ));
        }
        if e.fig_c.sizes.is_empty() || e.fig_c.sizes.iter().any(|&n| n < e.community_size) {
            return Err(Error::invalid(
                "experiment.fig_c.sizes",
                "entries must be >= community_size and the list must not be empty",
            ));
        }
        for (k, n) in [
            ("fig_a", e.fig_a.seeds),
            ("fig_b", e.fig_b.seeds),
            ("fig_c", e.fig_c.seeds),
        ] {
            if n == 0 {
                return Err(Error::invalid(
                    format!("experiment.{k}.seeds"),
                    "must be >= 1",
                ));
            }
        }
        Ok(())
    }
}
