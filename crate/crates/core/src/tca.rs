//! Trust convergence acceleration.
//!
//! The boosting factor depends only on the channel (`netC`) and on the
//! predicted convergence class. It is exactly 1 at or above the cutoff, so
//! healthy channels run the unmodified chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::FeatureVector;
use crate::qos::{classify_condition, Condition};
use crate::trust::{transition_probs, TransitionProbs, TrustParams};

pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostParams {
    pub lambda: f64,
    pub netc_cutoff: f64,
    /// Maximum convergence time in epochs.
    pub max_t: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            netc_cutoff: 0.8,
            max_t: 16.0,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::invalid("boost.lambda", "must be finite and >= 0"));
        }
        if !(self.netc_cutoff > 0.0 && self.netc_cutoff <= 1.0) {
            return Err(Error::invalid("boost.netc_cutoff", "must lie in (0, 1]"));
        }
        if !self.max_t.is_finite() || self.max_t < 1.0 {
            return Err(Error::invalid("boost.max_t", "must be >= 1"));
        }
        Ok(())
    }
}

/// Predicted convergence class with its representative epoch count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvergencePrediction {
    pub class_id: u8,
    pub pc: u32,
}

impl ConvergencePrediction {
    /// Class `k` of the 4-class binning stands for `4k` epochs.
    pub fn from_class(class_id: u8) -> Result<Self> {
        if !(1..=NUM_CLASSES as u8).contains(&class_id) {
            return Err(Error::invalid(
                "class_id",
                format!("{class_id} outside [1, 4]"),
            ));
        }
        Ok(Self {
            class_id,
            pc: 4 * u32::from(class_id),
        })
    }

    /// Class of an observed convergence epoch: `<=4 -> 1`, `5..=8 -> 2`,
    /// `9..=12 -> 3`, anything later or never -> 4.
    pub fn class_of_epoch(epoch: Option<u32>) -> u8 {
        match epoch {
            Some(e) if e <= 4 => 1,
            Some(e) if e <= 8 => 2,
            Some(e) if e <= 12 => 3,
            _ => 4,
        }
    }
}

/// `bf = 1 + (1 - netC) * lambda * min(pc / maxT, 1)`, or exactly 1 when
/// `netC >= netc_cutoff`.
pub fn boost_factor(
    netc: f64,
    prediction: &ConvergencePrediction,
    params: &BoostParams,
) -> Result<f64> {
    if !netc.is_finite() {
        return Err(Error::NonFinite("netc".into()));
    }
    if netc >= params.netc_cutoff {
        return Ok(1.0);
    }
    let netc = netc.clamp(0.0, 1.0);
    let ratio = (f64::from(prediction.pc) / params.max_t).min(1.0);
    Ok(1.0 + (1.0 - netc) * params.lambda * ratio)
}

/// Transition row with the boosting factor applied.
pub fn boosted_probs(
    s_obs: f64,
    netc: f64,
    prediction: &ConvergencePrediction,
    trust: &TrustParams,
    boost: &BoostParams,
) -> Result<TransitionProbs> {
    let bf = boost_factor(netc, prediction, boost)?;
    transition_probs(s_obs, netc, bf, trust)
}

/// Anything that maps a feature vector to a convergence class.
pub trait ConvergencePredictor: Send + Sync {
    fn predict_class(&self, features: &FeatureVector) -> u8;

    fn prediction(&self, features: &FeatureVector) -> ConvergencePrediction {
        // predict_class implementations only ever return 1..=4
        ConvergencePrediction::from_class(self.predict_class(features)).expect("class in range")
    }
}

/// Rule-based stand-in used when no trained forest is available:
/// Good -> 1, Medium -> 2, Poor -> 3.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackPredictor;

impl ConvergencePredictor for FallbackPredictor {
    fn predict_class(&self, features: &FeatureVector) -> u8 {
        match classify_condition(features.netc) {
            Condition::Good => 1,
            Condition::Medium => 2,
            Condition::Poor => 3,
        }
    }
}
