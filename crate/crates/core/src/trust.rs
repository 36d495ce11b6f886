//! Member-node trust: observation under lossy channels, the three behavioral
//! indicators, their aggregate score and the 11-state Markov transition.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qos::QosSample;

const BOOST_EPS: f64 = 1e-9;

/// Trust level on the grid `{0.0, 0.1, ..., 1.0}`, stored as its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TrustState(u8);

impl TrustState {
    pub const MIN: TrustState = TrustState(0);
    pub const MAX: TrustState = TrustState(10);
    pub const NEUTRAL: TrustState = TrustState(5);

    pub fn from_index(index: u8) -> Result<Self> {
        if index > 10 {
            return Err(Error::invalid("trust_state", format!("index {index} > 10")));
        }
        Ok(Self(index))
    }

    /// Nearest grid state to `value`.
    pub fn from_value(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid(
                "trust_state",
                format!("{value} outside [0, 1]"),
            ));
        }
        Ok(Self((value * 10.0).round() as u8))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn is_ceiling(self) -> bool {
        self.0 == 10
    }

    pub fn is_floor(self) -> bool {
        self.0 == 0
    }

    fn up(self) -> Self {
        Self((self.0 + 1).min(10))
    }

    fn down(self) -> Self {
        Self(self.0.saturating_sub(1))
    }

    /// Grid comparisons against real-valued thresholds, robust to `0.1 * k`
    /// rounding.
    pub fn at_least(self, threshold: f64) -> bool {
        f64::from(self.0) >= (threshold * 10.0 - 1e-9)
    }

    pub fn at_most(self, threshold: f64) -> bool {
        f64::from(self.0) <= (threshold * 10.0 + 1e-9)
    }
}

impl TryFrom<u8> for TrustState {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::from_index(v)
    }
}

impl From<TrustState> for u8 {
    fn from(s: TrustState) -> u8 {
        s.0
    }
}

impl fmt::Display for TrustState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

/// Cooperation `C`, direct honesty `D` and indirect honesty `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorIndicators {
    pub cooperation: f64,
    pub direct_honesty: f64,
    pub indirect_honesty: f64,
}

impl BehaviorIndicators {
    pub fn new(cooperation: f64, direct_honesty: f64, indirect_honesty: f64) -> Self {
        Self {
            cooperation,
            direct_honesty,
            indirect_honesty,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("cooperation", self.cooperation),
            ("direct_honesty", self.direct_honesty),
            ("indirect_honesty", self.indirect_honesty),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(k, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorWeights {
    pub cooperation: f64,
    pub direct: f64,
    pub indirect: f64,
}

impl IndicatorWeights {
    pub fn equal() -> Self {
        Self {
            cooperation: 1.0 / 3.0,
            direct: 1.0 / 3.0,
            indirect: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustParams {
    pub weights: IndicatorWeights,
    /// Score at or above which trust drifts upward.
    pub theta_up: f64,
    /// Interaction probes per epoch.
    pub n_obs: u32,
    /// Lower clamp on evidence quality.
    pub q_floor: f64,
    pub trusted_threshold: f64,
    pub untrusted_threshold: f64,
    /// Half-width of the uniform sensing noise on `D` and `I`.
    pub observation_noise: f64,
    /// Largest boosting factor the transition rule accepts. Derived from
    /// `boost.lambda` when loading a config file.
    #[serde(skip)]
    pub max_boost: f64,
}

impl Default for TrustParams {
    fn default() -> Self {
        Self {
            weights: IndicatorWeights {
                cooperation: 0.22,
                direct: 0.7,
                indirect: 0.08,
            },
            theta_up: 0.5,
            n_obs: 10,
            q_floor: 0.15,
            trusted_threshold: 0.8,
            untrusted_threshold: 0.3,
            observation_noise: 0.05,
            max_boost: 1.2,
        }
    }
}

impl TrustParams {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        for (k, v) in [
            ("trust.weights.cooperation", w.cooperation),
            ("trust.weights.direct", w.direct),
            ("trust.weights.indirect", w.indirect),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(k, "must be finite and >= 0"));
            }
        }
        let sum = w.cooperation + w.direct + w.indirect;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "trust.weights",
                format!("must sum to 1 (got {sum})"),
            ));
        }
        for (k, v) in [
            ("trust.theta_up", self.theta_up),
            ("trust.q_floor", self.q_floor),
            ("trust.trusted_threshold", self.trusted_threshold),
            ("trust.untrusted_threshold", self.untrusted_threshold),
            ("trust.observation_noise", self.observation_noise),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(k, "must lie in [0, 1]"));
            }
        }
        if self.n_obs == 0 {
            return Err(Error::invalid("trust.n_obs", "must be >= 1"));
        }
        if self.untrusted_threshold >= self.trusted_threshold {
            return Err(Error::invalid(
                "trust.untrusted_threshold",
                "must be below trust.trusted_threshold",
            ));
        }
        if !self.max_boost.is_finite() || self.max_boost < 1.0 {
            return Err(Error::invalid("trust.max_boost", "must be >= 1"));
        }
        Ok(())
    }
}

/// One row of the Markov transition matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionProbs {
    pub up: f64,
    pub down: f64,
    pub stay: f64,
}

impl TransitionProbs {
    pub const FROZEN: TransitionProbs = TransitionProbs {
        up: 0.0,
        down: 0.0,
        stay: 1.0,
    };

    pub fn is_row_stochastic(&self) -> bool {
        self.up >= 0.0
            && self.down >= 0.0
            && self.stay >= 0.0
            && (self.up + self.down + self.stay - 1.0).abs() <= 1e-12
    }

    /// Moves the mass of a blocked direction at the grid edges onto `stay`.
    pub fn restricted_to(self, state: TrustState) -> Self {
        let mut p = self;
        if state.is_ceiling() {
            p.stay += p.up;
            p.up = 0.0;
        }
        if state.is_floor() {
            p.stay += p.down;
            p.down = 0.0;
        }
        p
    }
}

/// Outcome of one epoch of CL-side monitoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Evidence(BehaviorIndicators),
    /// Every probe was lost; the caller keeps the previous epoch's view.
    NoEvidence,
}

/// Counts how many of `n_obs` probes towards a node with cooperation rate
/// `cooperation` come back over a channel losing `packet_loss` of its packets.
/// Returns `None` when the channel delivers nothing.
pub fn probe_successes<R: Rng + ?Sized>(
    cooperation: f64,
    packet_loss: f64,
    n_obs: u32,
    rng: &mut R,
) -> Option<u32> {
    if packet_loss >= 1.0 {
        return None;
    }
    let p = cooperation * (1.0 - packet_loss);
    Some((0..n_obs).filter(|_| rng.gen::<f64>() < p).count() as u32)
}

/// Noisy, loss-affected view of a node's true behavior.
///
/// Cooperation is the fraction of `n_obs` probes that succeed, each with
/// probability `C * (1 - packet_loss)`. `D` and `I` pass through with uniform
/// noise of half-width `noise`, clamped to `[0, 1]`.
pub fn observe_behavior<R: Rng + ?Sized>(
    true_behavior: &BehaviorIndicators,
    qos: &QosSample,
    n_obs: u32,
    noise: f64,
    rng: &mut R,
) -> Observation {
    debug_assert!(n_obs >= 1);
    let Some(k) = probe_successes(true_behavior.cooperation, qos.packet_loss, n_obs, rng) else {
        return Observation::NoEvidence;
    };
    let mut jitter = |v: f64| {
        let u: f64 = rng.gen();
        (v + noise * (2.0 * u - 1.0)).clamp(0.0, 1.0)
    };
    let d = jitter(true_behavior.direct_honesty);
    let i = jitter(true_behavior.indirect_honesty);
    Observation::Evidence(BehaviorIndicators::new(
        f64::from(k) / f64::from(n_obs),
        d,
        i,
    ))
}

pub fn behavior_score(ind: &BehaviorIndicators, w: &IndicatorWeights) -> f64 {
    (w.cooperation * ind.cooperation
        + w.direct * ind.direct_honesty
        + w.indirect * ind.indirect_honesty)
        .clamp(0.0, 1.0)
}

/// Drift rule of the trust chain.
///
/// Evidence quality `q = clamp(netC, q_floor, 1)`. A score at or above
/// `theta_up` moves up with probability `min(1, q * bf)`; a score below
/// `theta_up / bf` moves down with probability `q`; anything in between
/// stays put.
pub fn transition_probs(
    s_obs: f64,
    netc: f64,
    bf: f64,
    params: &TrustParams,
) -> Result<TransitionProbs> {
    if !bf.is_finite() || bf < 1.0 - BOOST_EPS || bf > params.max_boost + BOOST_EPS {
        return Err(Error::BoostOutOfRange(bf));
    }
    if !s_obs.is_finite() {
        return Err(Error::NonFinite("s_obs".into()));
    }
    if !netc.is_finite() {
        return Err(Error::NonFinite("netc".into()));
    }
    let q = netc.clamp(params.q_floor, 1.0);
    let threshold_down = params.theta_up / bf;
    let (up, down) = if s_obs >= params.theta_up {
        ((q * bf).min(1.0), 0.0)
    } else if s_obs < threshold_down {
        (0.0, q)
    } else {
        (0.0, 0.0)
    };
    Ok(TransitionProbs {
        up,
        down,
        stay: 1.0 - up - down,
    })
}

/// One Markov step. Consumes exactly one uniform draw.
pub fn step_trust<R: Rng + ?Sized>(
    state: TrustState,
    probs: &TransitionProbs,
    rng: &mut R,
) -> TrustState {
    let p = probs.restricted_to(state);
    let u: f64 = rng.gen();
    if u < p.up {
        state.up()
    } else if u < p.up + p.down {
        state.down()
    } else {
        state
    }
}

/// Trust-weighted mean of recommendations, ignoring recommenders at or below
/// `untrusted_threshold`. Neutral 0.5 when nobody is eligible.
pub fn aggregate_indirect(recommendations: &[(f64, TrustState)], untrusted_threshold: f64) -> f64 {
    let (num, den) = recommendations
        .iter()
        .filter(|(_, t)| !t.at_most(untrusted_threshold))
        .fold((0.0, 0.0), |(n, d), (v, t)| {
            (n + v * t.value(), d + t.value())
        });
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// Honesty adjustment of a recommender: one minus the mean absolute gap
/// between what it reported and what the CL saw of each target.
///
/// Takes `(recommendation, cl_view)` pairs; an empty slice yields 1.
pub fn recommendation_penalty(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 1.0;
    }
    let dev: f64 = pairs.iter().map(|(r, v)| (r - v).abs()).sum::<f64>() / pairs.len() as f64;
    (1.0 - dev).clamp(0.0, 1.0)
}
