//! Network condition modelling.
//!
//! A community's channel is described by six QoS metrics. Raw samples are
//! mapped onto `[0, 1]` with fixed per-metric bounds and folded into the
//! composite network-condition score `netC`, where 1 is a perfect channel.
//! Synthetic traces come from per-profile uniform draws smoothed by an AR(1)
//! filter to mimic temporally correlated interference.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metric order used by every array view in this module.
pub const METRIC_NAMES: [&str; 6] = [
    "snr",
    "packet_loss",
    "jitter",
    "latency",
    "throughput",
    "sinr",
];

/// One raw channel snapshot in native units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosSample {
    pub snr_db: f64,
    pub packet_loss: f64,
    pub jitter_ms: f64,
    pub latency_ms: f64,
    pub throughput_mbps: f64,
    pub sinr_db: f64,
}

impl QosSample {
    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            snr_db: v[0],
            packet_loss: v[1],
            jitter_ms: v[2],
            latency_ms: v[3],
            throughput_mbps: v[4],
            sinr_db: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.snr_db,
            self.packet_loss,
            self.jitter_ms,
            self.latency_ms,
            self.throughput_mbps,
            self.sinr_db,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in METRIC_NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("qos.{name}")));
            }
            if v < 0.0 {
                return Err(Error::invalid(format!("qos.{name}"), "must be >= 0"));
            }
        }
        if self.packet_loss > 1.0 {
            return Err(Error::invalid("qos.packet_loss", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Closed interval `[low, high]` in a metric's native units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub low: f64,
    pub high: f64,
}

impl Range {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.low && v <= self.high
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.low, self.high)
    }
}

/// A value per QoS metric, in [`METRIC_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerMetric<T> {
    pub snr: T,
    pub packet_loss: T,
    pub jitter: T,
    pub latency: T,
    pub throughput: T,
    pub sinr: T,
}

impl<T: Copy> PerMetric<T> {
    pub fn to_array(&self) -> [T; 6] {
        [
            self.snr,
            self.packet_loss,
            self.jitter,
            self.latency,
            self.throughput,
            self.sinr,
        ]
    }

    pub fn from_array(v: [T; 6]) -> Self {
        Self {
            snr: v[0],
            packet_loss: v[1],
            jitter: v[2],
            latency: v[3],
            throughput: v[4],
            sinr: v[5],
        }
    }
}

/// Per-metric `(min, max)` used by [`normalize`].
pub type NormalizationBounds = PerMetric<Range>;

impl Default for NormalizationBounds {
    fn default() -> Self {
        Self {
            snr: Range::new(0.0, 40.0),
            packet_loss: Range::new(0.0, 1.0),
            jitter: Range::new(0.0, 50.0),
            latency: Range::new(0.0, 200.0),
            throughput: Range::new(0.0, 100.0),
            sinr: Range::new(0.0, 40.0),
        }
    }
}

pub fn validate_bounds(bounds: &NormalizationBounds, key: &str) -> Result<()> {
    for (name, r) in METRIC_NAMES.iter().zip(bounds.to_array()) {
        if !(r.low.is_finite() && r.high.is_finite()) {
            return Err(Error::NonFinite(format!("{key}.{name}")));
        }
        if r.low >= r.high {
            return Err(Error::invalid(
                format!("{key}.{name}"),
                "requires low < high",
            ));
        }
    }
    Ok(())
}

/// Channel snapshot mapped onto `[0, 1]` per metric, without polarity flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedQos {
    pub snr_n: f64,
    pub pl_n: f64,
    pub j_n: f64,
    pub l_n: f64,
    pub t_n: f64,
    pub sinr_n: f64,
}

impl NormalizedQos {
    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            snr_n: v[0],
            pl_n: v[1],
            j_n: v[2],
            l_n: v[3],
            t_n: v[4],
            sinr_n: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.snr_n,
            self.pl_n,
            self.j_n,
            self.l_n,
            self.t_n,
            self.sinr_n,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in METRIC_NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("normalized.{name}")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    format!("normalized.{name}"),
                    "must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }
}

/// Linear map of every metric onto `[0, 1]`, clamped at the bounds.
pub fn normalize(sample: &QosSample, bounds: &NormalizationBounds) -> Result<NormalizedQos> {
    let raw = sample.to_array();
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("qos.{}", METRIC_NAMES[i])));
    }
    let b = bounds.to_array();
    let mut out = [0.0; 6];
    for i in 0..6 {
        out[i] = ((raw[i] - b[i].low) / (b[i].high - b[i].low)).clamp(0.0, 1.0);
    }
    Ok(NormalizedQos::from_array(out))
}

/// Weights of the six terms of `netC`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetCWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub tau: f64,
    pub sigma: f64,
}

impl NetCWeights {
    pub fn equal() -> Self {
        let w = 1.0 / 6.0;
        Self {
            alpha: w,
            beta: w,
            gamma: w,
            delta: w,
            tau: w,
            sigma: w,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.alpha, self.beta, self.gamma, self.delta, self.tau, self.sigma,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.to_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(
                "qos.weights",
                "every weight must be finite and >= 0",
            ));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "qos.weights",
                format!("weights must sum to 1 (got {sum})"),
            ));
        }
        Ok(())
    }
}

impl Default for NetCWeights {
    fn default() -> Self {
        Self::equal()
    }
}

/// Composite network condition. Loss, jitter and latency enter as complements.
pub fn compute_netc(norm: &NormalizedQos, w: &NetCWeights) -> f64 {
    let v = w.alpha * norm.snr_n
        + w.beta * (1.0 - norm.pl_n)
        + w.gamma * (1.0 - norm.j_n)
        + w.delta * (1.0 - norm.l_n)
        + w.tau * norm.t_n
        + w.sigma * norm.sinr_n;
    v.clamp(0.0, 1.0)
}

/// Coarse channel label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Good,
    Medium,
    Poor,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Good, Condition::Medium, Condition::Poor];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Good => "Good",
            Condition::Medium => "Medium",
            Condition::Poor => "Poor",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "good" => Ok(Condition::Good),
            "medium" => Ok(Condition::Medium),
            "poor" => Ok(Condition::Poor),
            _ => Err(Error::invalid("profile", format!("unknown profile `{s}`"))),
        }
    }
}

/// Good at or above the no-boost cutoff, Medium in `[0.5, 0.8)`, Poor below.
pub fn classify_condition(netc: f64) -> Condition {
    if netc >= 0.8 {
        Condition::Good
    } else if netc >= 0.5 {
        Condition::Medium
    } else {
        Condition::Poor
    }
}

/// Sampling ranges for one channel profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub condition: Condition,
    pub ranges: PerMetric<Range>,
    pub ar_coefficient: f64,
}

impl NetworkProfile {
    pub fn default_for(condition: Condition) -> Self {
        let ranges = match condition {
            Condition::Good => PerMetric {
                snr: Range::new(30.0, 38.0),
                packet_loss: Range::new(0.0, 0.03),
                jitter: Range::new(1.0, 6.0),
                latency: Range::new(5.0, 25.0),
                throughput: Range::new(70.0, 95.0),
                sinr: Range::new(28.0, 36.0),
            },
            Condition::Medium => PerMetric {
                snr: Range::new(18.0, 30.0),
                packet_loss: Range::new(0.05, 0.15),
                jitter: Range::new(8.0, 20.0),
                latency: Range::new(40.0, 90.0),
                throughput: Range::new(35.0, 65.0),
                sinr: Range::new(15.0, 27.0),
            },
            Condition::Poor => PerMetric {
                snr: Range::new(12.05, 18.05),
                packet_loss: Range::new(0.71875, 0.81875),
                jitter: Range::new(26.4375, 36.4375),
                latency: Range::new(107.75, 142.75),
                throughput: Range::new(31.125, 43.125),
                sinr: Range::new(12.05, 18.05),
            },
        };
        Self {
            condition,
            ranges,
            ar_coefficient: 0.8,
        }
    }

    pub fn validate(&self, bounds: &NormalizationBounds, key: &str) -> Result<()> {
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::invalid(
                format!("{key}.ar_coefficient"),
                "must lie in [0, 1)",
            ));
        }
        for ((name, r), b) in METRIC_NAMES
            .iter()
            .zip(self.ranges.to_array())
            .zip(bounds.to_array())
        {
            if !(r.low.is_finite() && r.high.is_finite()) {
                return Err(Error::NonFinite(format!("{key}.{name}")));
            }
            if r.low > r.high {
                return Err(Error::invalid(
                    format!("{key}.{name}"),
                    "requires low <= high",
                ));
            }
            if r.low < b.low || r.high > b.high {
                return Err(Error::invalid(
                    format!("{key}.{name}"),
                    format!(
                        "range must lie within normalization bounds [{}, {}]",
                        b.low, b.high
                    ),
                ));
            }
        }
        Ok(())
    }

    /// The lowest and highest `netC` any sample of this profile can reach.
    pub fn netc_envelope(&self, bounds: &NormalizationBounds, w: &NetCWeights) -> (f64, f64) {
        let r = self.ranges.to_array();
        let worst = QosSample::from_array([
            r[0].low, r[1].high, r[2].high, r[3].high, r[4].low, r[5].low,
        ]);
        let best = QosSample::from_array([
            r[0].high, r[1].low, r[2].low, r[3].low, r[4].high, r[5].high,
        ]);
        let lo = normalize(&worst, bounds)
            .map(|n| compute_netc(&n, w))
            .unwrap_or(0.0);
        let hi = normalize(&best, bounds)
            .map(|n| compute_netc(&n, w))
            .unwrap_or(1.0);
        (lo, hi)
    }

    /// `netC` at the mid-point of every range.
    pub fn netc_centre(&self, bounds: &NormalizationBounds, w: &NetCWeights) -> f64 {
        let mid = self.ranges.to_array().map(|r| (r.low + r.high) / 2.0);
        normalize(&QosSample::from_array(mid), bounds)
            .map(|n| compute_netc(&n, w))
            .unwrap_or(0.0)
    }

    /// Shifts every range so the profile's mid-point `netC` moves by `shift`,
    /// keeping the widths. Ranges are clipped to the normalization bounds.
    pub fn recentered(&self, shift: f64, bounds: &NormalizationBounds) -> Self {
        let polarity = [1.0, -1.0, -1.0, -1.0, 1.0, 1.0];
        let b = bounds.to_array();
        let mut r = self.ranges.to_array();
        for i in 0..6 {
            let delta = polarity[i] * shift * (b[i].high - b[i].low);
            let width = r[i].high - r[i].low;
            let mut low = r[i].low + delta;
            low = low.clamp(b[i].low, b[i].high - width);
            r[i] = Range::new(low, low + width);
        }
        Self {
            ranges: PerMetric::from_array(r),
            ..*self
        }
    }
}

/// Draws the next channel sample of `profile`.
///
/// Each metric is drawn uniformly from its range and blended with the
/// previous value as `rho * prev + (1 - rho) * draw`, clamped to the range.
pub fn sample_profile<R: Rng + ?Sized>(
    profile: &NetworkProfile,
    previous: Option<&QosSample>,
    rng: &mut R,
) -> QosSample {
    let ranges = profile.ranges.to_array();
    let mut draw = [0.0; 6];
    for (d, r) in draw.iter_mut().zip(ranges.iter()) {
        let u: f64 = rng.gen();
        *d = r.low + u * (r.high - r.low);
    }
    match previous {
        None => QosSample::from_array(draw),
        Some(prev) => {
            let rho = profile.ar_coefficient;
            let p = prev.to_array();
            let mut out = [0.0; 6];
            for i in 0..6 {
                out[i] = ranges[i].clamp(rho * p[i] + (1.0 - rho) * draw[i]);
            }
            QosSample::from_array(out)
        }
    }
}

/// `epochs` consecutive samples of `profile` with their `netC`.
pub fn generate_trace<R: Rng + ?Sized>(
    profile: &NetworkProfile,
    bounds: &NormalizationBounds,
    w: &NetCWeights,
    epochs: usize,
    rng: &mut R,
) -> Result<Vec<(QosSample, f64)>> {
    let mut out: Vec<(QosSample, f64)> = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let q = sample_profile(profile, out.last().map(|(q, _)| q), rng);
        let netc = compute_netc(&normalize(&q, bounds)?, w);
        out.push((q, netc));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bounds() -> NormalizationBounds {
        NormalizationBounds::default()
    }

    #[test]
    fn normalize_clamps_to_identity_at_bounds() {
        let b = bounds();
        let hi = QosSample::from_array(b.to_array().map(|r| r.high));
        let lo = QosSample::from_array(b.to_array().map(|r| r.low));
        assert_eq!(normalize(&hi, &b).unwrap().to_array(), [1.0; 6]);
        assert_eq!(normalize(&lo, &b).unwrap().to_array(), [0.0; 6]);
    }

    #[test]
    fn normalize_midpoint_snr() {
        let mut s = QosSample::from_array([0.0; 6]);
        s.snr_db = 20.0;
        assert_eq!(normalize(&s, &bounds()).unwrap().snr_n, 0.5);
    }

    #[test]
    fn normalize_rejects_non_finite() {
        let mut s = QosSample::from_array([1.0; 6]);
        s.jitter_ms = f64::NAN;
        assert!(matches!(normalize(&s, &bounds()), Err(Error::NonFinite(_))));
        s.jitter_ms = f64::INFINITY;
        assert!(normalize(&s, &bounds()).is_err());
    }

    #[test]
    fn out_of_bounds_values_clamp() {
        let mut s = QosSample::from_array([0.0; 6]);
        s.latency_ms = 1_000.0;
        assert_eq!(normalize(&s, &bounds()).unwrap().l_n, 1.0);
    }

    #[test]
    fn netc_table() {
        let w = NetCWeights::equal();
        let best = NormalizedQos::from_array([1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let worst = NormalizedQos::from_array([0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let mid = NormalizedQos::from_array([0.5; 6]);
        assert!((compute_netc(&best, &w) - 1.0).abs() < 1e-12);
        assert_eq!(compute_netc(&worst, &w), 0.0);
        assert!((compute_netc(&mid, &w) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(NetCWeights::equal().validate().is_ok());
        let mut w = NetCWeights::equal();
        w.alpha = 0.5;
        assert!(w.validate().is_err());
    }

    #[test]
    fn condition_boundaries() {
        assert_eq!(classify_condition(0.8), Condition::Good);
        assert_eq!(classify_condition(0.5), Condition::Medium);
        assert_eq!(classify_condition(0.49), Condition::Poor);
        assert_eq!(classify_condition(0.7999), Condition::Medium);
    }

    #[test]
    fn ar_zero_returns_raw_draw() {
        let mut p = NetworkProfile::default_for(Condition::Medium);
        p.ar_coefficient = 0.0;
        let prev = sample_profile(&p, None, &mut ChaCha8Rng::seed_from_u64(1));
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(
            sample_profile(&p, Some(&prev), &mut a),
            sample_profile(&p, None, &mut b)
        );
    }

    #[test]
    fn ar_one_holds_previous_clamped() {
        // ar_coefficient = 1 is outside the validated range but the filter
        // itself degenerates to a clamped hold.
        let mut p = NetworkProfile::default_for(Condition::Good);
        p.ar_coefficient = 1.0;
        let prev = QosSample::from_array([100.0, 0.01, 3.0, 10.0, 80.0, 30.0]);
        let out = sample_profile(&p, Some(&prev), &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(out.snr_db, p.ranges.snr.high);
        assert_eq!(out.packet_loss, 0.01);
        assert_eq!(out.throughput_mbps, 80.0);
    }

    #[test]
    fn default_profiles_are_valid_and_ordered() {
        let b = bounds();
        let w = NetCWeights::equal();
        let good = NetworkProfile::default_for(Condition::Good);
        for c in Condition::ALL {
            NetworkProfile::default_for(c)
                .validate(&b, "profile")
                .unwrap();
        }
        // Good must never dip below the boost cutoff.
        assert!(good.netc_envelope(&b, &w).0 >= 0.8);
    }

    #[test]
    fn recentering_moves_netc() {
        let b = bounds();
        let w = NetCWeights::equal();
        let p = NetworkProfile::default_for(Condition::Poor);
        let (lo, hi) = p.netc_envelope(&b, &w);
        let q = p.recentered(0.05, &b);
        let (lo2, hi2) = q.netc_envelope(&b, &w);
        assert!(lo2 > lo && hi2 > hi);
        q.validate(&b, "p").unwrap();
    }
}
