//! Grid search for the evidence floor and the Poor profile position that put
//! baseline convergence inside target bands.

use serde::{Deserialize, Serialize};

use super::{run_many, ExperimentConfig, Mode, ModelParams, Role};
use crate::error::{Error, Result};
use crate::qos::Condition;
use crate::report::summarize;
use crate::tca::FallbackPredictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationTargets {
    /// Accepted baseline mean convergence epochs under Good, `[low, high]`.
    pub good_band: [f64; 2],
    pub poor_band: [f64; 2],
    pub q_floors: Vec<f64>,
    /// Candidate mid-point `netC` values for the Poor profile.
    pub poor_centres: Vec<f64>,
    /// Seeded runs per profile and grid point.
    pub runs: usize,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            good_band: [3.0, 5.0],
            poor_band: [10.0, 14.0],
            q_floors: vec![0.15, 0.2, 0.25, 0.3],
            poor_centres: vec![0.25, 0.3, 0.35],
            runs: 500,
        }
    }
}

impl CalibrationTargets {
    pub fn validate(&self) -> Result<()> {
        if self.q_floors.is_empty() || self.poor_centres.is_empty() {
            return Err(Error::invalid("calibration", "grid must not be empty"));
        }
        if self.q_floors.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::invalid("calibration.q_floors", "must lie in [0, 1]"));
        }
        if self.poor_centres.iter().any(|c| !(0.0..0.5).contains(c)) {
            return Err(Error::invalid(
                "calibration.poor_centres",
                "must lie in [0, 0.5)",
            ));
        }
        if self.runs == 0 {
            return Err(Error::invalid("calibration.runs", "must be >= 1"));
        }
        for (k, b) in [
            ("calibration.good_band", self.good_band),
            ("calibration.poor_band", self.poor_band),
        ] {
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(k.into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationPoint {
    pub q_floor: f64,
    pub poor_centre: f64,
    pub good_mean: Option<f64>,
    pub poor_mean: Option<f64>,
    pub good_censored: usize,
    pub poor_censored: usize,
    pub feasible: bool,
    /// Summed distance of both means outside their bands.
    pub miss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub targets: CalibrationTargets,
    /// Grid points in search order.
    pub points: Vec<CalibrationPoint>,
    /// Index of the first feasible point.
    pub chosen: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub point: CalibrationPoint,
    /// Input model with the chosen floor and recentred Poor profile.
    pub model: ModelParams,
}

fn band_distance(mean: Option<f64>, band: [f64; 2]) -> f64 {
    match mean {
        None => f64::INFINITY,
        Some(m) if band[0] > band[1] => (m - band[0]).abs().max(f64::MIN_POSITIVE),
        Some(m) if m < band[0] => band[0] - m,
        Some(m) if m > band[1] => m - band[1],
        Some(_) => 0.0,
    }
}

/// Moves the Poor profile so its mid-point `netC` equals `centre`.
pub fn with_poor_centre(model: &ModelParams, centre: f64) -> ModelParams {
    let mut m = *model;
    let current = m.profiles.poor.netc_centre(&m.bounds, &m.netc_weights);
    m.profiles.poor = m.profiles.poor.recentered(centre - current, &m.bounds);
    m
}

fn baseline_mean(
    model: &ModelParams,
    base: &ExperimentConfig,
    profile: Condition,
    runs: usize,
) -> Result<(Option<f64>, usize)> {
    let cfg = ExperimentConfig {
        profile,
        mode: Mode::Baseline,
        p_m: 0.0,
        seeds: (0..runs as u64).collect(),
        ..base.clone()
    };
    let outputs = run_many(model, &cfg, &FallbackPredictor)?;
    let stats = summarize(
        outputs
            .iter()
            .flat_map(|o| o.records.iter())
            .filter(|r| r.role == Role::Honest)
            .map(|r| r.convergence_epoch),
    );
    Ok((stats.mean, stats.n_censored))
}

/// Scans `q_floors` (outer) by `poor_centres` (inner) and marks the first
/// point whose Good and Poor baseline means both fall in their bands.
pub fn calibrate(
    model: &ModelParams,
    base: &ExperimentConfig,
    targets: &CalibrationTargets,
) -> Result<CalibrationReport> {
    targets.validate()?;
    model.validate()?;
    base.validate()?;
    let mut points = Vec::new();
    let mut chosen = None;
    for &q_floor in &targets.q_floors {
        for &centre in &targets.poor_centres {
            let mut m = with_poor_centre(model, centre);
            m.trust.q_floor = q_floor;
            m.validate()?;
            let (good_mean, good_censored) =
                baseline_mean(&m, base, Condition::Good, targets.runs)?;
            let (poor_mean, poor_censored) =
                baseline_mean(&m, base, Condition::Poor, targets.runs)?;
            let miss = band_distance(good_mean, targets.good_band)
                + band_distance(poor_mean, targets.poor_band);
            let feasible = miss == 0.0;
            log::info!("calibration q_floor={q_floor} centre={centre}: good={good_mean:?} poor={poor_mean:?}");
            if feasible && chosen.is_none() {
                chosen = Some(points.len());
            }
            points.push(CalibrationPoint {
                q_floor,
                poor_centre: centre,
                good_mean,
                poor_mean,
                good_censored,
                poor_censored,
                feasible,
                miss,
            });
            if chosen.is_some() {
                return Ok(CalibrationReport {
                    targets: targets.clone(),
                    points,
                    chosen,
                });
            }
        }
    }
    Ok(CalibrationReport {
        targets: targets.clone(),
        points,
        chosen,
    })
}

impl CalibrationReport {
    /// The chosen configuration, or a failure naming the nearest misses.
    pub fn outcome(&self, model: &ModelParams) -> Result<CalibrationOutcome> {
        if let Some(i) = self.chosen {
            let point = self.points[i].clone();
            let mut m = with_poor_centre(model, point.poor_centre);
            m.trust.q_floor = point.q_floor;
            return Ok(CalibrationOutcome { point, model: m });
        }
        let mut nearest: Vec<&CalibrationPoint> = self.points.iter().collect();
        nearest.sort_by(|a, b| a.miss.total_cmp(&b.miss));
        let fmt = |m: Option<f64>| m.map_or("censored".to_string(), |v| format!("{v:.2}"));
        let listed: Vec<String> = nearest
            .iter()
            .take(3)
            .map(|p| {
                format!(
                    "q_floor={} centre={} good={} poor={}",
                    p.q_floor,
                    p.poor_centre,
                    fmt(p.good_mean),
                    fmt(p.poor_mean)
                )
            })
            .collect();
        Err(Error::Calibration(format!(
            "no grid point puts Good in [{}, {}] and Poor in [{}, {}]; nearest: {}",
            self.targets.good_band[0],
            self.targets.good_band[1],
            self.targets.poor_band[0],
            self.targets.poor_band[1],
            listed.join("; ")
        )))
    }
}
