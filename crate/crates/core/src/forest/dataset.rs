//! Labelled examples from baseline single-node episodes.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureVector, LabeledExample, FEATURE_NAMES, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::qos::{sample_profile, Condition};
use crate::sim::{honest_episode, ModelParams};
use crate::tca::{ConvergencePrediction, NUM_CLASSES};
use crate::trust::TrustState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_samples: usize,
    /// Relative weights of Good, Medium and Poor episodes.
    pub profile_mix: [f64; 3],
    pub epochs_cap: u32,
    pub k_stable: u32,
    /// Fraction of examples used for training; the rest is held out.
    pub train_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            profile_mix: [1.0, 1.0, 1.0],
            epochs_cap: 32,
            k_stable: 3,
            train_fraction: 0.8,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("dataset.n_samples", "must be >= 1"));
        }
        if self.profile_mix.iter().any(|w| !w.is_finite() || *w < 0.0)
            || self.profile_mix.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::invalid(
                "dataset.profile_mix",
                "weights must be >= 0 with a positive sum",
            ));
        }
        if self.epochs_cap == 0 || self.k_stable == 0 {
            return Err(Error::invalid(
                "dataset.epochs_cap",
                "epochs_cap and k_stable must be >= 1",
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(
                "dataset.train_fraction",
                "must lie in (0, 1)",
            ));
        }
        Ok(())
    }
}

fn pick_profile<R: Rng + ?Sized>(mix: &[f64; 3], rng: &mut R) -> Condition {
    let total: f64 = mix.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (w, c) in mix.iter().zip(Condition::ALL) {
        if u < *w {
            return c;
        }
        u -= w;
    }
    Condition::Poor
}

/// One example per episode: random profile, random admission state, a fresh
/// channel sample, then the baseline chain run to convergence. Episodes that
/// never converge within the cap are labelled class 4.
///
/// Example `i` draws from its own ChaCha stream, so the output does not
/// depend on thread scheduling.
pub fn generate_dataset(
    model: &ModelParams,
    cfg: &DatasetConfig,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    cfg.validate()?;
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let condition = pick_profile(&cfg.profile_mix, &mut rng);
            let profile = model.profiles.get(condition);
            let initial = TrustState::from_index(rng.gen_range(0..=10))?;
            let first = sample_profile(profile, None, &mut rng);
            let ep = honest_episode(
                model,
                profile,
                first,
                initial,
                cfg.epochs_cap,
                cfg.k_stable,
                &mut rng,
            )?;
            Ok(LabeledExample {
                features: ep.features,
                class_id: ConvergencePrediction::class_of_epoch(ep.convergence_epoch),
            })
        })
        .collect()
}

/// Per-class shuffle and split; returns `(train, test)`.
pub fn stratified_split(
    data: &[LabeledExample],
    train_fraction: f64,
    seed: u64,
) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 1..=NUM_CLASSES as u8 {
        let mut members: Vec<LabeledExample> = data
            .iter()
            .filter(|e| e.class_id == class)
            .copied()
            .collect();
        members.shuffle(&mut rng);
        let cut = (members.len() as f64 * train_fraction).round() as usize;
        test.extend_from_slice(&members[cut..]);
        members.truncate(cut);
        train.extend(members);
    }
    (train, test)
}

pub fn write_dataset_csv(path: &Path, data: &[LabeledExample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.push("class_id");
    w.write_record(&header)?;
    for e in data {
        let mut row: Vec<String> = e
            .features
            .to_array()
            .iter()
            .map(|v| v.to_string())
            .collect();
        row.push(e.class_id.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<LabeledExample>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain(["class_id"]).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::invalid(
            path.display().to_string(),
            format!("header must be {}", expected.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| {
                Error::invalid(
                    format!("{}:{}", path.display(), line + 2),
                    format!("bad number `{}`", &rec[i]),
                )
            })
        };
        let mut v = [0.0; NUM_FEATURES];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = parse(i)?;
        }
        let features = FeatureVector::from_array(v);
        features.validate()?;
        let class_id: u8 = rec[NUM_FEATURES].parse().map_err(|_| {
            Error::invalid(format!("{}:{}", path.display(), line + 2), "bad class_id")
        })?;
        if !(1..=NUM_CLASSES as u8).contains(&class_id) {
            return Err(Error::invalid(
                format!("{}:{}", path.display(), line + 2),
                "class_id outside [1, 4]",
            ));
        }
        out.push(LabeledExample { features, class_id });
    }
    Ok(out)
}
