//! The three experiment families: convergence per channel profile,
//! bad-mouthing resilience over a malicious-ratio sweep, and scalability
//! over network sizes.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{run, ConvergenceRecord, ExperimentConfig, Mode, ModelParams, Role, RunOutput};
use crate::error::Result;
use crate::qos::Condition;
use crate::report::{summarize, GroupStats};
use crate::tca::ConvergencePredictor;

/// Runs every seed of `cfg` (in parallel) and returns outputs in seed order.
pub fn run_many(
    model: &ModelParams,
    cfg: &ExperimentConfig,
    predictor: &dyn ConvergencePredictor,
) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    cfg.seeds
        .par_iter()
        .map(|&s| run(model, cfg, s, predictor))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group_key: String,
    pub mode: Mode,
    /// Honest-node convergence statistics.
    pub stats: GroupStats,
    /// Fraction of all nodes ending in their role's band.
    pub classification_accuracy: f64,
    pub honest_accuracy: f64,
    pub malicious_accuracy: Option<f64>,
    /// Mean wall-clock per run in milliseconds. Not reproducible.
    pub wall_ms_per_run: f64,
}

/// Runs of one `(group, mode)` cell, in seed order.
pub struct GroupRuns {
    pub key: String,
    pub mode: Mode,
    pub runs: Vec<RunOutput>,
}

#[derive(Default)]
pub struct ExperimentOutput {
    /// Cells in execution order.
    pub groups: Vec<GroupRuns>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    fn absorb(
        &mut self,
        key: String,
        cfg: &ExperimentConfig,
        model: &ModelParams,
        runs: Vec<RunOutput>,
        wall_ms: f64,
    ) {
        let n_runs = runs.len().max(1) as f64;
        let records: Vec<ConvergenceRecord> = runs
            .iter()
            .flat_map(|r| r.records.iter().cloned())
            .collect();
        self.summary.push(summary_row(
            &key,
            cfg.mode,
            &records,
            model,
            wall_ms / n_runs,
        ));
        self.groups.push(GroupRuns {
            key,
            mode: cfg.mode,
            runs,
        });
    }

    pub fn records(&self) -> impl Iterator<Item = &ConvergenceRecord> {
        self.groups
            .iter()
            .flat_map(|g| g.runs.iter().flat_map(|r| r.records.iter()))
    }
}

fn fraction(records: &[&ConvergenceRecord], model: &ModelParams) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let ok = records
        .iter()
        .filter(|r| r.correctly_classified(&model.trust))
        .count();
    Some(ok as f64 / records.len() as f64)
}

pub fn summary_row(
    key: &str,
    mode: Mode,
    records: &[ConvergenceRecord],
    model: &ModelParams,
    wall_ms: f64,
) -> SummaryRow {
    let honest: Vec<&ConvergenceRecord> =
        records.iter().filter(|r| r.role == Role::Honest).collect();
    let malicious: Vec<&ConvergenceRecord> =
        records.iter().filter(|r| r.role.is_malicious()).collect();
    let all: Vec<&ConvergenceRecord> = records.iter().collect();
    SummaryRow {
        group_key: key.to_string(),
        mode,
        stats: summarize(honest.iter().map(|r| r.convergence_epoch)),
        classification_accuracy: fraction(&all, model).unwrap_or(0.0),
        honest_accuracy: fraction(&honest, model).unwrap_or(0.0),
        malicious_accuracy: fraction(&malicious, model),
        wall_ms_per_run: wall_ms,
    }
}

fn timed_runs(
    model: &ModelParams,
    cfg: &ExperimentConfig,
    predictor: &dyn ConvergencePredictor,
) -> Result<(Vec<RunOutput>, f64)> {
    let start = Instant::now();
    let runs = run_many(model, cfg, predictor)?;
    Ok((runs, start.elapsed().as_secs_f64() * 1e3))
}

/// Honest-node convergence per profile and mode.
pub fn experiment_convergence(
    model: &ModelParams,
    base: &ExperimentConfig,
    profiles: &[Condition],
    modes: &[Mode],
    predictor: &dyn ConvergencePredictor,
) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    for &profile in profiles {
        for &mode in modes {
            let cfg = ExperimentConfig {
                profile,
                mode,
                ..base.clone()
            };
            let (runs, ms) = timed_runs(model, &cfg, predictor)?;
            out.absorb(profile.to_string(), &cfg, model, runs, ms);
        }
    }
    Ok(out)
}

/// Convergence and final classification over a malicious-ratio sweep.
pub fn experiment_badmouthing(
    model: &ModelParams,
    base: &ExperimentConfig,
    p_m_sweep: &[f64],
    modes: &[Mode],
    predictor: &dyn ConvergencePredictor,
) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    for &p_m in p_m_sweep {
        for &mode in modes {
            let cfg = ExperimentConfig {
                p_m,
                mode,
                ..base.clone()
            };
            let (runs, ms) = timed_runs(model, &cfg, predictor)?;
            out.absorb(format!("p_m={p_m}"), &cfg, model, runs, ms);
        }
    }
    Ok(out)
}

/// Convergence and wall-clock over network sizes.
pub fn experiment_scalability(
    model: &ModelParams,
    base: &ExperimentConfig,
    sizes: &[usize],
    modes: &[Mode],
    predictor: &dyn ConvergencePredictor,
) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    for &n_nodes in sizes {
        for &mode in modes {
            let cfg = ExperimentConfig {
                n_nodes,
                mode,
                ..base.clone()
            };
            let (runs, ms) = timed_runs(model, &cfg, predictor)?;
            out.absorb(format!("n={n_nodes}"), &cfg, model, runs, ms);
        }
    }
    Ok(out)
}
