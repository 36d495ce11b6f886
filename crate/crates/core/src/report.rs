//! Summary statistics and CSV output.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::forest::EvalReport;
use crate::qos::QosSample;
use crate::sim::{ExperimentOutput, SummaryRow};

/// Mean, sample standard deviation and 95% normal-approximation half-width
/// over converged records. Never-converged records are counted in
/// `n_censored` and kept out of the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupStats {
    pub n: usize,
    pub n_censored: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub ci95: Option<f64>,
}

pub fn summarize<I: IntoIterator<Item = Option<u32>>>(epochs: I) -> GroupStats {
    let mut values = Vec::new();
    let mut censored = 0;
    for e in epochs {
        match e {
            Some(v) => values.push(f64::from(v)),
            None => censored += 1,
        }
    }
    let n = values.len();
    if n == 0 {
        return GroupStats {
            n: 0,
            n_censored: censored,
            mean: None,
            std: None,
            ci95: None,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    GroupStats {
        n,
        n_censored: censored,
        mean: Some(mean),
        std: Some(std),
        ci95: Some(1.96 * std / (n as f64).sqrt()),
    }
}

pub const RECORDS_HEADER: [&str; 7] = [
    "seed",
    "node_id",
    "role",
    "profile",
    "mode",
    "convergence_epoch",
    "final_state",
];
pub const SUMMARY_HEADER: [&str; 6] = [
    "group_key",
    "mode",
    "mean_ct",
    "std_ct",
    "n",
    "classification_accuracy",
];
pub const DIAGNOSTICS_HEADER: [&str; 5] = ["epoch", "community", "netc", "pc", "bf"];
pub const ALERTS_HEADER: [&str; 4] = ["epoch", "community", "node_id", "trust_at_isolation"];
pub const QOS_TRACE_HEADER: [&str; 8] = [
    "epoch",
    "snr_db",
    "pl_frac",
    "jitter_ms",
    "latency_ms",
    "throughput_mbps",
    "sinr_db",
    "netc",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(fs::File::create(path)?))
}

/// Writes `records.csv`, `summary.csv`, `summary_extended.csv`,
/// `diagnostics.csv`, `alerts.csv` and `runs_index.csv` into `dir`.
/// Wall-clock figures go to `timing.csv`, the only non-reproducible file.
pub fn write_experiment(dir: &Path, out: &ExperimentOutput) -> Result<()> {
    let mut records = writer(&dir.join("records.csv"))?;
    let mut diagnostics = writer(&dir.join("diagnostics.csv"))?;
    let mut alerts = writer(&dir.join("alerts.csv"))?;
    let mut index = writer(&dir.join("runs_index.csv"))?;
    records.write_record(RECORDS_HEADER)?;
    diagnostics.write_record(DIAGNOSTICS_HEADER)?;
    alerts.write_record(ALERTS_HEADER)?;
    index.write_record([
        "group_key",
        "mode",
        "seed",
        "records_first_row",
        "records_rows",
        "diagnostics_first_row",
        "diagnostics_rows",
        "alerts_first_row",
        "alerts_rows",
    ])?;
    let (mut n_rec, mut n_diag, mut n_alert) = (0usize, 0usize, 0usize);
    for g in &out.groups {
        for run in &g.runs {
            index.write_record([
                g.key.clone(),
                g.mode.to_string(),
                run.seed.to_string(),
                n_rec.to_string(),
                run.records.len().to_string(),
                n_diag.to_string(),
                run.diagnostics.len().to_string(),
                n_alert.to_string(),
                run.alerts.len().to_string(),
            ])?;
            for r in &run.records {
                records.write_record([
                    r.seed.to_string(),
                    r.node_id.to_string(),
                    r.role.to_string(),
                    r.profile.to_string(),
                    r.mode.to_string(),
                    opt(r.convergence_epoch),
                    r.final_state.to_string(),
                ])?;
            }
            for d in &run.diagnostics {
                diagnostics.write_record([
                    d.epoch.to_string(),
                    d.community.to_string(),
                    d.netc.to_string(),
                    opt(d.pc),
                    d.bf.to_string(),
                ])?;
            }
            for a in &run.alerts {
                alerts.write_record([
                    a.epoch.to_string(),
                    a.community_id.to_string(),
                    a.node_id.to_string(),
                    a.trust_at_isolation.to_string(),
                ])?;
            }
            n_rec += run.records.len();
            n_diag += run.diagnostics.len();
            n_alert += run.alerts.len();
        }
    }
    records.flush()?;
    diagnostics.flush()?;
    alerts.flush()?;
    index.flush()?;
    write_summary(dir, &out.summary)
}

/// `summary.csv`, `summary_extended.csv` and `timing.csv`.
pub fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut summary = writer(&dir.join("summary.csv"))?;
    let mut extended = writer(&dir.join("summary_extended.csv"))?;
    let mut timing = writer(&dir.join("timing.csv"))?;
    summary.write_record(SUMMARY_HEADER)?;
    extended.write_record([
        "group_key",
        "mode",
        "mean_ct",
        "std_ct",
        "ci95",
        "n",
        "n_censored",
        "classification_accuracy",
        "honest_accuracy",
        "malicious_accuracy",
    ])?;
    timing.write_record(["group_key", "mode", "wall_ms_per_run"])?;
    for r in rows {
        let s = &r.stats;
        summary.write_record([
            r.group_key.clone(),
            r.mode.to_string(),
            opt(s.mean),
            opt(s.std),
            s.n.to_string(),
            r.classification_accuracy.to_string(),
        ])?;
        extended.write_record([
            r.group_key.clone(),
            r.mode.to_string(),
            opt(s.mean),
            opt(s.std),
            opt(s.ci95),
            s.n.to_string(),
            s.n_censored.to_string(),
            r.classification_accuracy.to_string(),
            r.honest_accuracy.to_string(),
            opt(r.malicious_accuracy),
        ])?;
        timing.write_record([
            r.group_key.clone(),
            r.mode.to_string(),
            format!("{:.3}", r.wall_ms_per_run),
        ])?;
    }
    summary.flush()?;
    extended.flush()?;
    timing.flush()?;
    Ok(())
}

pub fn write_qos_trace(path: &Path, trace: &[(QosSample, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(QOS_TRACE_HEADER)?;
    for (epoch, (q, netc)) in trace.iter().enumerate() {
        w.write_record([
            epoch.to_string(),
            q.snr_db.to_string(),
            q.packet_loss.to_string(),
            q.jitter_ms.to_string(),
            q.latency_ms.to_string(),
            q.throughput_mbps.to_string(),
            q.sinr_db.to_string(),
            netc.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `eval.csv` (one metric per row plus the confusion cells) and `eval.txt`.
pub fn write_eval(dir: &Path, report: &EvalReport) -> Result<()> {
    let mut w = writer(&dir.join("eval.csv"))?;
    w.write_record(["metric", "value"])?;
    w.write_record(["accuracy".to_string(), report.accuracy.to_string()])?;
    w.write_record(["macro_f1".to_string(), report.macro_f1.to_string()])?;
    for (t, row) in report.confusion.iter().enumerate() {
        for (p, c) in row.iter().enumerate() {
            w.write_record([format!("confusion_{}_{}", t + 1, p + 1), c.to_string()])?;
        }
    }
    w.flush()?;
    fs::write(dir.join("eval.txt"), report.to_text())?;
    Ok(())
}

/// Fixed-width table for standard output.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let mut s = format!(
        "{:<14} {:<9} {:>8} {:>8} {:>8} {:>7} {:>9} {:>8} {:>8}\n",
        "group", "mode", "mean_ct", "std_ct", "ci95", "n", "censored", "acc_hon", "acc_mal"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<14} {:<9} {:>8} {:>8} {:>8} {:>7} {:>9} {:>8.3} {:>8}\n",
            r.group_key,
            r.mode.to_string(),
            fmt(r.stats.mean),
            fmt(r.stats.std),
            fmt(r.stats.ci95),
            r.stats.n,
            r.stats.n_censored,
            r.honest_accuracy,
            fmt(r.malicious_accuracy),
        ));
    }
    s
}
