//! Command-line front end: flag handling, subcommand dispatch and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::forest::{
    evaluate, generate_dataset, read_dataset_csv, stratified_split, train_forest,
    write_dataset_csv, EvalReport, Forest, LabeledExample,
};
use crate::qos::generate_trace;
use crate::report::{summary_table, write_eval, write_experiment, write_qos_trace};
use crate::sim::{
    calibrate, experiment_badmouthing, experiment_convergence, experiment_scalability, run_many,
    summary_row, ExperimentOutput, GroupRuns, Mode,
};
use crate::tca::{ConvergencePredictor, FallbackPredictor, NUM_CLASSES};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "IIOT_TRUST_OUT";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "iiot-trust",
    version,
    about = "Hierarchical IIoT trust simulator with network-aware convergence acceleration"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GlobalArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// First seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of seeds per experiment cell.
    #[arg(long, global = true)]
    pub seeds: Option<u64>,
    /// Output directory (default: $IIOT_TRUST_OUT or ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Mode for `simulate`; experiments always compare both.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Trained forest file.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum ModeArg {
    Baseline,
    Tca,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::Tca => Mode::Tca,
        }
    }
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Run the configured experiment cell over the seed list.
    Simulate,
    /// Generate the labelled convergence dataset.
    Dataset,
    /// Train a forest on a dataset with a stratified hold-out split.
    Train {
        /// Dataset CSV (default: <out>/dataset.csv).
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score a forest on a labelled CSV.
    Evaluate {
        /// Labelled CSV (default: <out>/test.csv).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run one of the experiment families.
    Experiment {
        #[arg(value_enum)]
        which: Figure,
    },
    /// Search the evidence floor and Poor profile position for target bands.
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Figure {
    /// Convergence per channel profile.
    FigA,
    /// Bad-mouthing sweep.
    FigB,
    /// Scalability sweep.
    FigC,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub command: Command,
    pub flags: GlobalArgs,
    pub config_path: Option<PathBuf>,
    /// SHA-256 of the config file bytes (of the empty string without a file).
    pub config_sha256: String,
    /// Effective configuration after flag overrides.
    pub effective_config: String,
    pub seeds: Vec<u64>,
    pub model_path: Option<PathBuf>,
    pub model_sha256: Option<String>,
    pub out_dir: PathBuf,
    pub started_unix_ms: u128,
    pub finished_unix_ms: Option<u128>,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads the config named by the flags (or defaults) and applies overrides.
/// Returns the config and the raw file bytes.
pub fn resolve_config(g: &GlobalArgs) -> Result<(Config, Vec<u8>)> {
    let (mut cfg, raw) = match &g.config {
        Some(path) => {
            let text = Config::read_text(path)?;
            (Config::from_toml_str(&text)?, text.into_bytes())
        }
        None => (Config::default(), Vec::new()),
    };
    if let Some(s) = g.seed {
        cfg.experiment.seed = s;
    }
    if let Some(n) = g.seeds {
        let e = &mut cfg.experiment;
        e.seeds = n;
        e.fig_a.seeds = n;
        e.fig_b.seeds = n;
        e.fig_c.seeds = n;
    }
    if let Some(m) = g.mode {
        cfg.experiment.mode = m.into();
    }
    if let Some(m) = &g.model {
        cfg.experiment.model = Some(m.clone());
    }
    cfg.validate()?;
    Ok((cfg, raw))
}

pub fn out_dir(g: &GlobalArgs) -> PathBuf {
    g.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// The forest at `path`, or the rule-based fallback with a warning when the
/// path is unset or absent.
pub fn load_predictor(path: Option<&Path>) -> Result<Box<dyn ConvergencePredictor>> {
    match path {
        Some(p) if p.exists() => Ok(Box::new(Forest::load(p)?)),
        Some(p) => {
            log::warn!(
                "model file {} not found; using the fallback predictor",
                p.display()
            );
            Ok(Box::new(FallbackPredictor))
        }
        None => {
            log::warn!("no model given; using the fallback predictor");
            Ok(Box::new(FallbackPredictor))
        }
    }
}

/// Stratified split, training and held-out evaluation.
pub fn fit(
    cfg: &Config,
    data: &[LabeledExample],
    seed: u64,
) -> Result<(Forest, Vec<LabeledExample>, EvalReport)> {
    let (train, test) = stratified_split(data, cfg.dataset.train_fraction, seed);
    let forest = train_forest(&train, &cfg.forest, seed)?;
    if test.is_empty() {
        return Err(Error::invalid(
            "dataset.train_fraction",
            "leaves no held-out examples",
        ));
    }
    let report = evaluate(&forest, &test);
    Ok((forest, test, report))
}

/// Runs one subcommand and returns what it printed.
pub fn dispatch(cli: &Cli, args: &[String]) -> Result<String> {
    let (cfg, raw) = resolve_config(&cli.global)?;
    let out = out_dir(&cli.global);
    fs::create_dir_all(&out)?;

    let seeds = match &cli.command {
        Command::Experiment {
            which: Figure::FigA,
        } => cfg.seed_list(cfg.experiment.fig_a.seeds),
        Command::Experiment {
            which: Figure::FigB,
        } => cfg.seed_list(cfg.experiment.fig_b.seeds),
        Command::Experiment {
            which: Figure::FigC,
        } => cfg.seed_list(cfg.experiment.fig_c.seeds),
        Command::Simulate => cfg.seed_list(cfg.experiment.seeds),
        _ => vec![cfg.experiment.seed],
    };
    let model_path = match &cli.command {
        Command::Evaluate { .. } => Some(
            cfg.experiment
                .model
                .clone()
                .unwrap_or_else(|| out.join("model.json")),
        ),
        Command::Simulate | Command::Experiment { .. } => cfg.experiment.model.clone(),
        _ => None,
    };
    let model_sha256 = match &model_path {
        Some(p) if p.exists() => Some(sha256_hex(&fs::read(p)?)),
        _ => None,
    };
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        args: args.to_vec(),
        command: cli.command.clone(),
        flags: cli.global.clone(),
        config_path: cli.global.config.clone(),
        config_sha256: sha256_hex(&raw),
        effective_config: cfg.to_toml_string()?,
        seeds,
        model_path: model_path.clone(),
        model_sha256,
        out_dir: out.clone(),
        started_unix_ms: now_ms(),
        finished_unix_ms: None,
    };
    let manifest_path = out.join(MANIFEST_FILE);
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;

    let printed = run_command(&cli.command, &cfg, &out, model_path.as_deref())?;

    manifest.finished_unix_ms = Some(now_ms());
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(printed)
}

fn run_command(
    command: &Command,
    cfg: &Config,
    out: &Path,
    model_path: Option<&Path>,
) -> Result<String> {
    let model = cfg.model_params();
    let seed = cfg.experiment.seed;
    match command {
        Command::Simulate => {
            let predictor = load_predictor(model_path)?;
            let exp = cfg.experiment_config(cfg.experiment.seeds);
            let runs = run_many(&model, &exp, predictor.as_ref())?;
            let records: Vec<_> = runs
                .iter()
                .flat_map(|r| r.records.iter().cloned())
                .collect();
            let key = exp.profile.to_string();
            let row = summary_row(&key, exp.mode, &records, &model, 0.0);
            let result = ExperimentOutput {
                groups: vec![GroupRuns {
                    key,
                    mode: exp.mode,
                    runs,
                }],
                summary: vec![row],
            };
            write_experiment(out, &result)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = generate_trace(
                model.profiles.get(exp.profile),
                &model.bounds,
                &model.netc_weights,
                exp.epochs_cap as usize,
                &mut rng,
            )?;
            write_qos_trace(&out.join("qos_trace.csv"), &trace)?;
            Ok(summary_table(&result.summary))
        }
        Command::Dataset => {
            let data = generate_dataset(&model, &cfg.dataset, seed)?;
            let path = out.join("dataset.csv");
            write_dataset_csv(&path, &data)?;
            let mut hist = [0usize; NUM_CLASSES];
            for e in &data {
                hist[usize::from(e.class_id) - 1] += 1;
            }
            let mut s = format!("wrote {} examples to {}\n", data.len(), path.display());
            for (i, h) in hist.iter().enumerate() {
                s.push_str(&format!(
                    "  class {}  {:>6}  {:.3}\n",
                    i + 1,
                    h,
                    *h as f64 / data.len() as f64
                ));
            }
            Ok(s)
        }
        Command::Train { dataset } => {
            let path = dataset.clone().unwrap_or_else(|| out.join("dataset.csv"));
            let data = read_dataset_csv(&path)?;
            let (forest, test, report) = fit(cfg, &data, seed)?;
            forest.save(&out.join("model.json"))?;
            write_dataset_csv(&out.join("test.csv"), &test)?;
            write_eval(out, &report)?;
            let majority = majority_share(&test);
            Ok(format!(
                "trained {} trees on {} examples, held out {}\nmajority baseline {:.4}\n{}",
                forest.trees.len(),
                data.len() - test.len(),
                test.len(),
                majority,
                report.to_text()
            ))
        }
        Command::Evaluate { data } => {
            let model_file =
                model_path.ok_or_else(|| Error::MissingInput(out.join("model.json")))?;
            let forest = Forest::load(model_file)?;
            let path = data.clone().unwrap_or_else(|| out.join("test.csv"));
            let test = read_dataset_csv(&path)?;
            if test.is_empty() {
                return Err(Error::invalid("evaluate.data", "holds no examples"));
            }
            let report = evaluate(&forest, &test);
            write_eval(out, &report)?;
            Ok(report.to_text())
        }
        Command::Experiment { which } => {
            let predictor = load_predictor(model_path)?;
            let e = &cfg.experiment;
            let modes = [Mode::Baseline, Mode::Tca];
            let result = match which {
                Figure::FigA => {
                    let base = cfg.experiment_config(e.fig_a.seeds);
                    experiment_convergence(
                        &model,
                        &base,
                        &e.fig_a.profiles,
                        &modes,
                        predictor.as_ref(),
                    )?
                }
                Figure::FigB => {
                    let mut base = cfg.experiment_config(e.fig_b.seeds);
                    base.profile = e.fig_b.profile;
                    experiment_badmouthing(&model, &base, &e.fig_b.p_m, &modes, predictor.as_ref())?
                }
                Figure::FigC => {
                    let mut base = cfg.experiment_config(e.fig_c.seeds);
                    base.profile = e.fig_c.profile;
                    experiment_scalability(
                        &model,
                        &base,
                        &e.fig_c.sizes,
                        &modes,
                        predictor.as_ref(),
                    )?
                }
            };
            write_experiment(out, &result)?;
            Ok(summary_table(&result.summary))
        }
        Command::Calibrate => {
            let base = cfg.experiment_config(cfg.experiment.seeds);
            let report = calibrate(&model, &base, &cfg.calibration)?;
            write_calibration(out, &report)?;
            let mut s = calibration_table(&report);
            let outcome = report.outcome(&model)?;
            let mut calibrated = cfg.clone();
            calibrated.set_model(&outcome.model);
            let path = out.join("calibrated.toml");
            fs::write(&path, calibrated.to_toml_string()?)?;
            s.push_str(&format!(
                "chosen q_floor={} poor_centre={}; wrote {}\n",
                outcome.point.q_floor,
                outcome.point.poor_centre,
                path.display()
            ));
            Ok(s)
        }
    }
}

fn majority_share(data: &[LabeledExample]) -> f64 {
    let mut hist = [0usize; NUM_CLASSES];
    for e in data {
        hist[usize::from(e.class_id) - 1] += 1;
    }
    *hist.iter().max().unwrap_or(&0) as f64 / data.len().max(1) as f64
}

fn write_calibration(out: &Path, report: &crate::sim::CalibrationReport) -> Result<()> {
    let mut w = csv::Writer::from_path(out.join("calibration.csv"))?;
    w.write_record([
        "q_floor",
        "poor_centre",
        "good_mean",
        "poor_mean",
        "good_censored",
        "poor_censored",
        "feasible",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in &report.points {
        w.write_record([
            p.q_floor.to_string(),
            p.poor_centre.to_string(),
            opt(p.good_mean),
            opt(p.poor_mean),
            p.good_censored.to_string(),
            p.poor_censored.to_string(),
            p.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn calibration_table(report: &crate::sim::CalibrationReport) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let mut s = format!(
        "{:>8} {:>8} {:>9} {:>9} {:>9}\n",
        "q_floor", "centre", "good", "poor", "feasible"
    );
    for p in &report.points {
        s.push_str(&format!(
            "{:>8} {:>8} {:>9} {:>9} {:>9}\n",
            p.q_floor,
            p.poor_centre,
            fmt(p.good_mean),
            fmt(p.poor_mean),
            p.feasible
        ));
    }
    s
}
