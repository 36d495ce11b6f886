//! Random-forest convergence-class predictor.
//!
//! CART trees grown on bootstrap samples with Gini impurity and a random
//! feature subset per node, combined by majority vote.

mod dataset;
mod eval;
mod tree;

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tca::{ConvergencePredictor, NUM_CLASSES};

pub use dataset::{
    generate_dataset, read_dataset_csv, stratified_split, write_dataset_csv, DatasetConfig,
};
pub use eval::{evaluate, EvalReport};
pub use tree::{best_split, gini, DecisionTree, Split, TreeNode};

pub const NUM_FEATURES: usize = 9;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "snr_n",
    "pl_n",
    "j_n",
    "l_n",
    "t_n",
    "sinr_n",
    "netc",
    "initial_trust",
    "behavior_score",
];

/// Model inputs: the normalized channel, `netC`, the node's admission trust
/// and its observed behavior score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub snr_n: f64,
    pub pl_n: f64,
    pub j_n: f64,
    pub l_n: f64,
    pub t_n: f64,
    pub sinr_n: f64,
    pub netc: f64,
    pub initial_trust: f64,
    pub behavior_score: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.snr_n,
            self.pl_n,
            self.j_n,
            self.l_n,
            self.t_n,
            self.sinr_n,
            self.netc,
            self.initial_trust,
            self.behavior_score,
        ]
    }

    pub fn from_array(v: [f64; NUM_FEATURES]) -> Self {
        Self {
            snr_n: v[0],
            pl_n: v[1],
            j_n: v[2],
            l_n: v[3],
            t_n: v[4],
            sinr_n: v[5],
            netc: v[6],
            initial_trust: v[7],
            behavior_score: v[8],
        }
    }

    pub fn get(&self, feature: usize) -> f64 {
        self.to_array()[feature]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in FEATURE_NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    format!("features.{name}"),
                    "must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub class_id: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            min_leaf: 5,
            // ceil(sqrt(9))
            features_per_split: 3,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("forest.n_trees", "must be >= 1"));
        }
        if self.min_leaf == 0 {
            return Err(Error::invalid("forest.min_leaf", "must be >= 1"));
        }
        if !(1..=NUM_FEATURES).contains(&self.features_per_split) {
            return Err(Error::invalid(
                "forest.features_per_split",
                "must lie in [1, 9]",
            ));
        }
        Ok(())
    }
}

pub const MODEL_FORMAT: &str = "iiot-trust-forest";
pub const MODEL_VERSION: u32 = 1;

/// Trained ensemble. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub format: String,
    pub version: u32,
    pub params: ForestParams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    /// Set when the training data carried a single class.
    pub degenerate: bool,
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    pub fn predict(&self, features: &FeatureVector) -> u8 {
        let mut votes = [0usize; NUM_CLASSES];
        for t in &self.trees {
            votes[usize::from(t.predict(features)) - 1] += 1;
        }
        argmax_lowest(&votes) as u8 + 1
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let forest: Forest = serde_json::from_str(&text)?;
        if forest.format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unexpected format `{}`",
                forest.format
            )));
        }
        if forest.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported version {}",
                forest.version
            )));
        }
        for (i, t) in forest.trees.iter().enumerate() {
            t.check_structure(forest.params.max_depth)
                .map_err(|e| Error::Model(format!("tree {i}: {e}")))?;
        }
        Ok(forest)
    }
}

impl ConvergencePredictor for Forest {
    fn predict_class(&self, features: &FeatureVector) -> u8 {
        self.predict(features)
    }
}

/// Index of the largest count; ties go to the lowest index.
pub(crate) fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Grows `n_trees` trees on bootstrap resamples of `dataset`.
///
/// Tree seeds are drawn up front from `seed`, so the result does not depend
/// on how tree growth is scheduled across threads.
pub fn train_forest(
    dataset: &[LabeledExample],
    params: &ForestParams,
    seed: u64,
) -> Result<Forest> {
    params.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("dataset", "is empty"));
    }
    if let Some(bad) = dataset
        .iter()
        .find(|e| !(1..=NUM_CLASSES as u8).contains(&e.class_id))
    {
        return Err(Error::invalid(
            "dataset.class_id",
            format!("{} outside [1, 4]", bad.class_id),
        ));
    }
    let first = dataset[0].class_id;
    let degenerate = dataset.iter().all(|e| e.class_id == first);
    let base = Forest {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        params: *params,
        seed,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        degenerate,
        trees: Vec::new(),
    };
    if degenerate {
        log::warn!("training data holds a single class ({first}); emitting a single-leaf forest");
        let mut hist = [0u32; NUM_CLASSES];
        hist[usize::from(first) - 1] = dataset.len() as u32;
        return Ok(Forest {
            trees: vec![DecisionTree::leaf(hist)],
            ..base
        });
    }
    if dataset.len() < 10 * params.min_leaf {
        return Err(Error::invalid(
            "dataset",
            format!(
                "needs at least {} examples for min_leaf = {}",
                10 * params.min_leaf,
                params.min_leaf
            ),
        ));
    }

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let tree_seeds: Vec<u64> = (0..params.n_trees).map(|_| master.gen()).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let sample: Vec<LabeledExample> = (0..dataset.len())
                .map(|_| dataset[rng.gen_range(0..dataset.len())])
                .collect();
            DecisionTree::grow(&sample, params, &mut rng)
        })
        .collect();
    Ok(Forest { trees, ..base })
}
