use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_lowest, ForestParams, LabeledExample, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::forest::FeatureVector;
use crate::tca::NUM_CLASSES;

/// Gains at or below this are treated as no improvement.
pub const MIN_GAIN: f64 = 1e-12;

/// `1 - sum (c_i / n)^2`.
pub fn gini(class_counts: &[u32]) -> Result<f64> {
    let n: u64 = class_counts.iter().map(|&c| u64::from(c)).sum();
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let n = n as f64;
    Ok(1.0
        - class_counts
            .iter()
            .map(|&c| (f64::from(c) / n).powi(2))
            .sum::<f64>())
}

fn gini_unchecked(counts: &[u32; NUM_CLASSES], n: u32) -> f64 {
    let n = f64::from(n);
    1.0 - counts
        .iter()
        .map(|&c| (f64::from(c) / n).powi(2))
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn histogram(examples: &[LabeledExample]) -> [u32; NUM_CLASSES] {
    let mut h = [0u32; NUM_CLASSES];
    for e in examples {
        h[usize::from(e.class_id) - 1] += 1;
    }
    h
}

/// Best Gini split over `features`, scanning the midpoints between
/// consecutive distinct values. Both children must hold at least `min_leaf`
/// examples. Ties go to the lower feature index, then the lower threshold.
/// Samples with `x <= threshold` go left.
pub fn best_split(
    examples: &[LabeledExample],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    if examples.is_empty() || features.is_empty() {
        return None;
    }
    let n = examples.len() as u32;
    let parent_counts = histogram(examples);
    let parent = gini_unchecked(&parent_counts, n);
    let mut order: Vec<usize> = features.to_vec();
    order.sort_unstable();
    order.dedup();

    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(examples.len());
    for &f in &order {
        pairs.clear();
        pairs.extend(examples.iter().map(|e| (e.features.get(f), e.class_id)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u32; NUM_CLASSES];
        let mut right = parent_counts;
        for i in 0..pairs.len() - 1 {
            let c = usize::from(pairs[i].1) - 1;
            left[c] += 1;
            right[c] -= 1;
            let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
            if lo == hi {
                continue;
            }
            let nl = i as u32 + 1;
            let nr = n - nl;
            if (nl as usize) < min_leaf || (nr as usize) < min_leaf {
                continue;
            }
            let weighted = (f64::from(nl) * gini_unchecked(&left, nl)
                + f64::from(nr) * gini_unchecked(&right, nr))
                / f64::from(n);
            let gain = parent - weighted;
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Flattened tree node. Internal nodes carry a split, leaves a histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Split feature, `None` for leaves.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub histogram: [u32; NUM_CLASSES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf(histogram: [u32; NUM_CLASSES]) -> Self {
        Self {
            nodes: vec![TreeNode {
                feature: None,
                threshold: 0.0,
                left: 0,
                right: 0,
                histogram,
            }],
        }
    }

    pub fn grow<R: Rng + ?Sized>(
        examples: &[LabeledExample],
        params: &ForestParams,
        rng: &mut R,
    ) -> Self {
        let mut tree = DecisionTree { nodes: Vec::new() };
        let mut owned = examples.to_vec();
        tree.grow_node(&mut owned, 0, params, rng);
        tree
    }

    fn grow_node<R: Rng + ?Sized>(
        &mut self,
        examples: &mut [LabeledExample],
        depth: usize,
        params: &ForestParams,
        rng: &mut R,
    ) -> usize {
        let id = self.nodes.len();
        let hist = histogram(examples);
        self.nodes.push(TreeNode {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            histogram: hist,
        });
        let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= params.max_depth || examples.len() < 2 * params.min_leaf {
            return id;
        }
        let subset = index::sample(rng, NUM_FEATURES, params.features_per_split).into_vec();
        let Some(split) = best_split(examples, &subset, params.min_leaf) else {
            return id;
        };
        let mid = partition(examples, split.feature, split.threshold);
        let (l, r) = examples.split_at_mut(mid);
        let left = self.grow_node(l, depth + 1, params, rng);
        let right = self.grow_node(r, depth + 1, params, rng);
        let node = &mut self.nodes[id];
        node.feature = Some(split.feature);
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        id
    }

    fn leaf_for(&self, features: &FeatureVector) -> &TreeNode {
        let mut node = &self.nodes[0];
        while let Some(f) = node.feature {
            node = if features.get(f) <= node.threshold {
                &self.nodes[node.left]
            } else {
                &self.nodes[node.right]
            };
        }
        node
    }

    pub fn predict(&self, features: &FeatureVector) -> u8 {
        let h = self.leaf_for(features).histogram.map(|c| c as usize);
        argmax_lowest(&h) as u8 + 1
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i].feature {
                None => 0,
                Some(_) => 1 + walk(t, t.nodes[i].left).max(walk(t, t.nodes[i].right)),
            }
        }
        walk(self, 0)
    }

    /// Non-empty leaves, two in-range children per internal node, bounded depth.
    pub fn check_structure(&self, max_depth: usize) -> std::result::Result<(), String> {
        if self.nodes.is_empty() {
            return Err("no nodes".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            if seen[i] {
                return Err(format!("node {i} reachable twice"));
            }
            seen[i] = true;
            let node = &self.nodes[i];
            match node.feature {
                None => {
                    if node.histogram.iter().all(|&c| c == 0) {
                        return Err(format!("leaf {i} has an empty histogram"));
                    }
                }
                Some(f) => {
                    if f >= NUM_FEATURES {
                        return Err(format!("node {i} splits on unknown feature {f}"));
                    }
                    if d >= max_depth {
                        return Err(format!("node {i} exceeds max depth {max_depth}"));
                    }
                    for c in [node.left, node.right] {
                        if c <= i || c >= self.nodes.len() {
                            return Err(format!("node {i} has invalid child {c}"));
                        }
                        stack.push((c, d + 1));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Moves examples with `x <= threshold` to the front; returns the count.
fn partition(examples: &mut [LabeledExample], feature: usize, threshold: f64) -> usize {
    let mut mid = 0;
    for i in 0..examples.len() {
        if examples[i].features.get(feature) <= threshold {
            examples.swap(i, mid);
            mid += 1;
        }
    }
    mid
}
