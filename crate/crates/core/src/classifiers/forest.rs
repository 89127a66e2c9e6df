//! Random forest of Gini-impurity decision trees over bootstrap samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_both_classes, ClassifierError};
use crate::features::FeatureMatrix;
use crate::rng::SplitMix64;

/// Arena node; children refer to indices within the owning tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Training sample counts per class at this leaf.
        counts: [u32; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Vote of one tree: leaf majority, tie to class 0.
    pub fn vote(&self, x: &[f64]) -> u8 {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { counts } => {
                    return if counts[1] > counts[0] { 1 } else { 0 };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features drawn per split; defaults to ceil(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 16,
            min_leaf: 1,
            features_per_split: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: Vec<Tree>,
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub dim: usize,
}

fn gini(counts: [u32; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / total;
    let p1 = counts[1] as f64 / total;
    1.0 - p0 * p0 - p1 * p1
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [u8],
    max_depth: usize,
    min_leaf: usize,
    features_per_split: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, samples: &[usize]) -> [u32; 2] {
        let mut counts = [0u32; 2];
        for &i in samples {
            counts[self.y[i] as usize] += 1;
        }
        counts
    }

    /// Distinct features drawn by partial Fisher-Yates; order of draws is
    /// the tie-break order between equally good splits.
    fn draw_features(&self, rng: &mut SplitMix64) -> Vec<usize> {
        let d = self.x.n_cols();
        let m = self.features_per_split.min(d);
        let mut pool: Vec<usize> = (0..d).collect();
        let mut drawn = Vec::with_capacity(m);
        for k in 0..m {
            let j = k + rng.index(d - k);
            pool.swap(k, j);
            drawn.push(pool[k]);
        }
        drawn
    }

    /// Best (feature, threshold, partition) by Gini impurity reduction,
    /// thresholds at midpoints between adjacent distinct sorted values.
    fn best_split(
        &self,
        samples: &[usize],
        rng: &mut SplitMix64,
    ) -> Option<(usize, f64, Vec<usize>, Vec<usize>)> {
        let parent_counts = self.class_counts(samples);
        let parent_gini = gini(parent_counts);
        let n = samples.len() as f64;
        let mut best: Option<(f64, usize, f64, usize, Vec<usize>)> = None;

        for feature in self.draw_features(rng) {
            let mut sorted: Vec<usize> = samples.to_vec();
            sorted.sort_by(|&a, &b| {
                self.x.row(a)[feature]
                    .partial_cmp(&self.x.row(b)[feature])
                    .expect("finite features")
                    .then(a.cmp(&b))
            });
            let mut left_counts = [0u32; 2];
            for k in 0..sorted.len() - 1 {
                left_counts[self.y[sorted[k]] as usize] += 1;
                let v_here = self.x.row(sorted[k])[feature];
                let v_next = self.x.row(sorted[k + 1])[feature];
                if v_here == v_next {
                    continue;
                }
                let left_n = k + 1;
                let right_n = sorted.len() - left_n;
                if left_n < self.min_leaf || right_n < self.min_leaf {
                    continue;
                }
                let right_counts = [
                    parent_counts[0] - left_counts[0],
                    parent_counts[1] - left_counts[1],
                ];
                let weighted = (left_n as f64 / n) * gini(left_counts)
                    + (right_n as f64 / n) * gini(right_counts);
                let gain = parent_gini - weighted;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.0) {
                    let threshold = (v_here + v_next) / 2.0;
                    best = Some((gain, feature, threshold, left_n, sorted.clone()));
                }
            }
        }

        best.map(|(_, feature, threshold, left_n, sorted)| {
            let right = sorted[left_n..].to_vec();
            let mut left = sorted;
            left.truncate(left_n);
            (feature, threshold, left, right)
        })
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize, rng: &mut SplitMix64) -> usize {
        let counts = self.class_counts(&samples);
        let pure = counts[0] == 0 || counts[1] == 0;
        if depth >= self.max_depth || pure || samples.len() < 2 * self.min_leaf {
            self.nodes.push(TreeNode::Leaf { counts });
            return self.nodes.len() - 1;
        }
        match self.best_split(&samples, rng) {
            Some((feature, threshold, left_samples, right_samples)) => {
                let index = self.nodes.len();
                self.nodes.push(TreeNode::Internal {
                    feature,
                    threshold,
                    left: 0,
                    right: 0,
                });
                let left = self.build(left_samples, depth + 1, rng);
                let right = self.build(right_samples, depth + 1, rng);
                if let TreeNode::Internal {
                    left: l, right: r, ..
                } = &mut self.nodes[index]
                {
                    *l = left;
                    *r = right;
                }
                index
            }
            None => {
                self.nodes.push(TreeNode::Leaf { counts });
                self.nodes.len() - 1
            }
        }
    }
}

fn fit_tree(x: &FeatureMatrix, y: &[u8], config: &ForestConfig, tree_seed: u64) -> Tree {
    let mut rng = SplitMix64::new(tree_seed);
    let n = x.n_rows();
    let bootstrap: Vec<usize> = (0..n).map(|_| rng.index(n)).collect();
    let d = x.n_cols();
    let default_m = (d as f64).sqrt().ceil() as usize;
    let mut builder = TreeBuilder {
        x,
        y,
        max_depth: config.max_depth,
        min_leaf: config.min_leaf.max(1),
        features_per_split: config.features_per_split.unwrap_or(default_m).max(1),
        nodes: Vec::new(),
    };
    builder.build(bootstrap, 0, &mut rng);
    Tree {
        nodes: builder.nodes,
    }
}

/// Train `n_trees` trees, each on a bootstrap sample drawn from its own
/// seeded stream, so training parallelizes per tree without changing the
/// result.
pub fn fit_random_forest(
    x: &FeatureMatrix,
    y: &[u8],
    config: &ForestConfig,
) -> Result<ForestParams, ClassifierError> {
    check_both_classes(y)?;
    if x.n_rows() < 2 {
        return Err(ClassifierError::Empty);
    }
    assert_eq!(x.n_rows(), y.len(), "feature rows must align with labels");
    let seeds: Vec<u64> = (0..config.n_trees)
        .map(|i| SplitMix64::child_seed(config.seed, i as u64))
        .collect();
    let trees: Vec<Tree> = seeds
        .par_iter()
        .map(|&tree_seed| fit_tree(x, y, config, tree_seed))
        .collect();
    Ok(ForestParams {
        trees,
        n_trees: config.n_trees,
        max_depth: config.max_depth,
        seed: config.seed,
        dim: x.n_cols(),
    })
}

/// Majority vote over trees; the returned fraction of trees voting 1 is
/// the ranking score. A tied vote goes to class 0.
pub fn predict_forest(params: &ForestParams, x: &[f64]) -> Result<(u8, f64), ClassifierError> {
    if x.len() != params.dim {
        return Err(ClassifierError::DimMismatch {
            expected: params.dim,
            got: x.len(),
        });
    }
    let votes = params.trees.iter().filter(|t| t.vote(x) == 1).count();
    let fraction = votes as f64 / params.trees.len() as f64;
    let label = if fraction > 0.5 { 1 } else { 0 };
    Ok((label, fraction))
}
