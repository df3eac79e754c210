//! Random forest classifier: an ensemble of axis-aligned decision trees
//! fit on bootstrap resamples, each split chosen by Gini impurity decrease
//! over a random feature subset, predictions by majority vote.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{Classifier, FeatureMeta, LabeledDataset};
use crate::error::{Error, Result};

/// How many candidate features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    Sqrt,
    Log2,
    Fixed(usize),
}

impl FeaturesPerSplit {
    fn count(self, n_dims: usize) -> usize {
        let m = match self {
            FeaturesPerSplit::Sqrt => (n_dims as f64).sqrt().floor() as usize,
            FeaturesPerSplit::Log2 => (n_dims as f64).log2().floor() as usize,
            FeaturesPerSplit::Fixed(m) => m,
        };
        m.clamp(1, n_dims)
    }
}

/// Forest hyperparameters. The per-tree RNG stream is derived as
/// `seed + tree_index`, so training is reproducible regardless of
/// evaluation order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// None grows trees to purity.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
    /// Disabled only for the plain-decision-tree reduction.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParam {
                name: "n_trees",
                reason: "must be at least 1".into(),
            });
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParam {
                name: "min_samples_leaf",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Tree node; children are indices into the tree's node array.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Class histogram of the training samples reaching this leaf.
        counts: Vec<u32>,
    },
}

/// One decision tree; node 0 is the root, `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Grow a tree on `indices` into the dataset with CART-style greedy
    /// Gini splits.
    pub fn fit(
        ds: &LabeledDataset,
        indices: &[usize],
        params: &ForestParams,
        rng: &mut ChaCha20Rng,
    ) -> DecisionTree {
        let mut tree = DecisionTree { nodes: Vec::new() };
        let mut work = indices.to_vec();
        tree.grow(ds, &mut work, 0, params, rng);
        tree
    }

    // Builds the subtree over `indices`, returns its root node index.
    fn grow(
        &mut self,
        ds: &LabeledDataset,
        indices: &mut [usize],
        depth: usize,
        params: &ForestParams,
        rng: &mut ChaCha20Rng,
    ) -> usize {
        let n_classes = ds.n_classes();
        let mut counts = vec![0u32; n_classes];
        for &i in indices.iter() {
            counts[ds.labels[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || indices.len() < 2 * params.min_samples_leaf {
            return self.push_leaf(counts);
        }

        match best_split(ds, indices, &counts, params, rng) {
            None => self.push_leaf(counts),
            Some((feature, threshold)) => {
                // partition in place, preserving relative order for determinism
                let mut left: Vec<usize> = Vec::with_capacity(indices.len());
                let mut right: Vec<usize> = Vec::with_capacity(indices.len());
                for &i in indices.iter() {
                    if ds.features[i][feature] <= threshold {
                        left.push(i);
                    } else {
                        right.push(i);
                    }
                }
                let node = self.nodes.len();
                self.nodes.push(Node::Leaf { counts: Vec::new() }); // placeholder
                let left_idx = self.grow(ds, &mut left, depth + 1, params, rng);
                let right_idx = self.grow(ds, &mut right, depth + 1, params, rng);
                self.nodes[node] = Node::Split {
                    feature,
                    threshold,
                    left: left_idx,
                    right: right_idx,
                };
                node
            }
        }
    }

    fn push_leaf(&mut self, counts: Vec<u32>) -> usize {
        self.nodes.push(Node::Leaf { counts });
        self.nodes.len() - 1
    }

    /// Class histogram at the leaf `x` lands in.
    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Majority class at the leaf, ties broken by lowest class id.
    pub fn predict_class(&self, x: &[f64]) -> usize {
        argmax_lowest(self.leaf_counts(x))
    }
}

/// Index of the maximum, preferring the lowest index on ties.
pub(crate) fn argmax_lowest(counts: &[u32]) -> usize {
    let mut best = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

fn gini(counts: &[u32], total: f64) -> f64 {
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = f64::from(c) / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

// Best (feature, threshold) over a random feature subset, None when no
// split satisfies min_samples_leaf or decreases impurity.
//
// The Gini decrease is maximized via the equivalent score
// `sum_c left_c^2 / n_left + sum_c right_c^2 / n_right`, maintained
// incrementally as the scan moves samples from right to left.
fn best_split(
    ds: &LabeledDataset,
    indices: &[usize],
    parent_counts: &[u32],
    params: &ForestParams,
    rng: &mut ChaCha20Rng,
) -> Option<(usize, f64)> {
    let n = indices.len();
    let n_dims = ds.n_dims();
    let n_classes = ds.n_classes();
    let parent_gini = gini(parent_counts, n as f64);

    // sample candidate features without replacement (partial Fisher-Yates)
    let m = params.features_per_split.count(n_dims);
    let mut pool: Vec<usize> = (0..n_dims).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n_dims);
        pool.swap(i, j);
    }

    let min_leaf = params.min_samples_leaf;
    let mut best: Option<(usize, f64)> = None;
    let mut best_score = f64::NEG_INFINITY;

    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut left_counts = vec![0u32; n_classes];
    let mut right_counts = vec![0u32; n_classes];
    for &feature in &pool[..m] {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| {
            ds.features[a][feature]
                .partial_cmp(&ds.features[b][feature])
                .unwrap()
                .then(a.cmp(&b))
        });

        left_counts.iter_mut().for_each(|c| *c = 0);
        right_counts.copy_from_slice(parent_counts);
        let mut sum_sq_left = 0.0f64;
        let mut sum_sq_right: f64 = parent_counts.iter().map(|&c| f64::from(c).powi(2)).sum();

        for (pos, &i) in order.iter().enumerate().take(n - 1) {
            let y = ds.labels[i];
            sum_sq_left += 2.0 * f64::from(left_counts[y]) + 1.0;
            sum_sq_right -= 2.0 * f64::from(right_counts[y]) - 1.0;
            left_counts[y] += 1;
            right_counts[y] -= 1;

            let n_left = pos + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let v = ds.features[i][feature];
            if v == ds.features[order[pos + 1]][feature] {
                continue; // cannot separate equal values
            }
            let score = sum_sq_left / n_left as f64 + sum_sq_right / n_right as f64;
            if score > best_score {
                best_score = score;
                best = Some((feature, v));
            }
        }
    }

    // translate the best score back into an impurity decrease and require
    // it to be strictly positive
    let (feature, threshold) = best?;
    let decrease = parent_gini - 1.0 + best_score / n as f64;
    (decrease > 1e-12).then_some((feature, threshold))
}

/// The trained ensemble.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub trees: Vec<DecisionTree>,
    pub class_names: Vec<String>,
    pub feature_meta: FeatureMeta,
    pub n_dims: usize,
    /// Out-of-bag accuracy estimate; absent without bootstrap.
    pub oob_estimate: Option<f64>,
    /// Set when the training data held a single class; such a model always
    /// predicts that class.
    pub degenerate_single_class: bool,
}

impl ForestModel {
    /// Fit `params.n_trees` trees on bootstrap resamples of `train`.
    pub fn fit(train: &LabeledDataset, params: &ForestParams) -> Result<ForestModel> {
        params.validate()?;
        let n = train.n_samples();
        if n < 2 {
            return Err(Error::DegenerateDataset(format!(
                "{n} training sample(s); need at least 2"
            )));
        }
        let classes_present = train.class_counts().iter().filter(|&&c| c > 0).count();
        let degenerate_single_class = classes_present < 2;

        let mut trees = Vec::with_capacity(params.n_trees);
        // oob_votes[sample][class]
        let mut oob_votes = vec![vec![0u32; train.n_classes()]; n];
        for t in 0..params.n_trees {
            let mut rng = ChaCha20Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let (indices, in_bag): (Vec<usize>, Vec<bool>) = if params.bootstrap {
                let mut in_bag = vec![false; n];
                let draws: Vec<usize> = (0..n)
                    .map(|_| {
                        let i = rng.gen_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect();
                (draws, in_bag)
            } else {
                ((0..n).collect(), vec![true; n])
            };
            let tree = DecisionTree::fit(train, &indices, params, &mut rng);
            if params.bootstrap {
                for (i, bagged) in in_bag.iter().enumerate() {
                    if !bagged {
                        oob_votes[i][tree.predict_class(&train.features[i])] += 1;
                    }
                }
            }
            trees.push(tree);
        }

        let oob_estimate = if params.bootstrap {
            let mut correct = 0usize;
            let mut counted = 0usize;
            for (i, votes) in oob_votes.iter().enumerate() {
                if votes.iter().any(|&v| v > 0) {
                    counted += 1;
                    if argmax_lowest(votes) == train.labels[i] {
                        correct += 1;
                    }
                }
            }
            (counted > 0).then(|| correct as f64 / counted as f64)
        } else {
            None
        };

        Ok(ForestModel {
            params: params.clone(),
            trees,
            class_names: train.class_names.clone(),
            feature_meta: train.feature_meta.clone(),
            n_dims: train.n_dims(),
            oob_estimate,
            degenerate_single_class,
        })
    }

    /// Majority vote across trees; returns the label and the vote histogram.
    pub fn predict_with_votes(&self, x: &[f64]) -> Result<(usize, Vec<u32>)> {
        if x.len() != self.n_dims {
            return Err(Error::DimensionMismatch {
                expected: self.n_dims,
                got: x.len(),
            });
        }
        let mut votes = vec![0u32; self.class_names.len()];
        for tree in &self.trees {
            votes[tree.predict_class(x)] += 1;
        }
        Ok((argmax_lowest(&votes), votes))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<ForestModel> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl Classifier for ForestModel {
    fn predict(&self, x: &[f64]) -> Result<usize> {
        self.predict_with_votes(x).map(|(label, _)| label)
    }
}
