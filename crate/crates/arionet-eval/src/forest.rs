//! Random forest: bootstrap-sampled CART trees with Gini splits and
//! sqrt(d) feature subsampling, majority vote with smallest-id ties.

use crate::EvalError;
use arionet_rng::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: u32,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// One fitted decision tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> u32 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// Forest hyperparameters. `max_features` defaults to sqrt(d).
#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub trees: usize,
    pub seed: u64,
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            seed: 0,
            max_features: None,
        }
    }
}

/// Fitted forest plus the dimensions it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub classes: usize,
    pub feat_dim: usize,
}

fn gini(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / n as f64;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

fn majority(counts: &[u64]) -> u32 {
    let mut best = 0usize;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best as u32
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    classes: usize,
    max_features: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        counts
    }

    /// Best (threshold, weighted child impurity) for one feature, or
    /// None when every value is identical.
    fn best_split_on(&self, idx: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut pairs: Vec<(f64, usize)> =
            idx.iter().map(|&i| (self.x[i][feature], self.y[i])).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let n = pairs.len() as u64;
        let total = self.class_counts(idx);
        let mut left = vec![0u64; self.classes];
        let mut right = total;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..pairs.len() - 1 {
            left[pairs[i].1] += 1;
            right[pairs[i].1] -= 1;
            if pairs[i + 1].0 > pairs[i].0 {
                let nl = (i + 1) as u64;
                let nr = n - nl;
                let impurity =
                    (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let threshold = pairs[i].0 + 0.5 * (pairs[i + 1].0 - pairs[i].0);
                if best.is_none_or(|(_, cur)| impurity < cur) {
                    best = Some((threshold, impurity));
                }
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, rng: &mut Rng) -> u32 {
        let counts = self.class_counts(&idx);
        let active = counts.iter().filter(|&&c| c > 0).count();
        if active <= 1 || idx.len() < 2 {
            let at = self.nodes.len() as u32;
            self.nodes.push(TreeNode::Leaf {
                label: majority(&counts),
            });
            return at;
        }

        let d = self.x[0].len();
        let sampled = rng.sample_indices(d, self.max_features.min(d));
        let pick = |features: &[usize], builder: &Self| -> Option<(usize, f64, f64)> {
            let mut best: Option<(usize, f64, f64)> = None;
            for &f in features {
                if let Some((threshold, impurity)) = builder.best_split_on(&idx, f) {
                    if best.is_none_or(|(_, _, cur)| impurity < cur) {
                        best = Some((f, threshold, impurity));
                    }
                }
            }
            best
        };
        // Fall back to the full feature set when the sampled ones are
        // all constant within this node.
        let chosen = pick(&sampled, self).or_else(|| {
            let all: Vec<usize> = (0..d).collect();
            pick(&all, self)
        });

        let Some((feature, threshold, _)) = chosen else {
            let at = self.nodes.len() as u32;
            self.nodes.push(TreeNode::Leaf {
                label: majority(&counts),
            });
            return at;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.x[i][feature] <= threshold);

        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { label: 0 }); // placeholder
        let left = self.build(left_idx, rng);
        let right = self.build(right_idx, rng);
        self.nodes[at] = TreeNode::Split {
            feature: feature as u32,
            threshold,
            left,
            right,
        };
        at as u32
    }
}

fn fit_tree(
    x: &[Vec<f64>],
    y: &[usize],
    classes: usize,
    max_features: usize,
    seed: u64,
) -> DecisionTree {
    let mut rng = Rng::seed_from_u64(seed);
    let n = x.len();
    let bootstrap: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
    let mut builder = TreeBuilder {
        x,
        y,
        classes,
        max_features,
        nodes: Vec::new(),
    };
    builder.build(bootstrap, &mut rng);
    DecisionTree {
        nodes: builder.nodes,
    }
}

/// Fit `cfg.trees` bootstrap trees. Trees are independent and fitted in
/// parallel; per-tree seeds are fixed up front so the result does not
/// depend on scheduling.
pub fn fit_forest(x: &[Vec<f64>], y: &[usize], cfg: &ForestConfig) -> Result<ForestModel, EvalError> {
    if x.is_empty() || cfg.trees == 0 {
        return Err(EvalError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            labels: y.len(),
            rows: x.len(),
        });
    }
    let feat_dim = x[0].len();
    if x.iter().any(|row| row.len() != feat_dim) {
        return Err(EvalError::RaggedFeatures);
    }
    let classes = y.iter().max().unwrap() + 1;
    let mut present = vec![false; classes];
    for &label in y {
        present[label] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(EvalError::SingleClass);
    }

    let max_features = cfg
        .max_features
        .unwrap_or_else(|| (feat_dim as f64).sqrt().floor() as usize)
        .max(1);
    let mut seeder = Rng::seed_from_u64(cfg.seed);
    let tree_seeds: Vec<u64> = (0..cfg.trees).map(|_| seeder.next_u64()).collect();

    let trees: Vec<DecisionTree> = tree_seeds
        .par_iter()
        .map(|&seed| fit_tree(x, y, classes, max_features, seed))
        .collect();

    Ok(ForestModel {
        trees,
        classes,
        feat_dim,
    })
}

/// Majority vote over the trees; vote ties go to the smallest class id.
pub fn forest_predict(model: &ForestModel, x: &[f64]) -> Result<usize, EvalError> {
    if x.len() != model.feat_dim {
        return Err(EvalError::QueryDim {
            query: x.len(),
            expected: model.feat_dim,
        });
    }
    let mut votes = vec![0usize; model.classes];
    for tree in &model.trees {
        votes[tree.predict(x) as usize] += 1;
    }
    Ok(majority_usize(&votes))
}

fn majority_usize(votes: &[usize]) -> usize {
    let mut best = 0usize;
    for (k, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = k;
        }
    }
    best
}

pub fn forest_predict_batch(model: &ForestModel, xs: &[Vec<f64>]) -> Result<Vec<usize>, EvalError> {
    xs.iter().map(|x| forest_predict(model, x)).collect()
}
