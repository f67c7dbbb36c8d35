//! Second-order exact greedy regression tree on lambda targets.

use serde::{Deserialize, Serialize};

use super::TrainParams;

const EPS: f64 = 1e-6;

/// One node of a binary regression tree. Feature values strictly below the
/// threshold go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        #[serde(rename = "f")]
        feature: usize,
        #[serde(rename = "t")]
        threshold: f64,
        #[serde(rename = "l")]
        left: usize,
        #[serde(rename = "r")]
        right: usize,
    },
    Leaf {
        #[serde(rename = "v")]
        value: f64,
    },
}

/// A binary regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Fit one tree to (gradient, hessian) targets with exact greedy splits.
///
/// Gain is `G_L²/(H_L+ε) + G_R²/(H_R+ε) − G²/(H+ε)`; candidate thresholds
/// sit at midpoints between consecutive distinct sorted feature values.
/// Ties break toward the lowest feature index, then the lowest threshold.
/// Leaf values are `G/(H+ε)`.
pub fn fit_tree(features: &[Vec<f64>], grad: &[f64], hess: &[f64], params: &TrainParams) -> Tree {
    assert_eq!(features.len(), grad.len());
    assert_eq!(features.len(), hess.len());
    let mut nodes = Vec::new();
    let indices: Vec<usize> = (0..features.len()).collect();
    build_node(features, grad, hess, params, indices, 0, &mut nodes);
    Tree { nodes }
}

fn leaf_value(indices: &[usize], grad: &[f64], hess: &[f64]) -> f64 {
    let g: f64 = indices.iter().map(|&i| grad[i]).sum();
    let h: f64 = indices.iter().map(|&i| hess[i]).sum();
    g / (h + EPS)
}

fn build_node(
    features: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    params: &TrainParams,
    indices: Vec<usize>,
    depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let can_split = depth < params.max_depth && indices.len() >= 2 * params.min_samples_leaf;
    let split = if can_split {
        find_best_split(features, grad, hess, params, &indices)
    } else {
        None
    };

    let Some(split) = split else {
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf {
            value: leaf_value(&indices, grad, hess),
        });
        return idx;
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| features[i][split.feature] < split.threshold);

    let idx = nodes.len();
    // Placeholder; child indices are patched in after both subtrees exist.
    nodes.push(TreeNode::Leaf { value: 0.0 });
    let left = build_node(features, grad, hess, params, left_idx, depth + 1, nodes);
    let right = build_node(features, grad, hess, params, right_idx, depth + 1, nodes);
    nodes[idx] = TreeNode::Internal {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    idx
}

fn find_best_split(
    features: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    params: &TrainParams,
    indices: &[usize],
) -> Option<BestSplit> {
    let n = indices.len();
    let total_g: f64 = indices.iter().map(|&i| grad[i]).sum();
    let total_h: f64 = indices.iter().map(|&i| hess[i]).sum();
    let parent_score = total_g * total_g / (total_h + EPS);

    let num_features = features[indices[0]].len();
    let mut best: Option<BestSplit> = None;

    for feature in 0..num_features {
        let mut sorted: Vec<usize> = indices.to_vec();
        sorted.sort_by(|&a, &b| {
            features[a][feature]
                .partial_cmp(&features[b][feature])
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let mut gl = 0.0;
        let mut hl = 0.0;
        for s in 1..n {
            gl += grad[sorted[s - 1]];
            hl += hess[sorted[s - 1]];
            let a = features[sorted[s - 1]][feature];
            let b = features[sorted[s]][feature];
            if a == b {
                continue;
            }
            if s < params.min_samples_leaf || n - s < params.min_samples_leaf {
                continue;
            }
            // Midpoint, nudged up if rounding collapsed it onto the lower
            // value, so `value < threshold` keeps exactly s rows on the left.
            let mut threshold = a + (b - a) / 2.0;
            if threshold <= a {
                threshold = b;
            }
            let gr = total_g - gl;
            let hr = total_h - hl;
            let gain = gl * gl / (hl + EPS) + gr * gr / (hr + EPS) - parent_score;
            if gain > 0.0 && best.as_ref().map(|b| gain > b.gain).unwrap_or(true) {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize, min_leaf: usize) -> TrainParams {
        TrainParams {
            max_depth: depth,
            min_samples_leaf: min_leaf,
            ..TrainParams::default()
        }
    }

    #[test]
    fn separable_targets_find_the_split() {
        // Feature 0 separates positive from negative gradients at 0.5.
        let features: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![if i < 5 { 0.0 } else { 1.0 }, 0.25])
            .collect();
        let grad: Vec<f64> = (0..10).map(|i| if i < 5 { -1.0 } else { 1.0 }).collect();
        let hess = vec![1.0; 10];
        let tree = fit_tree(&features, &grad, &hess, &params(1, 1));
        match &tree.nodes[0] {
            TreeNode::Internal {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        // Leaf values are G/H ratios per side.
        assert!((tree.predict(&[0.0, 0.0]) + 1.0).abs() < 1e-5);
        assert!((tree.predict(&[1.0, 0.0]) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn exhaustive_enumeration_agrees_on_best_gain() {
        // Independent oracle: enumerate every (feature, boundary) pair.
        let features = vec![
            vec![0.1, 3.0],
            vec![0.4, 1.0],
            vec![0.7, 2.5],
            vec![0.9, 0.5],
            vec![0.2, 2.2],
            vec![0.6, 1.7],
        ];
        let grad = [0.5, -1.2, 0.3, 2.0, -0.4, 0.9];
        let hess = [0.9, 1.1, 0.7, 1.3, 1.0, 0.8];

        let mut best_gain = 0.0;
        for f in 0..2 {
            let mut vals: Vec<f64> = features.iter().map(|r| r[f]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in vals.windows(2) {
                if w[0] == w[1] {
                    continue;
                }
                let t = (w[0] + w[1]) / 2.0;
                let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
                for (i, row) in features.iter().enumerate() {
                    if row[f] < t {
                        gl += grad[i];
                        hl += hess[i];
                    } else {
                        gr += grad[i];
                        hr += hess[i];
                    }
                }
                let g = gl + gr;
                let h = hl + hr;
                let gain =
                    gl * gl / (hl + EPS) + gr * gr / (hr + EPS) - g * g / (h + EPS);
                if gain > best_gain {
                    best_gain = gain;
                }
            }
        }

        let tree = fit_tree(&features.clone(), &grad, &hess, &params(1, 1));
        let TreeNode::Internal {
            feature, threshold, ..
        } = &tree.nodes[0]
        else {
            panic!("expected a split");
        };
        let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
        for (i, row) in features.iter().enumerate() {
            if row[*feature] < *threshold {
                gl += grad[i];
                hl += hess[i];
            } else {
                gr += grad[i];
                hr += hess[i];
            }
        }
        let g = gl + gr;
        let h = hl + hr;
        let gain = gl * gl / (hl + EPS) + gr * gr / (hr + EPS) - g * g / (h + EPS);
        assert!((gain - best_gain).abs() < 1e-9);
    }

    #[test]
    fn zero_gradients_give_single_zero_leaf() {
        let features = vec![vec![0.0], vec![1.0], vec![2.0]];
        let grad = vec![0.0; 3];
        let hess = vec![1.0; 3];
        let tree = fit_tree(&features, &grad, &hess, &params(3, 1));
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict(&[1.5]), 0.0);
    }

    #[test]
    fn tie_breaks_to_lowest_feature_index() {
        // Two identical columns separate the targets equally well.
        let features: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let v = if i < 3 { 0.0 } else { 1.0 };
                vec![v, v]
            })
            .collect();
        let grad: Vec<f64> = (0..6).map(|i| if i < 3 { -1.0 } else { 1.0 }).collect();
        let hess = vec![1.0; 6];
        let tree = fit_tree(&features, &grad, &hess, &params(1, 1));
        let TreeNode::Internal { feature, .. } = &tree.nodes[0] else {
            panic!("expected a split");
        };
        assert_eq!(*feature, 0);
    }

    #[test]
    fn min_samples_leaf_blocks_unbalanced_splits() {
        let features: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let grad = [5.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let hess = vec![1.0; 6];
        let tree = fit_tree(&features, &grad, &hess, &params(1, 3));
        if let TreeNode::Internal { threshold, .. } = &tree.nodes[0] {
            // The only admissible boundary leaves 3 on each side.
            assert!((threshold - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_limit_respected() {
        let features: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let grad: Vec<f64> = (0..32).map(|i| (i % 7) as f64 - 3.0).collect();
        let hess = vec![1.0; 32];
        let tree = fit_tree(&features, &grad, &hess, &params(2, 1));
        fn depth_of(tree: &Tree, idx: usize) -> usize {
            match &tree.nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => {
                    1 + depth_of(tree, *left).max(depth_of(tree, *right))
                }
            }
        }
        assert!(depth_of(&tree, 0) <= 2);
    }
}
