//! LambdaRank-gradient gradient boosted decision trees.

mod dataset;
mod lambda;
mod model;
mod ndcg;
mod tree;

pub use dataset::{read_svmlight, write_svmlight, DataRow, QueryGroup, RankingDataset};
pub use lambda::lambda_gradients;
pub use model::{deserialize_model, serialize_model, train, GBDTModel, TrainResult};
pub use ndcg::ndcg_at_k;
pub use tree::{fit_tree, Tree, TreeNode};

use serde::{Deserialize, Serialize};

/// Hyperparameters for the boosting trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub num_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
    /// Steepness of the pairwise logistic.
    pub sigma: f64,
    /// NDCG truncation used for lambda weights and the training log.
    pub ndcg_k: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            num_trees: 100,
            max_depth: 6,
            min_samples_leaf: 20,
            learning_rate: 0.1,
            sigma: 1.0,
            ndcg_k: 10,
            seed: 42,
        }
    }
}

/// Rank row indices by score descending, ties broken by input index.
pub(crate) fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}
