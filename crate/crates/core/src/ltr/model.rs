//! Boosted forest: training loop, prediction, JSON serialization.

use serde::{Deserialize, Serialize};

use super::{fit_tree, lambda_gradients, ndcg_at_k, rank_by_score, RankingDataset, TrainParams, Tree};
use crate::error::{Error, Result};

/// An ordered forest of regression trees with named features.
/// Prediction is `base_score + learning_rate × Σ tree outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBDTModel {
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GBDTModel {
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_names.len() {
            return Err(Error::FeatureLengthMismatch {
                got: features.len(),
                expected: self.feature_names.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(features)).sum();
        Ok(self.base_score + self.learning_rate * sum)
    }

    /// Rank row indices of a candidate matrix by predicted score
    /// (descending, index tie-break).
    pub fn rank(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        let scores: Vec<f64> = rows
            .iter()
            .map(|r| self.predict(r))
            .collect::<Result<_>>()?;
        Ok(rank_by_score(&scores))
    }
}

/// Trained model plus the per-round training NDCG log.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub model: GBDTModel,
    /// Mean training NDCG@k after each boosting round, in round order.
    pub round_ndcg: Vec<f64>,
}

/// LambdaRank boosting: per round, pool per-group lambdas/hessians, fit one
/// tree, update scores by `learning_rate × tree output`.
pub fn train(dataset: &RankingDataset, params: &TrainParams) -> Result<TrainResult> {
    dataset.validate()?;

    let rows: Vec<Vec<f64>> = dataset
        .groups
        .iter()
        .flat_map(|g| g.rows.iter().map(|r| r.features.clone()))
        .collect();
    let grades: Vec<u8> = dataset
        .groups
        .iter()
        .flat_map(|g| g.rows.iter().map(|r| r.grade))
        .collect();
    let mut group_spans = Vec::with_capacity(dataset.groups.len());
    let mut offset = 0;
    for g in &dataset.groups {
        group_spans.push(offset..offset + g.rows.len());
        offset += g.rows.len();
    }

    let base_score = 0.0;
    let mut scores = vec![base_score; rows.len()];
    let mut trees = Vec::with_capacity(params.num_trees);
    let mut round_ndcg = Vec::with_capacity(params.num_trees);

    for _round in 0..params.num_trees {
        let mut grad = vec![0.0; rows.len()];
        let mut hess = vec![0.0; rows.len()];
        for span in &group_spans {
            let (l, h) = lambda_gradients(
                &scores[span.clone()],
                &grades[span.clone()],
                params.sigma,
                params.ndcg_k,
            );
            grad[span.clone()].copy_from_slice(&l);
            hess[span.clone()].copy_from_slice(&h);
        }

        let tree = fit_tree(&rows, &grad, &hess, params);
        for (i, row) in rows.iter().enumerate() {
            scores[i] += params.learning_rate * tree.predict(row);
        }
        trees.push(tree);
        round_ndcg.push(mean_train_ndcg(&scores, &grades, &group_spans, params.ndcg_k)?);
    }

    Ok(TrainResult {
        model: GBDTModel {
            feature_names: dataset.feature_names.clone(),
            base_score,
            learning_rate: params.learning_rate,
            trees,
        },
        round_ndcg,
    })
}

fn mean_train_ndcg(
    scores: &[f64],
    grades: &[u8],
    group_spans: &[std::ops::Range<usize>],
    k: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for span in group_spans {
        let order = rank_by_score(&scores[span.clone()]);
        let ranked: Vec<u8> = order.iter().map(|&i| grades[span.start + i]).collect();
        total += ndcg_at_k(&ranked, k)?;
    }
    Ok(total / group_spans.len() as f64)
}

/// Model file format: JSON `{feature_names, base_score, learning_rate,
/// trees: [{nodes: [{f,t,l,r} | {v}]}]}`; node 0 roots each tree.
pub fn serialize_model(model: &GBDTModel) -> String {
    serde_json::to_string_pretty(model).expect("model serialization cannot fail")
}

/// Inverse of [`serialize_model`]; reports the JSON path of the offending
/// node on schema violations and never yields a partial model.
pub fn deserialize_model(text: &str) -> Result<GBDTModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::ModelFormat {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })
}
