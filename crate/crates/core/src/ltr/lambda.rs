//! LambdaRank pseudo-gradients for one query group.

use super::ndcg::{discount, gain, ideal_dcg};
use super::rank_by_score;

/// Per-document lambdas and hessians for one query group.
///
/// For every pair (i, j) with grade_i > grade_j:
/// `ρ = 1/(1+exp(sigma·(s_i − s_j)))`, `w = |ΔNDCG@k of swapping i and j|`,
/// then `λ_i += sigma·ρ·w`, `λ_j −= sigma·ρ·w`, and both hessians gain
/// `sigma²·ρ·(1−ρ)·w`. Positive lambda pushes a document's score up.
pub fn lambda_gradients(
    scores: &[f64],
    grades: &[u8],
    sigma: f64,
    k: usize,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(scores.len(), grades.len());
    let n = scores.len();
    let mut lambdas = vec![0.0; n];
    let mut hessians = vec![0.0; n];

    let idcg = ideal_dcg(grades, k);
    if idcg == 0.0 {
        return (lambdas, hessians);
    }

    // Positions in the current ranking (score desc, index tie-break).
    let order = rank_by_score(scores);
    let mut pos = vec![0usize; n];
    for (rank0, &doc) in order.iter().enumerate() {
        pos[doc] = rank0 + 1;
    }

    for i in 0..n {
        for j in 0..n {
            if grades[i] <= grades[j] {
                continue;
            }
            let rho = 1.0 / (1.0 + (sigma * (scores[i] - scores[j])).exp());
            let delta_ndcg = ((gain(grades[i]) - gain(grades[j]))
                * (discount(pos[i], k) - discount(pos[j], k))
                / idcg)
                .abs();
            let step = sigma * rho * delta_ndcg;
            lambdas[i] += step;
            lambdas[j] -= step;
            let h = sigma * sigma * rho * (1.0 - rho) * delta_ndcg;
            hessians[i] += h;
            hessians[j] += h;
        }
    }
    (lambdas, hessians)
}
