//! NDCG with exponential gain and log2 discount.

use crate::error::{Error, Result};

/// Gain of a relevance grade: 2^g − 1.
pub(crate) fn gain(grade: u8) -> f64 {
    ((1u64 << grade) - 1) as f64
}

/// Discount at 1-based rank r: 1/log2(r+1); zero beyond the truncation k.
pub(crate) fn discount(rank: usize, k: usize) -> f64 {
    if rank > k {
        0.0
    } else {
        1.0 / ((rank as f64) + 1.0).log2()
    }
}

/// Ideal DCG@k over a grade multiset.
pub(crate) fn ideal_dcg(grades: &[u8], k: usize) -> f64 {
    let mut sorted = grades.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .enumerate()
        .map(|(i, &g)| gain(g) * discount(i + 1, k))
        .sum()
}

/// NDCG@k of grades listed in ranked order. All-zero grade lists score 1.0.
pub fn ndcg_at_k(ranked_grades: &[u8], k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidParam("ndcg truncation k must be >= 1".into()));
    }
    if ranked_grades.is_empty() {
        return Err(Error::InvalidParam("ndcg of an empty list".into()));
    }
    let idcg = ideal_dcg(ranked_grades, k);
    if idcg == 0.0 {
        return Ok(1.0);
    }
    let dcg: f64 = ranked_grades
        .iter()
        .enumerate()
        .map(|(i, &g)| gain(g) * discount(i + 1, k))
        .sum();
    Ok(dcg / idcg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_order_scores_one() {
        assert_eq!(ndcg_at_k(&[3, 2, 0], 3).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&[3], 1).unwrap(), 1.0);
    }

    #[test]
    fn hand_case_zero_three() {
        // DCG = 0 + 7/log2(3), IDCG = 7.
        let got = ndcg_at_k(&[0, 3], 2).unwrap();
        assert!((got - 0.630930).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn all_zero_is_one() {
        for k in [1, 2, 10] {
            assert_eq!(ndcg_at_k(&[0, 0, 0], k).unwrap(), 1.0);
        }
    }

    #[test]
    fn k_zero_is_error() {
        assert!(ndcg_at_k(&[1, 2], 0).is_err());
    }

    #[test]
    fn truncation_ignores_tail() {
        // Grade beyond k contributes nothing to either DCG or IDCG.
        let a = ndcg_at_k(&[2, 1], 1).unwrap();
        let b = ndcg_at_k(&[2, 3], 1).unwrap();
        assert_eq!(a, 1.0);
        assert!(b < 1.0);
    }

    #[test]
    fn bounded_and_brute_force_consistent() {
        // Brute-force the best ordering of a small multiset and confirm no
        // permutation exceeds 1.0.
        let grades = [0u8, 1, 3, 2, 0];
        let mut perm = grades;
        perm.sort_unstable();
        loop {
            let v = ndcg_at_k(&perm, 3).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&v));
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }

    fn next_permutation(arr: &mut [u8]) -> bool {
        let n = arr.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && arr[i - 1] >= arr[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while arr[j] <= arr[i - 1] {
            j -= 1;
        }
        arr.swap(i - 1, j);
        arr[i..].reverse();
        true
    }
}
