//! Exact attention-score primitives.
//!
//! These are the ground-truth building blocks every approximate mechanism in
//! the crate is measured against: raw dot-product scoring, exact Top-K
//! selection over the full key set, and a numerically safe softmax. Dot
//! products accumulate in f64 and round once at the end so results are
//! deterministic regardless of iteration batching.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::types::Scores;

/// Score every key against `query` by inner product. Each score is the
/// f32-rounded dot product, held exactly in f64.
pub fn dot_scores(query: &[f32], keys: &[Vec<f32>]) -> Result<Scores> {
    let d = query.len();
    let mut values = Vec::with_capacity(keys.len());
    for (i, key) in keys.iter().enumerate() {
        if key.len() != d {
            return Err(Error::DimMismatch {
                index: i,
                expected: d,
                got: key.len(),
            });
        }
        values.push(dot(query, key) as f64);
    }
    Ok(Scores(values))
}

/// Inner product with f64 accumulation, rounded to f32 at the end.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0f64;
    for (x, y) in a.iter().zip(b) {
        acc += *x as f64 * *y as f64;
    }
    acc as f32
}

/// The `k` non-pinned indices with the highest scores; ties broken by lower
/// index. This is the recall oracle for every index variant.
pub fn topk_indices(scores: &Scores, k: usize, pinned: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    let mut candidates: Vec<usize> = (0..scores.len()).filter(|i| !pinned.contains(i)).collect();
    if k > candidates.len() {
        return Err(Error::BudgetTooLarge {
            k,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|&a, &b| {
        scores.0[b]
            .total_cmp(&scores.0[a])
            .then_with(|| a.cmp(&b))
    });
    Ok(candidates.into_iter().take(k).collect())
}

/// Exact Top-K over the full key set: score with `dot_scores`, then select.
pub fn exact_topk(
    query: &[f32],
    keys: &[Vec<f32>],
    k: usize,
    pinned: &BTreeSet<usize>,
) -> Result<BTreeSet<usize>> {
    let scores = dot_scores(query, keys)?;
    topk_indices(&scores, k, pinned)
}

/// Max-subtracted softmax. Sums to 1 within 1e-6 for any finite input.
pub fn softmax_weights(scores: &Scores) -> Result<Scores> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("softmax over empty scores"));
    }
    let max = scores.0.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = scores.0.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(Scores(exps.into_iter().map(|e| e / sum).collect()))
}
