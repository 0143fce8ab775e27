//! Critical-entry retrieval indexes.
//!
//! The production path is [`HierIndex`]: contiguous token chunks represented
//! by their mean key, grouped under k-means centroids. Selection descends
//! centroids by query affinity, ranks the gathered chunk representatives, and
//! takes whole chunks until the token budget is met, trimming the last chunk
//! by per-token score. Two baselines exist for comparison: a min/max
//! channel-bound chunk index and a flat k-means over individual keys.

pub mod io;
pub mod kmeans;

use std::collections::BTreeSet;
use std::ops::Range;

use crate::attn::{dot, dot_scores, topk_indices};
use crate::error::{Error, Result};
use crate::types::{Scores, SparsityConfig};

/// Centroid-descent fan-out: gather candidate chunks until they cover this
/// multiple of the token budget before ranking them.
pub const DESCENT_FANOUT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub chunk_id: usize,
    pub token_range: Range<usize>,
    /// Arithmetic mean of the member keys.
    pub representative: Vec<f32>,
}

impl Chunk {
    pub fn len(&self) -> usize {
        self.token_range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_range.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub centroid_id: usize,
    pub vector: Vec<f32>,
    /// Member chunk ids.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierIndex {
    pub chunks: Vec<Chunk>,
    pub centroids: Vec<Centroid>,
    pub chunk_size: usize,
    pub n_centroids: usize,
    pub dim: usize,
    /// Token keys, kept for per-token trim scoring at selection time. Not
    /// part of the serialized index and not counted as index footprint.
    keys: Vec<Vec<f32>>,
}

/// Result of one selection pass: the chosen non-pinned tokens plus every
/// per-token dot score the pass computed (the lookahead candidate pool).
#[derive(Debug, Clone)]
pub struct SelectionDetail {
    pub chosen: BTreeSet<usize>,
    pub scored: Vec<(usize, f32)>,
}

/// Anything that can produce the per-step critical set.
pub trait CriticalSelector: Send + Sync {
    /// Select exactly `budget_k` non-pinned tokens; `min_scored` asks the
    /// selector to keep scoring beyond the budget so eviction has a candidate
    /// pool to rank.
    fn select_detailed(
        &self,
        query: &[f32],
        budget_k: usize,
        pinned: &BTreeSet<usize>,
        min_scored: usize,
    ) -> Result<SelectionDetail>;

    /// Number of representative vectors the index stores.
    fn representative_count(&self) -> usize;

    fn context_length(&self) -> usize;
}

pub fn build_chunks(keys: &[Vec<f32>], chunk_size: usize) -> Result<Vec<Chunk>> {
    if keys.is_empty() {
        return Err(Error::EmptyInput("no keys to chunk"));
    }
    if chunk_size == 0 {
        return Err(Error::InvalidConfig("chunk_size must be >= 1".into()));
    }
    let dim = keys[0].len();
    let mut chunks = Vec::with_capacity(keys.len().div_ceil(chunk_size));
    let mut start = 0usize;
    while start < keys.len() {
        let end = (start + chunk_size).min(keys.len());
        let mut mean = vec![0f64; dim];
        for key in &keys[start..end] {
            if key.len() != dim {
                return Err(Error::DimMismatch {
                    index: start,
                    expected: dim,
                    got: key.len(),
                });
            }
            for (m, x) in mean.iter_mut().zip(key) {
                *m += *x as f64;
            }
        }
        let count = (end - start) as f64;
        chunks.push(Chunk {
            chunk_id: chunks.len(),
            token_range: start..end,
            representative: mean.iter().map(|m| (m / count) as f32).collect(),
        });
        start = end;
    }
    Ok(chunks)
}

pub fn build_index(
    keys: &[Vec<f32>],
    chunk_size: usize,
    n_centroids: usize,
    seed: u64,
) -> Result<HierIndex> {
    let chunks = build_chunks(keys, chunk_size)?;
    if n_centroids > chunks.len() {
        return Err(Error::InvalidConfig(format!(
            "n_centroids {} exceeds chunk count {}",
            n_centroids,
            chunks.len()
        )));
    }
    let reps: Vec<Vec<f32>> = chunks.iter().map(|c| c.representative.clone()).collect();
    let fit = kmeans::kmeans(&reps, n_centroids, seed)?;
    let mut centroids: Vec<Centroid> = fit
        .centroids
        .into_iter()
        .enumerate()
        .map(|(centroid_id, vector)| Centroid {
            centroid_id,
            vector,
            members: Vec::new(),
        })
        .collect();
    for (chunk_id, &ci) in fit.assignment.iter().enumerate() {
        centroids[ci].members.push(chunk_id);
    }
    debug_assert!(centroids.iter().all(|c| !c.members.is_empty()));
    Ok(HierIndex {
        chunks,
        centroids,
        chunk_size,
        n_centroids,
        dim: keys[0].len(),
        keys: keys.to_vec(),
    })
}

impl HierIndex {
    pub fn keys(&self) -> &[Vec<f32>] {
        &self.keys
    }

    /// Rebind token keys (used after deserializing the representative-only
    /// index section).
    pub fn attach_keys(&mut self, keys: Vec<Vec<f32>>) -> Result<()> {
        if keys.len() != self.context_length() {
            return Err(Error::ShapeMismatch(format!(
                "index covers {} tokens, got {} keys",
                self.context_length(),
                keys.len()
            )));
        }
        self.keys = keys;
        Ok(())
    }
}

/// Ordered token groups -> exact-budget selection.
///
/// Groups must arrive sorted by descending score (ties already resolved).
/// Whole groups are taken until the budget is covered; the last group taken
/// is trimmed by per-token dot score, lower token index winning ties. Scoring
/// continues past the budget until `min_scored` tokens have scores.
fn take_groups(
    groups: &[(f32, usize, &[usize])],
    keys: &[Vec<f32>],
    query: &[f32],
    budget_k: usize,
    pinned: &BTreeSet<usize>,
    min_scored: usize,
) -> SelectionDetail {
    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    let mut scored: Vec<(usize, f32)> = Vec::new();
    let mut taken = 0usize;
    for &(_, _, tokens) in groups {
        let nonpinned: Vec<usize> = tokens
            .iter()
            .copied()
            .filter(|t| !pinned.contains(t))
            .collect();
        if taken >= budget_k && scored.len() >= min_scored {
            break;
        }
        let mut token_scores: Vec<(usize, f32)> = nonpinned
            .iter()
            .map(|&t| (t, dot(query, &keys[t])))
            .collect();
        scored.extend(token_scores.iter().copied());
        if taken >= budget_k {
            continue; // pool extension only
        }
        let need = budget_k - taken;
        if nonpinned.len() <= need {
            chosen.extend(nonpinned.iter().copied());
            taken += nonpinned.len();
        } else {
            // Trim the boundary group by per-token score.
            token_scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            chosen.extend(token_scores.iter().take(need).map(|(t, _)| *t));
            taken = budget_k;
        }
    }
    SelectionDetail { chosen, scored }
}

impl CriticalSelector for HierIndex {
    fn select_detailed(
        &self,
        query: &[f32],
        budget_k: usize,
        pinned: &BTreeSet<usize>,
        min_scored: usize,
    ) -> Result<SelectionDetail> {
        let nonpinned_total = self.context_length() - pinned.len();
        if budget_k > nonpinned_total {
            return Err(Error::BudgetTooLarge {
                k: budget_k,
                available: nonpinned_total,
            });
        }
        // Stage 1: centroid descent.
        let mut centroid_order: Vec<(f32, usize)> = self
            .centroids
            .iter()
            .map(|c| (dot(query, &c.vector), c.centroid_id))
            .collect();
        centroid_order.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

        let gather_target = (DESCENT_FANOUT * budget_k).max(min_scored);
        let mut gathered: Vec<usize> = Vec::new();
        let mut covered = 0usize;
        for &(_, ci) in &centroid_order {
            for &chunk_id in &self.centroids[ci].members {
                let chunk = &self.chunks[chunk_id];
                gathered.push(chunk_id);
                covered += chunk
                    .token_range
                    .clone()
                    .filter(|t| !pinned.contains(t))
                    .count();
            }
            if covered >= gather_target {
                break;
            }
        }

        // Stage 2: rank gathered chunk representatives.
        let mut groups: Vec<(f32, usize, Vec<usize>)> = gathered
            .into_iter()
            .map(|chunk_id| {
                let chunk = &self.chunks[chunk_id];
                (
                    dot(query, &chunk.representative),
                    chunk_id,
                    chunk.token_range.clone().collect(),
                )
            })
            .collect();
        groups.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let group_refs: Vec<(f32, usize, &[usize])> = groups
            .iter()
            .map(|(s, id, toks)| (*s, *id, toks.as_slice()))
            .collect();
        Ok(take_groups(
            &group_refs,
            &self.keys,
            query,
            budget_k,
            pinned,
            min_scored,
        ))
    }

    fn representative_count(&self) -> usize {
        self.chunks.len() + self.centroids.len()
    }

    fn context_length(&self) -> usize {
        self.chunks.last().map(|c| c.token_range.end).unwrap_or(0)
    }
}

/// Spec-surface selection: chosen tokens unioned with the pinned set.
pub fn select_critical(
    index: &dyn CriticalSelector,
    query: &[f32],
    cfg: &SparsityConfig,
) -> Result<BTreeSet<usize>> {
    let pinned = cfg.pinned_set(index.context_length());
    let detail = index.select_detailed(query, cfg.budget_k, &pinned, cfg.budget_k)?;
    let mut out = detail.chosen;
    out.extend(pinned);
    Ok(out)
}

/// Quest-style baseline: chunk bounds via channel-wise min and max keys.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxIndex {
    pub chunk_size: usize,
    pub dim: usize,
    pub ranges: Vec<Range<usize>>,
    pub mins: Vec<Vec<f32>>,
    pub maxs: Vec<Vec<f32>>,
    keys: Vec<Vec<f32>>,
}

pub fn build_minmax_index(keys: &[Vec<f32>], chunk_size: usize) -> Result<MinMaxIndex> {
    let chunks = build_chunks(keys, chunk_size)?;
    let dim = keys[0].len();
    let mut mins = Vec::with_capacity(chunks.len());
    let mut maxs = Vec::with_capacity(chunks.len());
    let mut ranges = Vec::with_capacity(chunks.len());
    for chunk in &chunks {
        let mut lo = vec![f32::INFINITY; dim];
        let mut hi = vec![f32::NEG_INFINITY; dim];
        for key in &keys[chunk.token_range.clone()] {
            for j in 0..dim {
                lo[j] = lo[j].min(key[j]);
                hi[j] = hi[j].max(key[j]);
            }
        }
        mins.push(lo);
        maxs.push(hi);
        ranges.push(chunk.token_range.clone());
    }
    Ok(MinMaxIndex {
        chunk_size,
        dim,
        ranges,
        mins,
        maxs,
        keys: keys.to_vec(),
    })
}

impl MinMaxIndex {
    /// Upper bound on any member token's dot score.
    pub fn chunk_bound(&self, chunk_id: usize, query: &[f32]) -> f32 {
        let mut acc = 0f64;
        for j in 0..self.dim {
            let q = query[j] as f64;
            acc += (q * self.mins[chunk_id][j] as f64).max(q * self.maxs[chunk_id][j] as f64);
        }
        acc as f32
    }
}

impl CriticalSelector for MinMaxIndex {
    fn select_detailed(
        &self,
        query: &[f32],
        budget_k: usize,
        pinned: &BTreeSet<usize>,
        min_scored: usize,
    ) -> Result<SelectionDetail> {
        let nonpinned_total = self.context_length() - pinned.len();
        if budget_k > nonpinned_total {
            return Err(Error::BudgetTooLarge {
                k: budget_k,
                available: nonpinned_total,
            });
        }
        let mut groups: Vec<(f32, usize, Vec<usize>)> = self
            .ranges
            .iter()
            .enumerate()
            .map(|(chunk_id, range)| {
                (
                    self.chunk_bound(chunk_id, query),
                    chunk_id,
                    range.clone().collect(),
                )
            })
            .collect();
        groups.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let group_refs: Vec<(f32, usize, &[usize])> = groups
            .iter()
            .map(|(s, id, toks)| (*s, *id, toks.as_slice()))
            .collect();
        Ok(take_groups(
            &group_refs,
            &self.keys,
            query,
            budget_k,
            pinned,
            min_scored,
        ))
    }

    fn representative_count(&self) -> usize {
        2 * self.ranges.len()
    }

    fn context_length(&self) -> usize {
        self.ranges.last().map(|r| r.end).unwrap_or(0)
    }
}

/// Similarity-grouping baseline: k-means straight over token keys, no
/// chunking. Cluster centroids are the only representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatKMeansIndex {
    pub centroids: Vec<Vec<f32>>,
    /// Token ids per cluster, ascending.
    pub members: Vec<Vec<usize>>,
    pub dim: usize,
    n_tokens: usize,
    keys: Vec<Vec<f32>>,
}

pub fn build_flat_kmeans_index(
    keys: &[Vec<f32>],
    n_centroids: usize,
    seed: u64,
) -> Result<FlatKMeansIndex> {
    if keys.is_empty() {
        return Err(Error::EmptyInput("no keys to index"));
    }
    let fit = kmeans::kmeans(keys, n_centroids, seed)?;
    let mut members = vec![Vec::new(); n_centroids];
    for (token, &ci) in fit.assignment.iter().enumerate() {
        members[ci].push(token);
    }
    Ok(FlatKMeansIndex {
        centroids: fit.centroids,
        members,
        dim: keys[0].len(),
        n_tokens: keys.len(),
        keys: keys.to_vec(),
    })
}

impl CriticalSelector for FlatKMeansIndex {
    fn select_detailed(
        &self,
        query: &[f32],
        budget_k: usize,
        pinned: &BTreeSet<usize>,
        min_scored: usize,
    ) -> Result<SelectionDetail> {
        let nonpinned_total = self.n_tokens - pinned.len();
        if budget_k > nonpinned_total {
            return Err(Error::BudgetTooLarge {
                k: budget_k,
                available: nonpinned_total,
            });
        }
        let mut groups: Vec<(f32, usize, &[usize])> = self
            .centroids
            .iter()
            .enumerate()
            .map(|(ci, v)| (dot(query, v), ci, self.members[ci].as_slice()))
            .collect();
        groups.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        Ok(take_groups(
            &groups,
            &self.keys,
            query,
            budget_k,
            pinned,
            min_scored,
        ))
    }

    fn representative_count(&self) -> usize {
        self.centroids.len()
    }

    fn context_length(&self) -> usize {
        self.n_tokens
    }
}

/// Brute-force selector: the ground-truth oracle wearing the same trait.
#[derive(Debug, Clone)]
pub struct ExactSelector {
    keys: Vec<Vec<f32>>,
}

impl ExactSelector {
    pub fn new(keys: Vec<Vec<f32>>) -> Self {
        Self { keys }
    }
}

impl CriticalSelector for ExactSelector {
    fn select_detailed(
        &self,
        query: &[f32],
        budget_k: usize,
        pinned: &BTreeSet<usize>,
        _min_scored: usize,
    ) -> Result<SelectionDetail> {
        let scores = dot_scores(query, &self.keys)?;
        let chosen = topk_indices(&scores, budget_k, pinned)?;
        let scored = scores
            .0
            .iter()
            .enumerate()
            .filter(|(t, _)| !pinned.contains(t))
            .map(|(t, s)| (t, *s as f32))
            .collect();
        Ok(SelectionDetail { chosen, scored })
    }

    fn representative_count(&self) -> usize {
        self.keys.len()
    }

    fn context_length(&self) -> usize {
        self.keys.len()
    }
}

/// Fraction of the exact critical set that was selected.
pub fn recall(selected: &BTreeSet<usize>, exact: &BTreeSet<usize>) -> Result<f64> {
    if exact.is_empty() {
        return Err(Error::EmptyInput("recall against an empty exact set"));
    }
    let hit = selected.intersection(exact).count();
    Ok(hit as f64 / exact.len() as f64)
}

/// Convenience: exact Top-K as a `Scores`-level oracle lives in `attn`; this
/// wraps it for callers holding a selector.
pub fn exact_reference(
    keys: &[Vec<f32>],
    query: &[f32],
    budget_k: usize,
    pinned: &BTreeSet<usize>,
) -> Result<BTreeSet<usize>> {
    let scores = dot_scores(query, keys)?;
    topk_indices(&Scores(scores.0), budget_k, pinned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_keys(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f32>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect()
    }

    #[test]
    fn chunks_exact_division() {
        let keys = vec![vec![1.0f32], vec![3.0], vec![5.0], vec![7.0]];
        let chunks = build_chunks(&keys, 2).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].representative, vec![2.0]);
        assert_eq!(chunks[1].representative, vec![6.0]);
    }

    #[test]
    fn chunks_with_remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let keys = random_keys(&mut rng, 9, 3);
        let chunks = build_chunks(&keys, 4).unwrap();
        assert_eq!(chunks.len(), 3);
        assert_eq!(chunks[2].len(), 1);
        assert_eq!(chunks[2].token_range, 8..9);
    }

    #[test]
    fn chunk_size_one_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let keys = random_keys(&mut rng, 5, 4);
        let chunks = build_chunks(&keys, 1).unwrap();
        for (chunk, key) in chunks.iter().zip(&keys) {
            assert_eq!(&chunk.representative, key);
        }
    }

    #[test]
    fn empty_keys_error() {
        assert!(build_chunks(&[], 4).is_err());
    }

    #[test]
    fn representative_is_mean_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let keys = random_keys(&mut rng, 37, 8);
        for chunk in build_chunks(&keys, 5).unwrap() {
            for j in 0..8 {
                let mean: f64 = keys[chunk.token_range.clone()]
                    .iter()
                    .map(|k| k[j] as f64)
                    .sum::<f64>()
                    / chunk.len() as f64;
                assert!((chunk.representative[j] as f64 - mean).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn index_rejects_excess_centroids() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let keys = random_keys(&mut rng, 16, 4);
        assert!(build_index(&keys, 4, 5, 0).is_err());
        assert!(build_index(&keys, 4, 4, 0).is_ok());
    }

    #[test]
    fn separable_clusters_map_to_distinct_centroids() {
        // Two well-separated point clouds of chunk representatives.
        let mut keys = Vec::new();
        for i in 0..16 {
            let base = if i < 8 { 10.0f32 } else { -10.0 };
            keys.push(vec![base + (i % 8) as f32 * 0.01, base]);
        }
        let index = build_index(&keys, 4, 2, 0).unwrap();
        for centroid in &index.centroids {
            let sides: BTreeSet<bool> = centroid
                .members
                .iter()
                .map(|&cid| index.chunks[cid].representative[0] > 0.0)
                .collect();
            assert_eq!(sides.len(), 1, "centroid mixes the two clouds");
        }
    }

    #[test]
    fn degenerate_centroid_count_owns_single_chunks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let keys = random_keys(&mut rng, 12, 4);
        let index = build_index(&keys, 4, 3, 0).unwrap();
        let total: usize = index.centroids.iter().map(|c| c.members.len()).sum();
        assert_eq!(total, index.chunks.len());
        let index = build_index(&keys, 4, index.chunks.len(), 0).unwrap();
        for centroid in &index.centroids {
            assert_eq!(centroid.members.len(), 1);
            let chunk = &index.chunks[centroid.members[0]];
            assert_eq!(centroid.vector, chunk.representative);
        }
    }

    #[test]
    fn degenerate_index_equals_exact_topk() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..50 {
            let n = rng.random_range(8..64);
            let keys = random_keys(&mut rng, n, 6);
            let k = rng.random_range(1..=n / 2);
            let index = build_index(&keys, 1, keys.len(), trial).unwrap();
            let query: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let pinned = BTreeSet::new();
            let got = index.select_detailed(&query, k, &pinned, k).unwrap().chosen;
            let want = exact_reference(&keys, &query, k, &pinned).unwrap();
            assert_eq!(got, want, "trial {trial} n {n} k {k}");
        }
    }

    #[test]
    fn degenerate_index_respects_pinned() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let keys = random_keys(&mut rng, 32, 6);
        let index = build_index(&keys, 1, keys.len(), 0).unwrap();
        let query: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let pinned: BTreeSet<usize> = [0, 1, 30, 31].into_iter().collect();
        let got = index.select_detailed(&query, 8, &pinned, 8).unwrap().chosen;
        let want = exact_reference(&keys, &query, 8, &pinned).unwrap();
        assert_eq!(got, want);
        assert!(got.is_disjoint(&pinned));
    }

    #[test]
    fn select_critical_unions_pinned() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let keys = random_keys(&mut rng, 64, 6);
        let index = build_index(&keys, 4, 8, 0).unwrap();
        let query: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let cfg = SparsityConfig::new(8, 2, 4);
        let out = select_critical(&index, &query, &cfg).unwrap();
        for t in cfg.pinned_set(64) {
            assert!(out.contains(&t));
        }
        assert_eq!(out.len(), 8 + 6);
    }

    #[test]
    fn aligned_query_selects_matching_chunk_first() {
        // Orthogonal cluster directions; chunks align with clusters.
        let mut keys = Vec::new();
        for i in 0..12 {
            let mut v = vec![0.0f32; 3];
            v[i / 4] = 1.0;
            keys.push(v);
        }
        let index = build_index(&keys, 4, 3, 0).unwrap();
        let target = index.chunks[1].representative.clone();
        let detail = index.select_detailed(&target, 4, &BTreeSet::new(), 4).unwrap();
        assert_eq!(detail.chosen, (4..8).collect::<BTreeSet<_>>());
    }

    #[test]
    fn minmax_single_chunk_always_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let keys = random_keys(&mut rng, 4, 3);
        let index = build_minmax_index(&keys, 8).unwrap();
        let query: Vec<f32> = vec![0.3, -0.2, 0.9];
        let detail = index.select_detailed(&query, 2, &BTreeSet::new(), 2).unwrap();
        assert_eq!(detail.chosen.len(), 2);
    }

    #[test]
    fn minmax_degenerate_chunk_equals_mean_score() {
        // All keys in the chunk identical: min = max = mean.
        let keys = vec![vec![0.5f32, -1.0]; 4];
        let index = build_minmax_index(&keys, 4).unwrap();
        let query = vec![0.7f32, 0.1];
        let bound = index.chunk_bound(0, &query);
        let mean_score = dot(&query, &keys[0]);
        assert!((bound - mean_score).abs() < 1e-6);
    }

    #[test]
    fn minmax_bound_dominates_member_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let keys = random_keys(&mut rng, 16, 4);
            let index = build_minmax_index(&keys, 4).unwrap();
            let query: Vec<f32> = (0..4).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            for (chunk_id, range) in index.ranges.iter().enumerate() {
                let bound = index.chunk_bound(chunk_id, &query);
                let max_member = keys[range.clone()]
                    .iter()
                    .map(|k| dot(&query, k))
                    .fold(f32::NEG_INFINITY, f32::max);
                assert!(
                    bound >= max_member - 1e-5,
                    "bound {bound} < member max {max_member}"
                );
            }
        }
    }

    #[test]
    fn recall_basics() {
        let a: BTreeSet<usize> = [1, 2, 3].into_iter().collect();
        let b: BTreeSet<usize> = [4, 5].into_iter().collect();
        assert_eq!(recall(&a, &a).unwrap(), 1.0);
        assert_eq!(recall(&a, &b).unwrap(), 0.0);
        let sel: BTreeSet<usize> = [0, 1, 2, 9].into_iter().collect();
        let exact: BTreeSet<usize> = (0..8).collect();
        assert_eq!(recall(&sel, &exact).unwrap(), 0.375);
        assert!(recall(&a, &BTreeSet::new()).is_err());
    }

    #[test]
    fn representative_count_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 256;
        let keys = random_keys(&mut rng, n, 4);
        let index = build_index(&keys, 4, n / 16, 0).unwrap();
        assert_eq!(index.representative_count(), n / 4 + n / 16);
        assert!(index.representative_count() as f64 <= 5.0 / 16.0 * n as f64);
        let mm = build_minmax_index(&keys, 4).unwrap();
        assert_eq!(mm.representative_count(), 2 * (n / 4));
    }

    #[test]
    fn budget_too_large_is_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let keys = random_keys(&mut rng, 16, 4);
        let index = build_index(&keys, 4, 2, 0).unwrap();
        let query = vec![1.0f32, 0.0, 0.0, 0.0];
        let pinned: BTreeSet<usize> = (0..4).collect();
        assert!(index.select_detailed(&query, 13, &pinned, 13).is_err());
        assert!(index.select_detailed(&query, 12, &pinned, 12).is_ok());
    }
}
