//! Trace replay: selection precomputation plus per-policy cache simulation.
//!
//! Selection decisions depend only on the trace and the selector, never on
//! the cache, so one selection pass can be replayed under many policies and
//! window sizes. That factoring is also what gives Belady its future.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cache::{admit_evict, EvictionPolicy, WindowCache};
use crate::entry_bytes;
use crate::error::{Error, Result};
use crate::index::{
    build_flat_kmeans_index, build_index, build_minmax_index, CriticalSelector, ExactSelector,
};
use crate::types::{LayerHeadId, SparsityConfig};
use crate::workload::DecodingTrace;

/// Which index drives per-step selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SelectorKind {
    /// Brute-force dot products over all keys (the oracle path).
    Exact,
    /// Hierarchical chunk/centroid index.
    Hier {
        chunk_size: usize,
        n_centroids: usize,
        seed: u64,
    },
    /// Min/max channel-bound chunk index.
    MinMax { chunk_size: usize },
    /// Flat k-means over token keys.
    FlatKMeans { n_centroids: usize, seed: u64 },
}

impl SelectorKind {
    pub fn label(&self) -> &'static str {
        match self {
            SelectorKind::Exact => "exact",
            SelectorKind::Hier { .. } => "hier",
            SelectorKind::MinMax { .. } => "minmax",
            SelectorKind::FlatKMeans { .. } => "flat-kmeans",
        }
    }

    pub fn build(&self, keys: Vec<Vec<f32>>) -> Result<Box<dyn CriticalSelector>> {
        Ok(match *self {
            SelectorKind::Exact => Box::new(ExactSelector::new(keys)),
            SelectorKind::Hier {
                chunk_size,
                n_centroids,
                seed,
            } => Box::new(build_index(&keys, chunk_size, n_centroids, seed)?),
            SelectorKind::MinMax { chunk_size } => Box::new(build_minmax_index(&keys, chunk_size)?),
            SelectorKind::FlatKMeans { n_centroids, seed } => {
                Box::new(build_flat_kmeans_index(&keys, n_centroids, seed)?)
            }
        })
    }
}

/// One step's decisions for every stream.
#[derive(Debug, Clone)]
pub struct SelectionStep {
    /// Selected non-pinned tokens, per flat stream.
    pub chosen: Vec<BTreeSet<usize>>,
    /// Lookahead score pool (top-M per-token dot scores), per flat stream.
    pub pool: Vec<HashMap<usize, f32>>,
}

/// Policy-independent selection decisions for a whole trace.
#[derive(Debug, Clone)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
    pub streams: Vec<LayerHeadId>,
    pub budget_k: usize,
    pub pinned: BTreeSet<usize>,
    pub dim: usize,
    /// Fig-style reuse curve: per step t, mean over streams of the fraction
    /// of step t+1's selection already inside step t's score pool.
    pub pool_next_overlap: Vec<f64>,
}

/// Run selection for every step and stream.
pub fn precompute_selections(
    trace: &DecodingTrace,
    cfg: &SparsityConfig,
    selector: SelectorKind,
    pool_factor: f32,
) -> Result<SelectionTrace> {
    let spec = &trace.spec;
    cfg.validate(spec.context_length)?;
    if pool_factor < 1.0 {
        return Err(Error::InvalidConfig("pool_factor must be >= 1".into()));
    }
    let pinned = cfg.pinned_set(spec.context_length);
    let pool_size = ((cfg.budget_k as f64 * pool_factor as f64).ceil() as usize)
        .min(spec.context_length - pinned.len());

    let streams = spec.stream_ids();
    let selectors: Vec<Box<dyn CriticalSelector>> = (0..streams.len())
        .map(|flat| selector.build(trace.keys_of(flat)))
        .collect::<Result<_>>()?;

    let mut steps = Vec::with_capacity(spec.n_steps);
    for step in 0..spec.n_steps {
        let mut chosen = Vec::with_capacity(streams.len());
        let mut pool = Vec::with_capacity(streams.len());
        for (flat, sel) in selectors.iter().enumerate() {
            let detail =
                sel.select_detailed(trace.query(step, flat), cfg.budget_k, &pinned, pool_size)?;
            // Pool: top-M scored tokens, always covering the chosen set.
            let mut ranked = detail.scored.clone();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let mut pool_map: HashMap<usize, f32> = ranked.into_iter().take(pool_size).collect();
            for &(t, s) in &detail.scored {
                if detail.chosen.contains(&t) {
                    pool_map.insert(t, s);
                }
            }
            chosen.push(detail.chosen);
            pool.push(pool_map);
        }
        steps.push(SelectionStep { chosen, pool });
    }

    let mut pool_next_overlap = Vec::with_capacity(spec.n_steps.saturating_sub(1));
    for t in 0..spec.n_steps.saturating_sub(1) {
        let mut acc = 0f64;
        for flat in 0..streams.len() {
            let pool: &HashMap<usize, f32> = &steps[t].pool[flat];
            let next = &steps[t + 1].chosen[flat];
            let inter = next.iter().filter(|tok| pool.contains_key(tok)).count();
            acc += inter as f64 / cfg.budget_k as f64;
        }
        pool_next_overlap.push(acc / streams.len() as f64);
    }

    Ok(SelectionTrace {
        steps,
        streams,
        budget_k: cfg.budget_k,
        pinned,
        dim: spec.dim,
        pool_next_overlap,
    })
}

/// Per-stream cache capacity, excluding pinned tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CapacitySpec {
    /// `multiplier x budget_k` for every stream.
    Uniform { multiplier: usize },
    /// Explicit token capacity per stream (2D allocation output).
    PerStream(BTreeMap<LayerHeadId, usize>),
}

impl CapacitySpec {
    fn capacity_for(&self, lh: LayerHeadId, budget_k: usize) -> Result<usize> {
        match self {
            CapacitySpec::Uniform { multiplier } => Ok(multiplier * budget_k),
            CapacitySpec::PerStream(map) => map.get(&lh).copied().ok_or_else(|| {
                Error::ShapeMismatch(format!("no capacity assigned for stream {lh}"))
            }),
        }
    }

    fn mean_multiplier(&self, budget_k: usize, streams: &[LayerHeadId]) -> f64 {
        match self {
            CapacitySpec::Uniform { multiplier } => *multiplier as f64,
            CapacitySpec::PerStream(map) => {
                let total: usize = streams.iter().filter_map(|lh| map.get(lh)).sum();
                total as f64 / (streams.len() as f64 * budget_k as f64)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRow {
    pub step: usize,
    pub layer: usize,
    pub head: usize,
    pub hits: u64,
    pub misses: u64,
    pub fetch_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheReport {
    pub rows: Vec<CacheRow>,
    pub policy: String,
    pub window_mult: f64,
    pub seed: u64,
    pub n_steps: usize,
    pub pool_next_overlap: Vec<f64>,
}

impl CacheReport {
    /// Hits over wanted entries, pinned included.
    pub fn hit_rate(&self) -> f64 {
        let hits: u64 = self.rows.iter().map(|r| r.hits).sum();
        let total: u64 = self.rows.iter().map(|r| r.hits + r.misses).sum();
        if total == 0 {
            return 0.0;
        }
        hits as f64 / total as f64
    }

    pub fn total_fetch_bytes(&self) -> u64 {
        self.rows.iter().map(|r| r.fetch_bytes).sum()
    }

    pub fn mean_step_fetch_bytes(&self) -> f64 {
        if self.n_steps == 0 {
            return 0.0;
        }
        self.total_fetch_bytes() as f64 / self.n_steps as f64
    }

    pub fn per_step_fetch_bytes(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.n_steps];
        for row in &self.rows {
            out[row.step] += row.fetch_bytes;
        }
        out
    }

    pub fn per_stream_fetch_bytes(&self) -> BTreeMap<LayerHeadId, u64> {
        let mut out = BTreeMap::new();
        for row in &self.rows {
            *out.entry(LayerHeadId::new(row.layer, row.head)).or_insert(0) += row.fetch_bytes;
        }
        out
    }
}

/// Replay precomputed selections through per-stream caches under one policy.
pub fn replay_cache(
    sel: &SelectionTrace,
    policy: &EvictionPolicy,
    capacity: &CapacitySpec,
    seed: u64,
) -> Result<CacheReport> {
    policy.validate()?;
    let per_entry = entry_bytes(sel.dim);

    let mut caches: Vec<WindowCache> = sel
        .streams
        .iter()
        .map(|&lh| {
            Ok(WindowCache::new(
                lh,
                capacity.capacity_for(lh, sel.budget_k)?,
                sel.pinned.clone(),
            ))
        })
        .collect::<Result<_>>()?;

    // Belady future: per stream, each token's sorted selection steps.
    let occurrences: Option<Vec<HashMap<usize, Vec<u64>>>> =
        if policy.kind == super::PolicyKind::Belady {
            let mut per_stream = vec![HashMap::<usize, Vec<u64>>::new(); sel.streams.len()];
            for (step, s) in sel.steps.iter().enumerate() {
                for (flat, chosen) in s.chosen.iter().enumerate() {
                    for &t in chosen {
                        per_stream[flat].entry(t).or_default().push(step as u64);
                    }
                }
            }
            Some(per_stream)
        } else {
            None
        };

    let mut rows = Vec::with_capacity(sel.steps.len() * sel.streams.len());
    for (step, s) in sel.steps.iter().enumerate() {
        for (flat, lh) in sel.streams.iter().enumerate() {
            let cache = &mut caches[flat];
            let chosen = &s.chosen[flat];
            let mut wanted: BTreeSet<usize> = chosen.clone();
            wanted.extend(sel.pinned.iter().copied());

            let (hits, misses) = cache.lookup(&wanted);
            let fetch_bytes = misses.len() as u64 * per_entry;
            cache.stats.bytes_fetched += fetch_bytes;

            // Window x0: entries are used once and dropped, never admitted.
            if cache.capacity_tokens > 0 {
                let next_use: Option<HashMap<usize, u64>> = occurrences.as_ref().map(|occ| {
                    let table = &occ[flat];
                    let mut m = HashMap::new();
                    for &t in cache.resident_tokens().iter().chain(chosen.iter()) {
                        if let Some(steps) = table.get(&t) {
                            let pos = steps.partition_point(|&u| u <= step as u64);
                            if pos < steps.len() {
                                m.insert(t, steps[pos]);
                            }
                        }
                    }
                    m
                });

                admit_evict(
                    cache,
                    step as u64,
                    chosen,
                    &s.pool[flat],
                    policy,
                    next_use.as_ref(),
                )?;
            }
            debug_assert_eq!(hits.len() + misses.len(), wanted.len());

            rows.push(CacheRow {
                step,
                layer: lh.layer,
                head: lh.head,
                hits: hits.len() as u64,
                misses: misses.len() as u64,
                fetch_bytes,
            });
        }
    }

    Ok(CacheReport {
        rows,
        policy: policy.kind.label().to_string(),
        window_mult: capacity.mean_multiplier(sel.budget_k, &sel.streams),
        seed,
        n_steps: sel.steps.len(),
        pool_next_overlap: sel.pool_next_overlap.clone(),
    })
}

/// Replay and expose the per-step resident sets of one stream. Test hook for
/// retention properties.
pub fn replay_residents(
    sel: &SelectionTrace,
    policy: &EvictionPolicy,
    capacity_tokens: usize,
    flat: usize,
) -> Result<Vec<BTreeSet<usize>>> {
    let mut cache = WindowCache::new(sel.streams[flat], capacity_tokens, sel.pinned.clone());
    let mut out = Vec::with_capacity(sel.steps.len());
    for (step, s) in sel.steps.iter().enumerate() {
        if cache.capacity_tokens > 0 {
            admit_evict(
                &mut cache,
                step as u64,
                &s.chosen[flat],
                &s.pool[flat],
                policy,
                None,
            )?;
        }
        out.push(cache.resident_tokens());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub selector: SelectorKind,
    pub policy: EvictionPolicy,
    pub capacity: CapacitySpec,
}

/// Select, look up, fetch, admit and evict across the whole trace.
pub fn run_trace(
    trace: &DecodingTrace,
    cfg: &SparsityConfig,
    run: &RunConfig,
    seed: u64,
) -> Result<CacheReport> {
    let sel = precompute_selections(trace, cfg, run.selector, run.policy.pool_factor)?;
    replay_cache(&sel, &run.policy, &run.capacity, seed)
}
