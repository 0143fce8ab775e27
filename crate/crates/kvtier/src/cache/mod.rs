//! Attention-scored sliding-window cache for the fast tier.
//!
//! A [`WindowCache`] holds up to `capacity_tokens` non-pinned entries per
//! (layer, head) stream. Admission is demand-driven: every step's selected
//! critical set must be resident after [`admit_evict`]. Eviction ranks the
//! remaining residents by policy: lookahead discards the lowest current-step
//! attention score, LRU the least-recently-selected entry, and Belady — the
//! offline-optimal upper bound — the entry whose next selection lies farthest
//! in the future.

mod profile;
mod run;

pub use profile::{profile_benefit, BenefitProfile};
pub use run::{
    precompute_selections, replay_cache, replay_residents, run_trace, CacheReport, CacheRow,
    CapacitySpec, RunConfig, SelectionStep, SelectionTrace, SelectorKind,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::LayerHeadId;

/// Default per-step decay applied to the stored score of residents that were
/// not re-scored this step; stale entries drift toward eviction.
pub const DEFAULT_SCORE_DECAY: f32 = 0.9;

/// Default lookahead candidate-pool factor: scores are kept for the top
/// `1.25 * budget_k` tokens of each selection pass.
pub const DEFAULT_POOL_FACTOR: f32 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    Lookahead,
    Lru,
    Belady,
}

impl PolicyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Lookahead => "LA",
            PolicyKind::Lru => "LRU",
            PolicyKind::Belady => "BELADY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvictionPolicy {
    pub kind: PolicyKind,
    /// Candidate-pool size as a multiple of `budget_k` (lookahead scoring).
    pub pool_factor: f32,
    /// Per-step decay for unscored residents (lookahead only).
    pub gamma: f32,
}

impl EvictionPolicy {
    pub fn lookahead() -> Self {
        Self {
            kind: PolicyKind::Lookahead,
            pool_factor: DEFAULT_POOL_FACTOR,
            gamma: DEFAULT_SCORE_DECAY,
        }
    }

    pub fn lru() -> Self {
        Self {
            kind: PolicyKind::Lru,
            pool_factor: DEFAULT_POOL_FACTOR,
            gamma: DEFAULT_SCORE_DECAY,
        }
    }

    pub fn belady() -> Self {
        Self {
            kind: PolicyKind::Belady,
            pool_factor: DEFAULT_POOL_FACTOR,
            gamma: DEFAULT_SCORE_DECAY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pool_factor < 1.0 {
            return Err(Error::InvalidConfig(
                "lookahead pool must cover at least the selection budget".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig("gamma must be in [0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ResidentMeta {
    last_score: f32,
    last_hit_step: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub bytes_fetched: u64,
}

#[derive(Debug, Clone)]
pub struct WindowCache {
    pub owner: LayerHeadId,
    /// Maximum resident entries, excluding pinned.
    pub capacity_tokens: usize,
    resident: BTreeMap<usize, ResidentMeta>,
    pinned: BTreeSet<usize>,
    pub stats: CacheStats,
}

impl WindowCache {
    pub fn new(owner: LayerHeadId, capacity_tokens: usize, pinned: BTreeSet<usize>) -> Self {
        Self {
            owner,
            capacity_tokens,
            resident: BTreeMap::new(),
            pinned,
            stats: CacheStats::default(),
        }
    }

    pub fn resident_tokens(&self) -> BTreeSet<usize> {
        self.resident.keys().copied().collect()
    }

    pub fn resident_len(&self) -> usize {
        self.resident.len()
    }

    pub fn pinned(&self) -> &BTreeSet<usize> {
        &self.pinned
    }

    pub fn is_resident(&self, token: usize) -> bool {
        self.pinned.contains(&token) || self.resident.contains_key(&token)
    }

    /// Pre-seed residents (importance-guided warm start). Scores become the
    /// initial eviction ranks; capacity is enforced by keeping the best.
    pub fn seed_residents(&mut self, scored: &[(usize, f32)]) {
        let mut ranked: Vec<(usize, f32)> = scored
            .iter()
            .copied()
            .filter(|(t, _)| !self.pinned.contains(t))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(self.capacity_tokens);
        for (token, score) in ranked {
            self.resident.insert(
                token,
                ResidentMeta {
                    last_score: score,
                    last_hit_step: 0,
                },
            );
        }
    }

    /// Split `wanted` into resident hits (including pinned) and misses.
    /// Counters advance; contents do not change.
    pub fn lookup(&mut self, wanted: &BTreeSet<usize>) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let mut hits = BTreeSet::new();
        let mut misses = BTreeSet::new();
        for &t in wanted {
            if self.is_resident(t) {
                hits.insert(t);
            } else {
                misses.insert(t);
            }
        }
        self.stats.hits += hits.len() as u64;
        self.stats.misses += misses.len() as u64;
        (hits, misses)
    }
}

/// Admit this step's selection and evict back down to capacity.
///
/// `scores` must cover every selected token (the lookahead pool). For Belady,
/// `next_use` maps a token to the next step at which it will be selected;
/// absent means never again. Returns the evicted set.
pub fn admit_evict(
    cache: &mut WindowCache,
    step: u64,
    selection: &BTreeSet<usize>,
    scores: &HashMap<usize, f32>,
    policy: &EvictionPolicy,
    next_use: Option<&HashMap<usize, u64>>,
) -> Result<BTreeSet<usize>> {
    policy.validate()?;
    if selection.len() > cache.capacity_tokens {
        return Err(Error::InvalidConfig(format!(
            "selection of {} exceeds cache capacity {}",
            selection.len(),
            cache.capacity_tokens
        )));
    }
    if policy.kind == PolicyKind::Belady && next_use.is_none() {
        return Err(Error::InvalidConfig(
            "Belady eviction requires the future access sequence".into(),
        ));
    }

    // Refresh scores for everything scored this step; decay the rest.
    if policy.kind == PolicyKind::Lookahead {
        for (token, meta) in cache.resident.iter_mut() {
            match scores.get(token) {
                Some(&s) => meta.last_score = s,
                None => meta.last_score *= policy.gamma,
            }
        }
    } else {
        for (token, meta) in cache.resident.iter_mut() {
            if let Some(&s) = scores.get(token) {
                meta.last_score = s;
            }
        }
    }

    // Admit: selected tokens become resident with fresh score and recency.
    for &token in selection {
        debug_assert!(!cache.pinned.contains(&token), "selection must be non-pinned");
        let score = *scores.get(&token).ok_or_else(|| {
            Error::InvalidConfig(format!("selected token {token} missing from score pool"))
        })?;
        cache
            .resident
            .entry(token)
            .and_modify(|m| {
                m.last_score = score;
                m.last_hit_step = step;
            })
            .or_insert(ResidentMeta {
                last_score: score,
                last_hit_step: step,
            });
    }

    // Evict down to capacity; the current selection is protected.
    let mut evicted = BTreeSet::new();
    if cache.resident.len() > cache.capacity_tokens {
        let mut candidates: Vec<(usize, ResidentMeta)> = cache
            .resident
            .iter()
            .filter(|(t, _)| !selection.contains(t))
            .map(|(t, m)| (*t, *m))
            .collect();
        match policy.kind {
            PolicyKind::Lookahead => {
                candidates.sort_by(|a, b| {
                    a.1.last_score
                        .total_cmp(&b.1.last_score)
                        .then_with(|| a.0.cmp(&b.0))
                });
            }
            PolicyKind::Lru => {
                candidates.sort_by(|a, b| {
                    a.1.last_hit_step
                        .cmp(&b.1.last_hit_step)
                        .then_with(|| a.0.cmp(&b.0))
                });
            }
            PolicyKind::Belady => {
                let uses = next_use.unwrap();
                // Farthest next use first; never-used-again sorts before any
                // finite distance.
                candidates.sort_by(|a, b| {
                    let ua = uses.get(&a.0).copied();
                    let ub = uses.get(&b.0).copied();
                    match (ua, ub) {
                        (None, None) => a.0.cmp(&b.0),
                        (None, Some(_)) => std::cmp::Ordering::Less,
                        (Some(_), None) => std::cmp::Ordering::Greater,
                        (Some(x), Some(y)) => y.cmp(&x).then_with(|| a.0.cmp(&b.0)),
                    }
                });
            }
        }
        let excess = cache.resident.len() - cache.capacity_tokens;
        for (token, _) in candidates.into_iter().take(excess) {
            cache.resident.remove(&token);
            evicted.insert(token);
        }
    }
    debug_assert!(cache.resident.len() <= cache.capacity_tokens);
    Ok(evicted)
}
