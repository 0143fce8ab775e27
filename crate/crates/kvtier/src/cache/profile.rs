//! Offline benefit/cost profiling for per-stream window sizing.
//!
//! For each stream and each candidate window size, replay the trace and
//! record how many transfer bytes the window saves relative to the smallest
//! candidate. The resulting curves feed the knapsack allocator.

use crate::cache::{replay_cache, CapacitySpec, EvictionPolicy, SelectionTrace};
use crate::entry_bytes;
use crate::error::{Error, Result};
use crate::types::LayerHeadId;

#[derive(Debug, Clone, PartialEq)]
pub struct BenefitProfile {
    pub streams: Vec<LayerHeadId>,
    /// Candidate window sizes in tokens, strictly ascending.
    pub candidate_windows: Vec<usize>,
    /// `benefit[stream][window]`: bytes saved vs the smallest window,
    /// clamped non-decreasing in the window size.
    pub benefit: Vec<Vec<f64>>,
    /// `cost[stream][window]`: resident bytes for that window size.
    pub cost: Vec<Vec<u64>>,
}

impl BenefitProfile {
    pub fn n_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn n_windows(&self) -> usize {
        self.candidate_windows.len()
    }
}

/// Measure transfer reduction per stream per candidate window size.
pub fn profile_benefit(
    sel: &SelectionTrace,
    policy: &EvictionPolicy,
    candidate_windows: &[usize],
) -> Result<BenefitProfile> {
    if candidate_windows.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least two candidate window sizes".into(),
        ));
    }
    if candidate_windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "candidate windows must be strictly ascending".into(),
        ));
    }
    let per_entry = entry_bytes(sel.dim);
    let n = sel.streams.len();

    // bytes[window][stream]
    let mut bytes = Vec::with_capacity(candidate_windows.len());
    for &w in candidate_windows {
        let report = replay_cache(
            sel,
            policy,
            &CapacitySpec::PerStream(sel.streams.iter().map(|&lh| (lh, w)).collect()),
            0,
        )?;
        let by_stream = report.per_stream_fetch_bytes();
        bytes.push(
            sel.streams
                .iter()
                .map(|lh| by_stream.get(lh).copied().unwrap_or(0))
                .collect::<Vec<u64>>(),
        );
    }

    let mut benefit = vec![vec![0f64; candidate_windows.len()]; n];
    let mut cost = vec![vec![0u64; candidate_windows.len()]; n];
    for s in 0..n {
        for (i, &w) in candidate_windows.iter().enumerate() {
            let saved = bytes[0][s] as f64 - bytes[i][s] as f64;
            benefit[s][i] = saved;
            cost[s][i] = w as u64 * per_entry;
        }
        // Isotonic clamp: transfer reduction never regresses with more room.
        for i in 1..candidate_windows.len() {
            if benefit[s][i] < benefit[s][i - 1] {
                benefit[s][i] = benefit[s][i - 1];
            }
        }
    }

    Ok(BenefitProfile {
        streams: sel.streams.clone(),
        candidate_windows: candidate_windows.to_vec(),
        benefit,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::{precompute_selections, SelectorKind};
    use crate::types::SparsityConfig;
    use crate::workload::{generate, TraceSpec};

    fn spec(persistence: f32, hetero: Option<Vec<f32>>) -> TraceSpec {
        TraceSpec {
            layers: 1,
            heads: 2,
            dim: 8,
            context_length: 1024,
            n_steps: 24,
            persistence,
            cluster_count: 16,
            heterogeneity: hetero,
            seed: 5,
        }
    }

    fn profile_for(persistence: f32, hetero: Option<Vec<f32>>) -> BenefitProfile {
        let trace = generate(&spec(persistence, hetero)).unwrap();
        let cfg = SparsityConfig::new(8, 0, 0);
        let sel = precompute_selections(&trace, &cfg, SelectorKind::Exact, 1.25).unwrap();
        profile_benefit(&sel, &EvictionPolicy::lookahead(), &[0, 8, 16, 24, 32]).unwrap()
    }

    #[test]
    fn smallest_window_anchors_benefit_at_zero() {
        let p = profile_for(0.9, None);
        for s in 0..p.n_streams() {
            assert_eq!(p.benefit[s][0], 0.0);
            for i in 1..p.n_windows() {
                assert!(p.benefit[s][i] >= p.benefit[s][i - 1]);
                assert!(p.cost[s][i] > p.cost[s][i - 1]);
            }
        }
    }

    #[test]
    fn no_locality_means_no_benefit() {
        let p = profile_for(0.0, None);
        let per_entry = entry_bytes(8) as f64;
        // i.i.d. queries re-select a resident token only by chance:
        // roughly w/n of the budget per step.
        let chance = 32.0 / 1024.0 * 8.0 * 24.0 * per_entry;
        for s in 0..p.n_streams() {
            let max_benefit = p.benefit[s][p.n_windows() - 1];
            assert!(
                max_benefit <= 4.0 * chance + 4.0 * per_entry,
                "stream {s} benefit {max_benefit} vs chance level {chance}"
            );
        }
    }

    #[test]
    fn persistent_streams_benefit_more() {
        let p = profile_for(0.9, Some(vec![0.95, 0.0]));
        let last = p.n_windows() - 1;
        assert!(
            p.benefit[0][last] >= 2.0 * p.benefit[1][last],
            "high-persistence stream should save at least twice as much: {} vs {}",
            p.benefit[0][last],
            p.benefit[1][last]
        );
    }

    #[test]
    fn rejects_bad_window_lists() {
        let trace = generate(&spec(0.5, None)).unwrap();
        let cfg = SparsityConfig::new(8, 0, 0);
        let sel = precompute_selections(&trace, &cfg, SelectorKind::Exact, 1.25).unwrap();
        assert!(profile_benefit(&sel, &EvictionPolicy::lookahead(), &[8]).is_err());
        assert!(profile_benefit(&sel, &EvictionPolicy::lookahead(), &[8, 8]).is_err());
    }
}
