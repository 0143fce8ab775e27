//! Scratch: bands under hier-index selection vs exact selection.

use kvtier::cache::{
    precompute_selections, replay_cache, CapacitySpec, EvictionPolicy, PolicyKind, SelectorKind,
};
use kvtier::workload::{generate_tuned, preset, GenTuning};

fn mean(v: &[f64]) -> f64 { v.iter().sum::<f64>() / v.len() as f64 }

fn main() {
    let tuning = GenTuning {
        fast_exponent: 2.2,
        slow_exponent: 0.08,
        fast_cluster_frac: 0.15,
        fast_crash_scale: 0.0,
        ..GenTuning::default()
    };
    let seeds: Vec<u64> = (0..4).collect();
    for gamma in [0.9f32, 0.5] {
        for hier in [false, true] {
            let mut ovl = Vec::new();
            let mut la = Vec::new();
            let mut lru = Vec::new();
            let mut bel = Vec::new();
            let mut ratios = Vec::new();
            for &seed in &seeds {
                let w = preset("locality-high", 16384, 64, seed).unwrap();
                let selkind = if hier {
                    SelectorKind::Hier { chunk_size: 4, n_centroids: w.spec.context_length / 16, seed }
                } else { SelectorKind::Exact };
                let trace = generate_tuned(&w.spec, tuning).unwrap();
                let sel = precompute_selections(&trace, &w.sparsity, selkind, 1.25).unwrap();
                let mut acc = 0.0; let mut cnt = 0;
                for t in 0..sel.steps.len() - 1 {
                    for f in 0..sel.streams.len() {
                        let a = &sel.steps[t].chosen[f];
                        let b = &sel.steps[t + 1].chosen[f];
                        acc += a.intersection(b).count() as f64 / w.sparsity.budget_k as f64;
                        cnt += 1;
                    }
                }
                ovl.push(acc / cnt as f64);
                let cap = CapacitySpec::Uniform { multiplier: 2 };
                let lap = EvictionPolicy { gamma, ..EvictionPolicy::lookahead() };
                la.push(replay_cache(&sel, &lap, &cap, seed).unwrap().hit_rate());
                lru.push(replay_cache(&sel, &EvictionPolicy::lru(), &cap, seed).unwrap().hit_rate());
                bel.push(replay_cache(&sel, &EvictionPolicy { kind: PolicyKind::Belady, ..lap }, &cap, seed).unwrap().hit_rate());

                let w = preset("locality-high", 16384, 16, seed).unwrap();
                let selkind = if hier {
                    SelectorKind::Hier { chunk_size: 4, n_centroids: w.spec.context_length / 16, seed }
                } else { SelectorKind::Exact };
                let trace = generate_tuned(&w.spec, tuning).unwrap();
                let sel = precompute_selections(&trace, &w.sparsity, selkind, 1.25).unwrap();
                let b0 = replay_cache(&sel, &lap, &CapacitySpec::Uniform { multiplier: 0 }, seed).unwrap().total_fetch_bytes();
                let b3 = replay_cache(&sel, &lap, &CapacitySpec::Uniform { multiplier: 3 }, seed).unwrap().total_fetch_bytes();
                ratios.push(b3 as f64 / b0 as f64);
            }
            println!(
                "gamma {:.1} hier {} | ovl {:.3} | LA {:.3} LRU {:.3} gap {:+.2}pp BEL {:.3} | x3/x0 {:.3}",
                gamma, hier as u8, mean(&ovl), mean(&la), mean(&lru),
                (mean(&la) - mean(&lru)) * 100.0, mean(&bel), mean(&ratios)
            );
        }
    }
}
