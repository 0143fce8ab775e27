//! Scratch harness: sweeps generator tuning against the pinned bands.

use kvtier::cache::{
    precompute_selections, replay_cache, CapacitySpec, EvictionPolicy, SelectorKind,
};
use kvtier::index::{build_index, recall, CriticalSelector, ExactSelector};
use kvtier::workload::{generate_tuned, preset, GenTuning};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() {
    let seeds: Vec<u64> = (0..4).collect();
    println!("afrac death wsig rscale gamma | ovl256 | LA LRU gap BEL | x3/x0 | recall");
    for (afrac, death, wsig, rscale, gamma) in [
        (0.125f64, 0.5f64, 0.5f64, 0.5f64, 0.9f32),
        (0.125, 0.5, 0.5, 0.5, 0.5),
        (0.125, 0.25, 0.5, 0.5, 0.5),
        (0.125, 1.0, 0.5, 0.5, 0.5),
        (0.0625, 0.5, 0.5, 0.5, 0.5),
        (0.25, 0.5, 0.5, 0.5, 0.5),
        (0.125, 0.5, 0.8, 0.5, 0.5),
        (0.125, 0.5, 0.5, 0.3, 0.5),
    ] {
        let tuning = GenTuning {
            active_frac: afrac,
            death_scale: death,
            weight_sigma: wsig,
            resid_scale: rscale,
            ..GenTuning::default()
        };
        let la_policy = EvictionPolicy { gamma, ..EvictionPolicy::lookahead() };
        let mut overlaps = Vec::new();
        let mut la = Vec::new();
        let mut lru = Vec::new();
        let mut bel = Vec::new();
        let mut ratios = Vec::new();
        let mut recalls = Vec::new();

        for &seed in &seeds {
            let w = preset("locality-high", 16384, 64, seed).unwrap();
            let trace = generate_tuned(&w.spec, tuning).unwrap();
            let sel =
                precompute_selections(&trace, &w.sparsity, SelectorKind::Exact, 1.25).unwrap();
            let mut acc = 0.0;
            let mut cnt = 0;
            for t in 0..sel.steps.len() - 1 {
                for f in 0..sel.streams.len() {
                    let a = &sel.steps[t].chosen[f];
                    let b = &sel.steps[t + 1].chosen[f];
                    acc += a.intersection(b).count() as f64 / w.sparsity.budget_k as f64;
                    cnt += 1;
                }
            }
            overlaps.push(acc / cnt as f64);
            let cap = CapacitySpec::Uniform { multiplier: 2 };
            la.push(replay_cache(&sel, &la_policy, &cap, seed).unwrap().hit_rate());
            lru.push(replay_cache(&sel, &EvictionPolicy::lru(), &cap, seed).unwrap().hit_rate());
            bel.push(replay_cache(&sel, &EvictionPolicy::belady(), &cap, seed).unwrap().hit_rate());

            let w = preset("locality-high", 16384, 16, seed).unwrap();
            let trace = generate_tuned(&w.spec, tuning).unwrap();
            let sel =
                precompute_selections(&trace, &w.sparsity, SelectorKind::Exact, 1.25).unwrap();
            let b0 = replay_cache(&sel, &la_policy, &CapacitySpec::Uniform { multiplier: 0 }, seed).unwrap().total_fetch_bytes();
            let b3 = replay_cache(&sel, &la_policy, &CapacitySpec::Uniform { multiplier: 3 }, seed).unwrap().total_fetch_bytes();
            ratios.push(b3 as f64 / b0 as f64);

            // recall at n=4096, 6.25%, few steps
            let w = preset("locality-high", 4096, 16, seed).unwrap();
            let trace = generate_tuned(&w.spec, tuning).unwrap();
            let cfg = w.sparsity;
            let pinned = cfg.pinned_set(w.spec.context_length);
            let keys = trace.keys_of(0);
            let index = build_index(&keys, 4, w.spec.context_length / 16, seed).unwrap();
            let exact = ExactSelector::new(keys.clone());
            let mut acc = 0.0;
            let mut cnt = 0;
            for step in (0..64).step_by(16) {
                let q = trace.query(step, 0);
                let got = index.select_detailed(q, cfg.budget_k, &pinned, cfg.budget_k).unwrap().chosen;
                let want = exact.select_detailed(q, cfg.budget_k, &pinned, cfg.budget_k).unwrap().chosen;
                acc += recall(&got, &want).unwrap();
                cnt += 1;
            }
            recalls.push(acc / cnt as f64);
        }
        println!(
            "{:.3} {:.2} {:.1} {:.1} {:.1} | {:.3} | {:.3} {:.3} {:+.2}pp {:.3} | {:.3} | {:.3}",
            afrac, death, wsig, rscale, gamma, mean(&overlaps), mean(&la), mean(&lru),
            (mean(&la) - mean(&lru)) * 100.0, mean(&bel), mean(&ratios), mean(&recalls)
        );
    }
}
