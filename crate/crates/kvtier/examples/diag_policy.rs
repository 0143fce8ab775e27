//! Scratch: how do LA and LRU resident sets actually diverge, step by step?

use kvtier::cache::{precompute_selections, replay_residents, EvictionPolicy, SelectorKind};
use kvtier::workload::{generate_tuned, preset, GenTuning};

fn main() {
    let tuning = GenTuning::default();
    let w = preset("locality-high", 16384, 64, 0).unwrap();
    let trace = generate_tuned(&w.spec, tuning).unwrap();
    let sel = precompute_selections(&trace, &w.sparsity, SelectorKind::Exact, 1.25).unwrap();
    let k = w.sparsity.budget_k;

    let la = replay_residents(&sel, &EvictionPolicy { gamma: 0.4, ..EvictionPolicy::lookahead() }, 2 * k, 0).unwrap();
    let lru = replay_residents(&sel, &EvictionPolicy::lru(), 2 * k, 0).unwrap();

    let mut div_sum = 0usize;
    let mut la_only_hits = 0usize;
    let mut lru_only_hits = 0usize;
    let mut steps = 0usize;
    for t in 0..sel.steps.len() - 1 {
        let next = &sel.steps[t + 1].chosen[0];
        let ra = &la[t];
        let rl = &lru[t];
        let la_only: Vec<usize> = ra.difference(rl).copied().collect();
        let lru_only: Vec<usize> = rl.difference(ra).copied().collect();
        div_sum += la_only.len();
        la_only_hits += la_only.iter().filter(|t| next.contains(t)).count();
        lru_only_hits += lru_only.iter().filter(|t| next.contains(t)).count();
        steps += 1;
    }
    println!(
        "stream0: mean divergence {:.1} tokens/step; next-step hits from LA-only {:.2}/step, LRU-only {:.2}/step",
        div_sum as f64 / steps as f64,
        la_only_hits as f64 / steps as f64,
        lru_only_hits as f64 / steps as f64,
    );
}
