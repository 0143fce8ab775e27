//! Scratch: per-class (fast/slow cluster) selection share and miss rates.

use kvtier::cache::{precompute_selections, replay_residents, CapacitySpec, EvictionPolicy, SelectorKind};
use kvtier::workload::{generate_tuned, preset, GenTuning};

fn main() {
    let tuning = GenTuning {
        fast_exponent: 3.0,
        slow_exponent: 0.15,
        fast_cluster_frac: 0.2,
        ..GenTuning::default()
    };
    for (denom, mult) in [(64usize, 2usize), (16, 3)] {
        let w = preset("locality-high", 16384, denom, 0).unwrap();
        let trace = generate_tuned(&w.spec, tuning).unwrap();
        let sel = precompute_selections(&trace, &w.sparsity, SelectorKind::Exact, 1.25).unwrap();
        let n = w.spec.context_length;
        let cc = w.spec.cluster_count;
        let is_fast = |tok: usize| {
            let c = tok * cc / n;
            let f = 0.2f64;
            (((c + 1) as f64) * f).floor() > ((c as f64) * f).floor()
        };
        // replay stream 0 with lookahead, capacity mult*k
        let k = w.sparsity.budget_k;
        let residents = replay_residents(&sel, &EvictionPolicy{gamma: 0.5, ..EvictionPolicy::lookahead()}, mult * k, 0).unwrap();
        let mut sel_fast = 0usize; let mut sel_slow = 0usize;
        let mut miss_fast = 0usize; let mut miss_slow = 0usize;
        for (step, s) in sel.steps.iter().enumerate().skip(1) {
            let resident = &residents[step - 1];
            for &t in &s.chosen[0] {
                let fast = is_fast(t);
                if fast { sel_fast += 1 } else { sel_slow += 1 }
                if !resident.contains(&t) {
                    if fast { miss_fast += 1 } else { miss_slow += 1 }
                }
            }
        }
        println!(
            "k={k} x{mult}: fast share {:.3}, miss|fast {:.3}, miss|slow {:.3}, total miss {:.3}",
            sel_fast as f64 / (sel_fast + sel_slow) as f64,
            miss_fast as f64 / sel_fast.max(1) as f64,
            miss_slow as f64 / sel_slow.max(1) as f64,
            (miss_fast + miss_slow) as f64 / (sel_fast + sel_slow) as f64
        );
    }
}
