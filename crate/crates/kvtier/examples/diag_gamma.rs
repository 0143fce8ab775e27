//! Scratch: does gamma change eviction outcomes at all?

use kvtier::cache::{
    precompute_selections, replay_residents, CapacitySpec, EvictionPolicy, SelectorKind,
};
use kvtier::workload::{generate_tuned, preset, GenTuning};

fn main() {
    let w = preset("locality-high", 16384, 64, 0).unwrap();
    let tuning = GenTuning { jump_rate_scale: 0.3, ..GenTuning::default() };
    let trace = generate_tuned(&w.spec, tuning).unwrap();
    let sel = precompute_selections(&trace, &w.sparsity, SelectorKind::Exact, 1.25).unwrap();
    let _ = CapacitySpec::Uniform { multiplier: 2 };

    let hi = replay_residents(&sel, &EvictionPolicy { gamma: 0.9, ..EvictionPolicy::lookahead() }, 512, 0).unwrap();
    let lo = replay_residents(&sel, &EvictionPolicy { gamma: 0.05, ..EvictionPolicy::lookahead() }, 512, 0).unwrap();
    let mut diffs = 0;
    for (a, b) in hi.iter().zip(&lo) {
        if a != b { diffs += 1; }
    }
    println!("resident sets differ at {diffs}/{} steps", hi.len());
    // Sample pool coverage of residents at step 20
    let pool = &sel.steps[20].pool[0];
    let resident = &hi[19];
    let outside = resident.iter().filter(|t| !pool.contains_key(t)).count();
    println!("step 20: residents {} | outside pool {}", resident.len(), outside);
}
