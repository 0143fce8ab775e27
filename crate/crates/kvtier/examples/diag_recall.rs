//! Scratch: recall vs noise scale and positional smoothing.

use kvtier::index::{build_index, recall, CriticalSelector, ExactSelector};
use kvtier::workload::{generate_tuned, preset};

fn main() {
    let w = preset("locality-high", 4096, 16, 0).unwrap();
    let cfg = w.sparsity;
    let pinned = cfg.pinned_set(w.spec.context_length);
    let k = cfg.budget_k;

    println!("noise phi | mean hier recall (2 streams x 8 steps)");
    for noise in [0.12f64, 0.2, 0.3] {
        for phi in [0.9f64, 0.95, 0.98] {
            let trace = generate_tuned(&w.spec, noise, phi, 2.0).unwrap();
            let mut acc = 0.0;
            let mut cnt = 0;
            for flat in 0..2 {
                let keys = trace.keys_of(flat);
                let index = build_index(&keys, 4, w.spec.context_length / 16, 0).unwrap();
                let exact = ExactSelector::new(keys.clone());
                for step in (0..64).step_by(8) {
                    let q = trace.query(step, flat);
                    let got = index.select_detailed(q, k, &pinned, k).unwrap().chosen;
                    let want = exact.select_detailed(q, k, &pinned, k).unwrap().chosen;
                    acc += recall(&got, &want).unwrap();
                    cnt += 1;
                }
            }
            println!("{noise:.2} {phi:.2} | {:.3}", acc / cnt as f64);
        }
    }
}
