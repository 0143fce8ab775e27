//! Synthetic decoding-trace generation and the KVTR binary trace format.
//!
//! A trace is a desk-scale surrogate for an LLM decode run: a fixed prefix of
//! key/value vectors per (layer, head) stream plus one query vector per stream
//! per decoding step. Temporal locality — the property that consecutive steps
//! attend to overlapping critical sets — is a single knob: the query process
//! is an AR(1) walk on the unit sphere with autocorrelation `persistence`.
//! Keys are drawn around contiguous cluster centers so chunk- and
//! centroid-level structure exists for the index to exploit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{KVEntry, LayerHeadId, SparsityConfig};
use crate::wire;

/// Identifier of the only generator algorithm the format currently allows:
/// ChaCha8 streams sub-seeded per (layer, head) by splitmix64.
pub const RNG_ALGO_CHACHA8: u32 = 1;

const TRACE_MAGIC: &[u8; 4] = b"KVTR";
const TRACE_VERSION: u32 = 1;

/// Generator tuning constants. These are part of the format semantics: a
/// trace regenerated from its embedded spec must be bit-identical, so the
/// values are fixed here rather than carried per trace.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenTuning {
    /// Spread of per-key Gaussian noise around its cluster center before
    /// renormalization.
    pub key_noise: f64,
    /// Positional smoothing of the key noise: the deviation vector follows
    /// an AR(1) chain along the token index, so scores vary smoothly across
    /// neighboring tokens the way semantically contiguous text does. With
    /// white per-token noise no chunk-granularity index can recover the
    /// critical set.
    pub key_smoothing: f64,
    /// Fraction of clusters active (attended) at any step. The query is a
    /// weighted mixture of the active clusters' directions plus a small
    /// isotropic residual, which is how decoding attends: a handful of
    /// topics at a time.
    pub active_frac: f64,
    /// Per-step, per-topic death probability is `death_scale * (1 - alpha)`.
    /// A dying topic is replaced by a fresh one. Deaths are abrupt: the
    /// score collapse is visible to score-ranked eviction immediately but to
    /// recency only after the fact. A reversible drift-only walk leaves
    /// "recently dropped" and "about to return" statistically identical,
    /// which collapses the distinction between the two policies.
    pub death_scale: f64,
    /// Log-scale spread of topic weights.
    pub weight_sigma: f64,
    /// Retention exponent for topic-weight and residual drift: retention is
    /// `alpha^weight_exponent` per step.
    pub weight_exponent: f64,
    /// Scale of the isotropic residual relative to a unit topic direction.
    pub resid_scale: f64,
}

impl Default for GenTuning {
    fn default() -> Self {
        Self {
            key_noise: 0.12,
            key_smoothing: 0.98,
            active_frac: 0.125,
            death_scale: 0.5,
            weight_sigma: 0.5,
            weight_exponent: 1.0,
            resid_scale: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub layers: usize,
    pub heads: usize,
    pub dim: usize,
    pub context_length: usize,
    pub n_steps: usize,
    /// Query-drift autocorrelation in [0, 1]; 1 freezes the query.
    pub persistence: f32,
    /// Number of contiguous key clusters.
    pub cluster_count: usize,
    /// Optional per-(layer, head) persistence override, flat (l, h) order.
    pub heterogeneity: Option<Vec<f32>>,
    pub seed: u64,
}

impl TraceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.heads == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("dims must be >= 1".into()));
        }
        if self.context_length == 0 || self.n_steps == 0 {
            return Err(Error::InvalidConfig(
                "context_length and n_steps must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.persistence) {
            return Err(Error::InvalidConfig("persistence must be in [0,1]".into()));
        }
        if self.cluster_count == 0 || self.cluster_count > self.context_length {
            return Err(Error::InvalidConfig(
                "cluster_count must be in [1, context_length]".into(),
            ));
        }
        if let Some(h) = &self.heterogeneity {
            if h.len() != self.layers * self.heads {
                return Err(Error::InvalidConfig(format!(
                    "heterogeneity holds {} alphas, expected {}",
                    h.len(),
                    self.layers * self.heads
                )));
            }
            if h.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::InvalidConfig("alpha overrides must be in [0,1]".into()));
            }
        }
        Ok(())
    }

    pub fn stream_count(&self) -> usize {
        self.layers * self.heads
    }

    pub fn stream_ids(&self) -> Vec<LayerHeadId> {
        LayerHeadId::grid(self.layers, self.heads)
    }

    fn alpha_for(&self, flat: usize) -> f32 {
        self.heterogeneity
            .as_ref()
            .map(|v| v[flat])
            .unwrap_or(self.persistence)
    }
}

/// The workload: prefix KV entries and per-step queries, per stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingTrace {
    pub spec: TraceSpec,
    /// `prefix[flat_lh][token]`.
    pub prefix: Vec<Vec<KVEntry>>,
    /// `queries[step][flat_lh]`.
    pub queries: Vec<Vec<Vec<f32>>>,
}

impl DecodingTrace {
    pub fn keys_of(&self, flat: usize) -> Vec<Vec<f32>> {
        self.prefix[flat].iter().map(|e| e.key.clone()).collect()
    }

    pub fn query(&self, step: usize, flat: usize) -> &[f32] {
        &self.queries[step][flat]
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent sub-seed per (layer, head) stream.
fn stream_rng(seed: u64, layer: usize, head: usize) -> ChaCha8Rng {
    let mut state = seed ^ ((layer as u64) << 32) ^ (head as u64).wrapping_mul(0x9E37_79B9);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
        .collect()
}

fn unit_norm(mut v: Vec<f32>) -> Vec<f32> {
    let norm = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x = (*x as f64 / norm) as f32;
        }
    }
    v
}

/// Generate a trace. Bit-identical for a fixed spec; streams are independent.
pub fn generate(spec: &TraceSpec) -> Result<DecodingTrace> {
    generate_tuned(spec, GenTuning::default())
}

/// Generation with explicit tuning constants; exists for calibration sweeps.
#[doc(hidden)]
pub fn generate_tuned(spec: &TraceSpec, tuning: GenTuning) -> Result<DecodingTrace> {
    spec.validate()?;
    let n = spec.context_length;
    let d = spec.dim;
    let mut prefix = Vec::with_capacity(spec.stream_count());
    let mut per_stream_queries: Vec<Vec<Vec<f32>>> = Vec::with_capacity(spec.stream_count());

    for (flat, lh) in spec.stream_ids().into_iter().enumerate() {
        let mut rng = stream_rng(spec.seed, lh.layer, lh.head);
        let alpha = spec.alpha_for(flat) as f64;

        let centers: Vec<Vec<f32>> = (0..spec.cluster_count)
            .map(|_| unit_norm(gaussian_vec(&mut rng, d)))
            .collect();

        // Contiguous cluster blocks: token i belongs to cluster i*C/n.
        // The deviation vector is AR(1)-smoothed along the token index.
        let phi = tuning.key_smoothing;
        let fresh_scale = (1.0 - phi * phi).sqrt();
        let mut entries = Vec::with_capacity(n);
        let mut dev = gaussian_vec(&mut rng, d);
        for token in 0..n {
            let c = token * spec.cluster_count / n;
            if token > 0 {
                let fresh = gaussian_vec(&mut rng, d);
                for (v, f) in dev.iter_mut().zip(&fresh) {
                    *v = (phi * *v as f64 + fresh_scale * *f as f64) as f32;
                }
            }
            let key: Vec<f32> = centers[c]
                .iter()
                .zip(&dev)
                .map(|(m, g)| (*m as f64 + tuning.key_noise * *g as f64) as f32)
                .collect();
            let value = gaussian_vec(&mut rng, d);
            entries.push(KVEntry::new(token, unit_norm(key), value));
        }
        prefix.push(entries);

        // Topic-mixture query process. A fixed-size set of clusters is
        // "active"; the query is their weighted directions plus a small
        // isotropic residual. Topics die and are replaced at a rate
        // proportional to 1 - alpha; weights and residual drift with
        // retention alpha^weight_exponent. alpha = 1 freezes everything,
        // alpha = 0 resamples everything, and all rates are monotone in
        // alpha, so persistence stays the single locality knob.
        let n_topics = spec.cluster_count;
        let n_active = ((n_topics as f64 * tuning.active_frac).round() as usize)
            .clamp(1, n_topics);
        let death_prob = (tuning.death_scale * (1.0 - alpha)).clamp(0.0, 1.0);
        let w_retain = alpha.powf(tuning.weight_exponent);
        let w_fresh = (1.0 - w_retain * w_retain).max(0.0).sqrt();

        let mut active: Vec<usize> = Vec::with_capacity(n_active);
        let mut in_active = vec![false; n_topics];
        while active.len() < n_active {
            let t = rng.random_range(0..n_topics);
            if !in_active[t] {
                in_active[t] = true;
                active.push(t);
            }
        }
        let mut weight_state: Vec<f64> = (0..n_active)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut residual = gaussian_vec(&mut rng, d);

        let compose = |active: &[usize], weights: &[f64], residual: &[f32]| -> Vec<f32> {
            let mut q = vec![0f64; d];
            for (slot, &topic) in active.iter().enumerate() {
                let w = (tuning.weight_sigma * weights[slot]).exp();
                for (acc, x) in q.iter_mut().zip(&centers[topic]) {
                    *acc += w * *x as f64;
                }
            }
            for (acc, r) in q.iter_mut().zip(residual) {
                *acc += tuning.resid_scale * *r as f64;
            }
            unit_norm(q.into_iter().map(|x| x as f32).collect())
        };

        let mut queries = Vec::with_capacity(spec.n_steps);
        queries.push(compose(&active, &weight_state, &residual));
        for _ in 1..spec.n_steps {
            for slot in 0..n_active {
                if rng.random::<f64>() < death_prob {
                    // Replace with a topic that is not currently active.
                    if n_active < n_topics {
                        let mut next = rng.random_range(0..n_topics);
                        while in_active[next] {
                            next = rng.random_range(0..n_topics);
                        }
                        in_active[active[slot]] = false;
                        in_active[next] = true;
                        active[slot] = next;
                    }
                    weight_state[slot] = rng.sample::<f64, _>(StandardNormal);
                } else {
                    let fresh: f64 = rng.sample(StandardNormal);
                    weight_state[slot] = w_retain * weight_state[slot] + w_fresh * fresh;
                }
            }
            let eps = gaussian_vec(&mut rng, d);
            for (r, e) in residual.iter_mut().zip(&eps) {
                *r = (w_retain * *r as f64 + w_fresh * *e as f64) as f32;
            }
            queries.push(compose(&active, &weight_state, &residual));
        }
        per_stream_queries.push(queries);
    }

    // Re-index queries as [step][stream].
    let queries = (0..spec.n_steps)
        .map(|s| {
            per_stream_queries
                .iter()
                .map(|qs| qs[s].clone())
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(DecodingTrace {
        spec: spec.clone(),
        prefix,
        queries,
    })
}

pub fn write_trace<P: AsRef<Path>>(path: P, trace: &DecodingTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trace_to(&mut w, trace)?;
    w.flush()?;
    Ok(())
}

pub fn write_trace_to<W: Write>(w: &mut W, trace: &DecodingTrace) -> Result<()> {
    let spec = &trace.spec;
    w.write_all(TRACE_MAGIC)?;
    wire::write_u32(w, TRACE_VERSION)?;
    wire::write_u32(w, RNG_ALGO_CHACHA8)?;
    wire::write_u32(w, spec.layers as u32)?;
    wire::write_u32(w, spec.heads as u32)?;
    wire::write_u32(w, spec.dim as u32)?;
    wire::write_u64(w, spec.context_length as u64)?;
    wire::write_u32(w, spec.n_steps as u32)?;
    wire::write_f32(w, spec.persistence)?;
    wire::write_u32(w, spec.cluster_count as u32)?;
    wire::write_u64(w, spec.seed)?;
    match &spec.heterogeneity {
        None => wire::write_u8(w, 0)?,
        Some(alphas) => {
            wire::write_u8(w, 1)?;
            wire::write_f32s(w, alphas)?;
        }
    }
    // Prefix in (layer, head, token) order, key then value per token.
    for stream in &trace.prefix {
        for entry in stream {
            wire::write_f32s(w, &entry.key)?;
            wire::write_f32s(w, &entry.value)?;
        }
    }
    // Queries in (step, layer, head) order.
    for step in &trace.queries {
        for q in step {
            wire::write_f32s(w, q)?;
        }
    }
    Ok(())
}

pub fn read_trace<P: AsRef<Path>>(path: P) -> Result<DecodingTrace> {
    let mut r = BufReader::new(File::open(path)?);
    let trace = read_trace_from(&mut r)?;
    // Trailing garbage means the file is not a well-formed trace.
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after trace payload".into()));
    }
    Ok(trace)
}

pub fn read_trace_from<R: Read>(r: &mut R) -> Result<DecodingTrace> {
    wire::read_magic(r, TRACE_MAGIC, "trace header")?;
    let version = wire::read_u32(r, "trace version")?;
    if version != TRACE_VERSION {
        return Err(Error::Format(format!(
            "unsupported trace version {version}, expected {TRACE_VERSION}"
        )));
    }
    let rng_algo = wire::read_u32(r, "rng algo")?;
    if rng_algo != RNG_ALGO_CHACHA8 {
        return Err(Error::Format(format!("unknown rng algo id {rng_algo}")));
    }
    let layers = wire::read_u32(r, "layers")? as usize;
    let heads = wire::read_u32(r, "heads")? as usize;
    let dim = wire::read_u32(r, "dim")? as usize;
    let context_length = wire::read_u64(r, "context_length")? as usize;
    let n_steps = wire::read_u32(r, "n_steps")? as usize;
    let persistence = wire::read_f32(r, "persistence")?;
    let cluster_count = wire::read_u32(r, "cluster_count")? as usize;
    let seed = wire::read_u64(r, "seed")?;
    let heterogeneity = match wire::read_u8(r, "heterogeneity flag")? {
        0 => None,
        1 => Some(wire::read_f32s(r, layers * heads, "heterogeneity alphas")?),
        other => {
            return Err(Error::Format(format!(
                "heterogeneity flag must be 0 or 1, got {other}"
            )))
        }
    };
    let spec = TraceSpec {
        layers,
        heads,
        dim,
        context_length,
        n_steps,
        persistence,
        cluster_count,
        heterogeneity,
        seed,
    };
    spec.validate()
        .map_err(|e| Error::Format(format!("trace header invalid: {e}")))?;

    let mut prefix = Vec::with_capacity(spec.stream_count());
    for _ in 0..spec.stream_count() {
        let mut stream = Vec::with_capacity(context_length);
        for token in 0..context_length {
            let key = wire::read_f32s(r, dim, "prefix key")?;
            let value = wire::read_f32s(r, dim, "prefix value")?;
            stream.push(KVEntry::new(token, key, value));
        }
        prefix.push(stream);
    }
    let mut queries = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let mut step = Vec::with_capacity(spec.stream_count());
        for _ in 0..spec.stream_count() {
            step.push(wire::read_f32s(r, dim, "step query")?);
        }
        queries.push(step);
    }
    Ok(DecodingTrace {
        spec,
        prefix,
        queries,
    })
}

/// A named preset: trace spec plus the sparsity budget that goes with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    pub spec: TraceSpec,
    pub sparsity: SparsityConfig,
}

/// The preset grid: three locality families x three context lengths x two
/// budget fractions (1/64 and 1/16), sink 4 / local 64 throughout.
pub fn standard_workloads() -> Vec<Workload> {
    let mut out = Vec::new();
    for family in ["locality-high", "locality-none", "hetero"] {
        for n in [4096usize, 16384, 65536] {
            for budget_num in [64usize, 16] {
                out.push(preset(family, n, budget_num, 0).expect("preset grid is valid"));
            }
        }
    }
    out
}

/// Build one preset. `budget_denominator` is 64 for the 1.56% budget and 16
/// for the 6.25% budget.
pub fn preset(family: &str, n: usize, budget_denominator: usize, seed: u64) -> Result<Workload> {
    let layers = 2;
    let heads = 4;
    let (persistence, heterogeneity) = match family {
        "locality-high" => (0.9, None),
        "locality-none" => (0.0, None),
        "hetero" => {
            // First half of the heads in each layer are high-persistence.
            let alphas: Vec<f32> = LayerHeadId::grid(layers, heads)
                .into_iter()
                .map(|lh| if lh.head < heads / 2 { 0.95 } else { 0.3 })
                .collect();
            (0.9, Some(alphas))
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset family '{other}' (expected locality-high, locality-none, hetero)"
            )))
        }
    };
    if budget_denominator != 16 && budget_denominator != 64 {
        return Err(Error::InvalidConfig(
            "budget denominator must be 16 (6.25%) or 64 (1.56%)".into(),
        ));
    }
    let spec = TraceSpec {
        layers,
        heads,
        dim: 32,
        context_length: n,
        n_steps: 64,
        persistence,
        cluster_count: (n / 16).max(1),
        heterogeneity,
        seed,
    };
    spec.validate()?;
    let sparsity = SparsityConfig::new(n / budget_denominator, 4, 64);
    sparsity.validate(n)?;
    let pct = 100.0 / budget_denominator as f64;
    Ok(Workload {
        name: format!("{family}/n{n}/b{pct:.2}"),
        spec,
        sparsity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn small_spec(seed: u64) -> TraceSpec {
        TraceSpec {
            layers: 1,
            heads: 2,
            dim: 8,
            context_length: 64,
            n_steps: 6,
            persistence: 0.8,
            cluster_count: 4,
            heterogeneity: None,
            seed,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec(42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate(&small_spec(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn keys_and_queries_are_unit_norm() {
        let trace = generate(&small_spec(1)).unwrap();
        for stream in &trace.prefix {
            for e in stream {
                let n: f64 = e.key.iter().map(|x| (*x as f64).powi(2)).sum();
                assert!((n.sqrt() - 1.0).abs() < 1e-5);
            }
        }
        for step in &trace.queries {
            for q in step {
                let n: f64 = q.iter().map(|x| (*x as f64).powi(2)).sum();
                assert!((n.sqrt() - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn alpha_one_freezes_queries() {
        let mut spec = small_spec(5);
        spec.persistence = 1.0;
        let trace = generate(&spec).unwrap();
        for step in 1..spec.n_steps {
            assert_eq!(trace.queries[step], trace.queries[0]);
        }
    }

    #[test]
    fn trace_round_trips() {
        let trace = generate(&small_spec(9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.kvtr");
        write_trace(&path, &trace).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(trace, back);
    }

    #[test]
    fn truncated_trace_is_an_error() {
        let trace = generate(&small_spec(9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.kvtr");
        write_trace(&path, &trace).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        match read_trace(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("truncated")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.kvtr");
        std::fs::write(&path, b"NOPE_____________").unwrap();
        assert!(matches!(read_trace(&path), Err(Error::Format(_))));
    }

    #[test]
    fn regenerating_from_embedded_spec_reproduces_contents() {
        let trace = generate(&small_spec(13)).unwrap();
        let again = generate(&trace.spec).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn preset_budgets_match_fractions() {
        let w = preset("locality-high", 16384, 64, 0).unwrap();
        assert_eq!(w.sparsity.budget_k, 256);
        let w = preset("locality-high", 16384, 16, 0).unwrap();
        assert_eq!(w.sparsity.budget_k, 1024);
        assert_eq!(w.sparsity.sink_count, 4);
        assert_eq!(w.sparsity.local_count, 64);
    }

    #[test]
    fn every_preset_is_valid() {
        let all = standard_workloads();
        assert_eq!(all.len(), 18);
        let names: BTreeSet<&str> = all.iter().map(|w| w.name.as_str()).collect();
        assert_eq!(names.len(), 18);
        for w in &all {
            w.spec.validate().unwrap();
            w.sparsity.validate(w.spec.context_length).unwrap();
        }
    }

    #[test]
    fn hetero_preset_overrides_half_the_heads() {
        let w = preset("hetero", 4096, 16, 0).unwrap();
        let alphas = w.spec.heterogeneity.as_ref().unwrap();
        let high = alphas.iter().filter(|a| **a == 0.95).count();
        let low = alphas.iter().filter(|a| **a == 0.3).count();
        assert_eq!(high, low);
        assert_eq!(high + low, alphas.len());
    }
}
