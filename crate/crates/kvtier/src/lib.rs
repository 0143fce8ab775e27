//! Trace-driven, GPU-free engine for tiered KV-cache management.
//!
//! The crate simulates the decode-time data path of a KV-cache offloading
//! runtime over synthetic long-context traces: per-step critical-entry
//! selection through a hierarchical index, an attention-scored sliding-window
//! cache in the fast tier, a per-(layer, head) window allocator, a real
//! file-backed multi-tier store with extent layout planning, and a staged
//! selection/fetch/compute pipeline (simulated and threaded). Every
//! approximate mechanism ships with an exact brute-force oracle so its
//! behavior is testable at desk scale.

pub mod alloc;
pub mod attn;
pub mod cache;
pub mod error;
pub mod index;
pub mod pipeline;
pub mod report;
pub mod tiering;
pub mod types;
pub(crate) mod wire;
pub mod workload;

pub use error::{Error, Result};
pub use types::{KVEntry, LayerHeadId, Scores, SparsityConfig};

/// Bytes occupied by one KV entry: key + value, `d` f32 lanes each.
pub fn entry_bytes(dim: usize) -> u64 {
    2 * dim as u64 * 4
}
