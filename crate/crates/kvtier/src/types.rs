//! Domain types shared by every module.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Identifies one attention stream. Ordered lexicographically by
/// `(layer, head)`, which fixes iteration and tie-break order everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LayerHeadId {
    pub layer: usize,
    pub head: usize,
}

impl LayerHeadId {
    pub fn new(layer: usize, head: usize) -> Self {
        Self { layer, head }
    }

    /// All ids for an `L x H` grid, in (layer, head) order.
    pub fn grid(layers: usize, heads: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(layers * heads);
        for layer in 0..layers {
            for head in 0..heads {
                out.push(Self { layer, head });
            }
        }
        out
    }

    /// Flat index within an `L x H` grid.
    pub fn flat(&self, heads: usize) -> usize {
        self.layer * heads + self.head
    }
}

impl fmt::Display for LayerHeadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}H{}", self.layer, self.head)
    }
}

/// One token's key/value pair within a single (layer, head) stream.
#[derive(Debug, Clone, PartialEq)]
pub struct KVEntry {
    pub token_index: usize,
    pub key: Vec<f32>,
    pub value: Vec<f32>,
}

impl KVEntry {
    pub fn new(token_index: usize, key: Vec<f32>, value: Vec<f32>) -> Self {
        debug_assert_eq!(key.len(), value.len());
        Self {
            token_index,
            key,
            value,
        }
    }

    pub fn dim(&self) -> usize {
        self.key.len()
    }
}

/// Per-step selection budget plus the always-resident sink/local tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityConfig {
    /// Tokens selected per step per (layer, head), excluding pinned tokens.
    pub budget_k: usize,
    /// Leading tokens that are always resident.
    pub sink_count: usize,
    /// Trailing tokens that are always resident.
    pub local_count: usize,
}

impl SparsityConfig {
    pub fn new(budget_k: usize, sink_count: usize, local_count: usize) -> Self {
        Self {
            budget_k,
            sink_count,
            local_count,
        }
    }

    /// Validate against a concrete context length.
    pub fn validate(&self, context_len: usize) -> Result<()> {
        if self.budget_k < 1 {
            return Err(Error::InvalidConfig("budget_k must be >= 1".into()));
        }
        if self.sink_count + self.local_count + self.budget_k > context_len {
            return Err(Error::InvalidConfig(format!(
                "sink {} + local {} + budget {} exceeds context length {}",
                self.sink_count, self.local_count, self.budget_k, context_len
            )));
        }
        Ok(())
    }

    /// `budget_k / context_length`; reporting only.
    pub fn budget_fraction(&self, context_len: usize) -> f64 {
        self.budget_k as f64 / context_len as f64
    }

    /// Sink tokens `[0, sink)` plus local tokens `[n - local, n)`.
    pub fn pinned_set(&self, context_len: usize) -> BTreeSet<usize> {
        let mut pinned: BTreeSet<usize> = (0..self.sink_count.min(context_len)).collect();
        pinned.extend(context_len.saturating_sub(self.local_count)..context_len);
        pinned
    }
}

/// A finite score per candidate (token, chunk, or centroid). Stored in f64:
/// dot scores carry f32-rounded values exactly, softmax weights keep full
/// double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores(pub Vec<f64>);

impl Scores {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("scores must be finite".into()));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_head_order_is_lexicographic() {
        let a = LayerHeadId::new(0, 7);
        let b = LayerHeadId::new(1, 0);
        assert!(a < b);
        assert_eq!(LayerHeadId::grid(2, 2).len(), 4);
        assert_eq!(LayerHeadId::grid(2, 3)[4], LayerHeadId::new(1, 1));
    }

    #[test]
    fn pinned_set_covers_sink_and_local() {
        let cfg = SparsityConfig::new(8, 2, 3);
        let pinned = cfg.pinned_set(10);
        assert_eq!(pinned, BTreeSet::from([0, 1, 7, 8, 9]));
    }

    #[test]
    fn sparsity_validation_rejects_oversized_budget() {
        let cfg = SparsityConfig::new(8, 2, 3);
        assert!(cfg.validate(10).is_err());
        assert!(cfg.validate(13).is_ok());
        assert_eq!(cfg.budget_fraction(128), 0.0625);
    }

    #[test]
    fn scores_reject_non_finite() {
        assert!(Scores::new(vec![1.0, f64::NAN]).is_err());
        assert!(Scores::new(vec![1.0, 2.0]).is_ok());
    }
}
