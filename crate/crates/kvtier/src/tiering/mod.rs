//! Multi-tier KV storage (placeholder while modules land).
