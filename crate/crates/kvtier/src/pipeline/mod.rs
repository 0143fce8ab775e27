//! Pipeline scheduling (placeholder while modules land).
