//! CSV emission and validation shared by the experiment drivers.
//!
//! Every CSV carries a header row and ends with one comment line recording
//! the tool version and a hash of the generating config, so outputs are
//! self-identifying and diffable.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// FNV-1a over the canonical JSON of a config; stable across runs.
pub fn config_hash(config_json: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in config_json.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

#[derive(Debug, Clone)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row<S: Into<String>>(&mut self, row: Vec<S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Render with header and trailing metadata comment.
    pub fn render(&self, config_json: &str) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "# version={} config_hash={:016x}",
            TOOL_VERSION,
            config_hash(config_json)
        );
        out
    }
}

/// Check that rendered CSV text is well-formed: one header, consistent column
/// counts, and the trailing metadata comment.
pub fn validate_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty csv".into()))?;
    if header.starts_with('#') {
        return Err(Error::Format("csv must start with a header row".into()));
    }
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut saw_meta = false;
    for line in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if !meta.contains("version=") || !meta.contains("config_hash=") {
                return Err(Error::Format(format!("malformed metadata comment: {line}")));
            }
            saw_meta = true;
            continue;
        }
        if saw_meta {
            return Err(Error::Format("data rows after metadata comment".into()));
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != columns.len() {
            return Err(Error::Format(format!(
                "row has {} fields, header has {}: {line}",
                fields.len(),
                columns.len()
            )));
        }
        rows.push(fields);
    }
    if !saw_meta {
        return Err(Error::Format("missing trailing metadata comment".into()));
    }
    Ok(CsvTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_validate_round_trip() {
        let mut t = CsvTable::new(vec!["a", "b"]);
        t.push_row(vec!["1", "2"]);
        t.push_row(vec!["3", "4"]);
        let text = t.render("{\"x\":1}");
        let parsed = validate_csv(&text).unwrap();
        assert_eq!(parsed.columns, vec!["a", "b"]);
        assert_eq!(parsed.rows.len(), 2);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        assert_eq!(config_hash("abc"), config_hash("abc"));
        assert_ne!(config_hash("abc"), config_hash("abd"));
    }

    #[test]
    fn validation_rejects_ragged_rows_and_missing_meta() {
        assert!(validate_csv("a,b\n1\n# version=0 config_hash=0\n").is_err());
        assert!(validate_csv("a,b\n1,2\n").is_err());
        assert!(validate_csv("").is_err());
    }
}
