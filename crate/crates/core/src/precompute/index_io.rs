//! `.fidx` files: a JSON header line, the expanded structure as JSON lines, one JSON
//! line with the table, and a `sha256:` trailer over everything before it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IndexArtifact, IndexMeta, PrecomputeError};
use crate::lang::HypothesisClassConfig;
use crate::relstore::{ingest_str, persist_string};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    structure_lines: usize,
    meta: IndexMeta,
}

#[derive(Serialize, Deserialize)]
struct TableSection {
    /// Values as strings; 128-bit integers do not survive JSON numbers everywhere.
    table: BTreeMap<String, String>,
}

pub fn save_index_string(ix: &IndexArtifact) -> String {
    let structure = persist_string(&ix.structure);
    let header = Header {
        format: "fidx".into(),
        version: ix.meta.version,
        structure_lines: structure.lines().count(),
        meta: ix.meta.clone(),
    };
    let table = TableSection { table: ix.table.iter().map(|(k, v)| (k.clone(), v.to_string())).collect() };
    let mut body = serde_json::to_string(&header).expect("header serializes");
    body.push('\n');
    body.push_str(&structure);
    body.push_str(&serde_json::to_string(&table).expect("table serializes"));
    body.push('\n');
    let sum = hex::encode(Sha256::digest(body.as_bytes()));
    body.push_str(&format!("sha256:{sum}\n"));
    body
}

pub fn save_index(ix: &IndexArtifact, path: impl AsRef<Path>) -> Result<(), PrecomputeError> {
    std::fs::write(path, save_index_string(ix))?;
    Ok(())
}

/// Parses an index, checking its checksum, format version and, when given, that it was
/// built for `expected`.
pub fn load_index_str(text: &str, expected: Option<&HypothesisClassConfig>) -> Result<IndexArtifact, PrecomputeError> {
    let corrupt = |m: &str| PrecomputeError::Corrupt(m.to_string());
    let body_end = text.trim_end_matches('\n').rfind('\n').map(|i| i + 1).ok_or_else(|| corrupt("missing trailer"))?;
    let (body, trailer) = text.split_at(body_end);
    let sum = trailer.trim().strip_prefix("sha256:").ok_or_else(|| corrupt("missing trailer"))?;
    if hex::encode(Sha256::digest(body.as_bytes())) != sum {
        return Err(corrupt("checksum mismatch"));
    }
    let mut lines = body.lines();
    let header: Header = serde_json::from_str(lines.next().ok_or_else(|| corrupt("empty file"))?)
        .map_err(|e| PrecomputeError::Corrupt(format!("header: {e}")))?;
    if header.format != "fidx" {
        return Err(corrupt("not an index file"));
    }
    if header.version != FORMAT_VERSION {
        return Err(PrecomputeError::VersionMismatch {
            expected: format!("format {FORMAT_VERSION}"),
            found: format!("format {}", header.version),
        });
    }
    if let Some(cfg) = expected {
        let want = cfg.digest();
        if header.meta.config_digest != want {
            return Err(PrecomputeError::VersionMismatch {
                expected: format!("config {want}"),
                found: format!("config {}", header.meta.config_digest),
            });
        }
    }
    let mut structure_text = String::new();
    for _ in 0..header.structure_lines {
        structure_text.push_str(lines.next().ok_or_else(|| corrupt("structure section cut short"))?);
        structure_text.push('\n');
    }
    let structure = ingest_str(&structure_text).map_err(|e| PrecomputeError::Corrupt(format!("structure: {e}")))?;
    let table: TableSection = serde_json::from_str(lines.next().ok_or_else(|| corrupt("missing table"))?)
        .map_err(|e| PrecomputeError::Corrupt(format!("table: {e}")))?;
    let table = table
        .table
        .into_iter()
        .map(|(k, v)| v.parse::<i128>().map(|v| (k, v)))
        .collect::<Result<BTreeMap<_, _>, _>>()
        .map_err(|e| PrecomputeError::Corrupt(format!("table value: {e}")))?;
    if lines.next().is_some() {
        return Err(corrupt("trailing data"));
    }
    Ok(IndexArtifact { structure, table, meta: header.meta })
}

pub fn load_index(path: impl AsRef<Path>, expected: Option<&HypothesisClassConfig>) -> Result<IndexArtifact, PrecomputeError> {
    let text = std::fs::read_to_string(path)?;
    load_index_str(&text, expected)
}
