//! Finite relational structures, their Gaifman graphs, and audited local access.

mod gaifman;
mod io;
mod oracle;
mod structure;

pub use gaifman::{GaifmanIndex, UNREACHABLE};
pub use io::{ingest, ingest_path, ingest_str, persist, persist_path, persist_string};
pub use oracle::{AccessAudit, AuditCounts, LocalOracle};
pub use structure::{Elem, Region, RelId, Relation, Signature, Structure, StructureBuilder, Symbol};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RelError {
    #[error("duplicate relation symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}{}", .position.map(|l| format!(" (line {l})")).unwrap_or_default())]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
        position: Option<usize>,
    },
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `build_gaifman` as a free function.
pub fn build_gaifman(s: &Structure) -> GaifmanIndex {
    GaifmanIndex::build(s)
}

/// The r-neighbourhood of `tuple`: the substructure induced on its r-ball.
pub fn induced_neighborhood(s: &Structure, tuple: &[Elem], radius: u32) -> Result<Region, RelError> {
    let ball = s.gaifman().ball(tuple, radius)?;
    s.induced(&ball)
}

#[cfg(test)]
mod tests;
