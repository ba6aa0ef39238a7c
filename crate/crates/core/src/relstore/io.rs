//! JSON-lines database format.
//!
//! ```text
//! {"signature":[{"name":"Author","arity":2},{"name":"Citation","arity":2}]}
//! {"universe":["a1","a2","p1","p2","p3"]}
//! {"rel":"Author","tuple":["a1","p1"]}
//! ```
//!
//! The `universe` line is optional and may be repeated; single elements can
//! also be declared with `{"element":"id"}`. Elements first mentioned in a
//! fact are appended in order of appearance.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::structure::{Structure, Symbol};
use super::{RelError, Signature};

#[derive(Serialize, Deserialize)]
struct Header {
    signature: Vec<Symbol>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Record {
    Fact { rel: String, tuple: Vec<String> },
    Universe { universe: Vec<String> },
    Element { element: String },
}

fn format_err(line: usize, message: impl Into<String>) -> RelError {
    RelError::Format {
        line,
        message: message.into(),
    }
}

pub fn ingest(reader: impl BufRead) -> Result<Structure, RelError> {
    let mut lines = reader.lines().enumerate();
    let (header_line, header) = loop {
        match lines.next() {
            None => return Err(format_err(1, "missing signature header")),
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let header: Header = serde_json::from_str(&line)
                    .map_err(|e| format_err(i + 1, format!("bad signature header: {e}")))?;
                break (i + 1, header);
            }
        }
    };
    let signature = Signature::new(header.signature).map_err(|e| format_err(header_line, e.to_string()))?;
    let mut builder = Structure::builder(signature);
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| format_err(lineno, format!("malformed record: {e}")))?;
        match record {
            Record::Universe { universe } => {
                builder.elements(universe.iter().map(String::as_str));
            }
            Record::Element { element } => {
                builder.element(&element);
            }
            Record::Fact { rel, tuple } => {
                let id = builder
                    .signature()
                    .lookup(&rel)
                    .ok_or_else(|| RelError::UnknownSymbol(format!("{rel} (line {lineno})")))?;
                let arity = builder.signature().symbol(id).arity;
                if arity != tuple.len() {
                    return Err(RelError::ArityMismatch {
                        symbol: rel,
                        expected: arity,
                        found: tuple.len(),
                        position: Some(lineno),
                    });
                }
                let handles: Vec<_> = tuple.iter().map(|n| builder.element(n)).collect();
                builder.fact_handles(id, &handles)?;
            }
        }
    }
    Ok(builder.build())
}

pub fn ingest_path(path: impl AsRef<std::path::Path>) -> Result<Structure, RelError> {
    let file = std::fs::File::open(path)?;
    ingest(std::io::BufReader::new(file))
}

pub fn ingest_str(text: &str) -> Result<Structure, RelError> {
    ingest(text.as_bytes())
}

pub fn persist(s: &Structure, mut out: impl Write) -> Result<(), RelError> {
    let header = Header {
        signature: s.signature().symbols().to_vec(),
    };
    writeln!(out, "{}", serde_json::to_string(&header).map_err(std::io::Error::other)?)?;
    writeln!(
        out,
        "{}",
        serde_json::json!({ "universe": s.names() })
    )?;
    for (sym, rel) in s.signature().symbols().iter().zip(s.relations()) {
        for t in rel.tuples() {
            let names: Vec<&str> = t.iter().map(|&e| s.name(e)).collect();
            writeln!(out, "{}", serde_json::json!({ "rel": sym.name, "tuple": names }))?;
        }
    }
    Ok(())
}

pub fn persist_path(s: &Structure, path: impl AsRef<std::path::Path>) -> Result<(), RelError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    persist(s, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn persist_string(s: &Structure) -> String {
    let mut buf = Vec::new();
    persist(s, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("JSON output is UTF-8")
}
