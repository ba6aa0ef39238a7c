//! Small hand-written databases used by tests, examples and the CLI.

use crate::relstore::{ingest_str, Signature, Structure, Symbol};

/// Authors and publications; `Author(a, p)` and `Citation(citing, cited)`.
pub const CITATIONS_JSONL: &str = r#"{"signature":[{"name":"Author","arity":2},{"name":"Citation","arity":2}]}
{"universe":["a1","a2","p1","p2","p3"]}
{"rel":"Author","tuple":["a1","p1"]}
{"rel":"Author","tuple":["a1","p2"]}
{"rel":"Author","tuple":["a2","p3"]}
{"rel":"Citation","tuple":["p3","p1"]}
{"rel":"Citation","tuple":["p3","p2"]}
{"rel":"Citation","tuple":["p2","p1"]}
"#;

/// Total citations of the publications of `x`.
pub const CITATIONS_TERM: &str = "#(z1,z2).(Author(x,z1) & Citation(z2,z1))";

pub fn citations() -> Structure {
    ingest_str(CITATIONS_JSONL).expect("fixture parses")
}

/// Colleagues, the cakes they brought, and cake types.
pub const CAKES_JSONL: &str = r#"{"signature":[{"name":"Brought","arity":2},{"name":"Type","arity":2}]}
{"universe":["alice","bob","carol","dave","c1","c2","c3","c4","c5","c6","chocolate","strawberry","carrot"]}
{"rel":"Brought","tuple":["alice","c1"]}
{"rel":"Brought","tuple":["alice","c2"]}
{"rel":"Brought","tuple":["bob","c3"]}
{"rel":"Brought","tuple":["bob","c4"]}
{"rel":"Brought","tuple":["bob","c5"]}
{"rel":"Brought","tuple":["carol","c6"]}
{"rel":"Type","tuple":["c1","chocolate"]}
{"rel":"Type","tuple":["c2","strawberry"]}
{"rel":"Type","tuple":["c3","chocolate"]}
{"rel":"Type","tuple":["c4","chocolate"]}
{"rel":"Type","tuple":["c5","carrot"]}
{"rel":"Type","tuple":["c6","strawberry"]}
"#;

/// Cakes brought by `x`, counting those of type `y` twice.
pub const CAKES_TERM: &str =
    "(#(z).(Brought(x,z) & !Type(z,y)) + (2 * #(z).(Brought(x,z) & Type(z,y))))";

pub fn cakes() -> Structure {
    ingest_str(CAKES_JSONL).expect("fixture parses")
}

/// Path `a - b - c` over a single binary relation `E`.
pub fn path3() -> Structure {
    let sig = Signature::new([Symbol::new("E", 2)]).unwrap();
    let mut b = Structure::builder(sig);
    b.fact("E", &["a", "b"]).unwrap();
    b.fact("E", &["b", "c"]).unwrap();
    b.build()
}
