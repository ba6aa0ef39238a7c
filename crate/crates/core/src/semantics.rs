use crate::lang::LangError;
use crate::relstore::RelError;

/// Failures while computing the value of an expression.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("free variable {0} has no value")]
    Unassigned(String),
    #[error("relation {0} is not in the signature")]
    UnknownRelation(String),
    #[error("relation {rel} has arity {expected}, used with {found} arguments")]
    RelationArity { rel: String, expected: usize, found: usize },
    #[error("integer overflow beyond the 128-bit range")]
    Overflow,
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Rel(#[from] RelError),
}

/// Values of variables in an interpretation.
pub type Assignment = std::collections::BTreeMap<crate::lang::Var, crate::relstore::Elem>;

/// Result of evaluating an expression: formulas give truth values, terms give integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i128),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Int(_) => None,
        }
    }

    pub fn as_int(self) -> Option<i128> {
        match self {
            Value::Int(i) => Some(i),
            Value::Bool(_) => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
        }
    }
}

/// Builds an assignment from `(name, element)` pairs.
pub fn assignment<'a>(pairs: impl IntoIterator<Item = (&'a str, crate::relstore::Elem)>) -> Assignment {
    pairs.into_iter().map(|(v, e)| (crate::lang::var(v), e)).collect()
}
