//! Formulas and counting terms: syntax tree, surface syntax, numerical predicates and
//! hypothesis-class configuration.

mod ast;
mod config;
mod parser;
mod printer;
mod registry;


pub use ast::{fresh_var, var, Expr, Kind, Sort, Var};
pub use config::{Caps, HypothesisClassConfig, LocaliseMode, Template, MAX_PATTERN_VERTICES};
pub use parser::{parse, parse_formula, parse_term, parse_with};
pub use printer::canonical_key;
pub use registry::{Decider, NumericalPredicate, Registry};

#[derive(Debug, thiserror::Error)]
pub enum LangError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("arguments of {pred} share more than one free variable: {vars:?}")]
    NumPredFreeVars { pred: String, vars: Vec<String> },
    #[error("variable {0} is bound twice by one counting term")]
    RepeatedBoundVar(String),
    #[error("expected a {expected}, found a {found}")]
    Sort { expected: Sort, found: Sort },
    #[error("unknown numerical predicate {0}")]
    UnknownPredicate(String),
    #[error("numerical predicate {name} takes {expected} arguments, got {found}")]
    PredicateArity { name: String, expected: usize, found: usize },
    #[error("numerical predicate {0} is already registered")]
    DuplicatePredicate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
