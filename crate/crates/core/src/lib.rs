//! Learning first-order definable counting terms on sparse relational data.

pub mod decompose;
pub mod eval;
pub mod fixtures;
pub mod gen;
pub mod graph;
pub mod lang;
pub mod learner;
pub mod locality;
pub mod oracle;
pub mod pattern;
pub mod precompute;
pub mod relstore;
pub mod semantics;
pub mod synth;

pub use decompose::DecomposeError;
pub use lang::LangError;
pub use learner::LearnError;
pub use locality::LocalityError;
pub use precompute::PrecomputeError;
pub use relstore::RelError;
pub use semantics::EvalError;

/// Any failure of the library, for callers that do not care which stage failed.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Locality(#[from] LocalityError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Precompute(#[from] PrecomputeError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}
