use focl::{DecomposeError, EvalError, LearnError, LocalityError, PrecomputeError, RelError};

/// Process exit statuses. Usage errors (2) are produced by the argument parser itself.
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_REJECT: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("reject: {0}")]
    Reject(String),
    #[error("internal: {0}")]
    Internal(String),
    #[error(transparent)]
    Core(#[from] focl::Error),
}

impl CliError {
    pub fn input(context: &str, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{context}: {e}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Reject(_) => EXIT_REJECT,
            CliError::Internal(_) => EXIT_INTERNAL,
            CliError::Core(e) => core_code(e),
        }
    }
}

fn rel_code(_: &RelError) -> u8 {
    EXIT_INPUT
}

fn eval_code(e: &EvalError) -> u8 {
    match e {
        EvalError::Overflow => EXIT_INTERNAL,
        EvalError::Rel(r) => rel_code(r),
        _ => EXIT_INPUT,
    }
}

fn learn_code(e: &LearnError) -> u8 {
    match e {
        LearnError::Contradictory { .. } => EXIT_REJECT,
        LearnError::AuditViolation { .. } => EXIT_INTERNAL,
        LearnError::Eval(e) => eval_code(e),
        _ => EXIT_INPUT,
    }
}

fn core_code(e: &focl::Error) -> u8 {
    match e {
        focl::Error::Rel(e) => rel_code(e),
        focl::Error::Lang(_) => EXIT_INPUT,
        focl::Error::Eval(e) => eval_code(e),
        focl::Error::Locality(_) | focl::Error::Decompose(_) => EXIT_INTERNAL,
        focl::Error::Learn(e) => learn_code(e),
        focl::Error::Precompute(e) => match e {
            PrecomputeError::LoopBound { .. } => EXIT_INTERNAL,
            PrecomputeError::Library(e) => learn_code(e),
            PrecomputeError::Eval(e) => eval_code(e),
            _ => EXIT_INPUT,
        },
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

from_core!(RelError, focl::LangError, EvalError, LocalityError, DecomposeError, PrecomputeError, LearnError);
