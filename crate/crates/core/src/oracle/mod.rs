//! Brute-force reference implementations. Nothing here uses the indexed evaluator.

mod learn;
mod naive;
#[cfg(test)]
mod tests;

pub use learn::{naive_delta, naive_learn, NaiveFit};
pub use naive::naive_eval;
