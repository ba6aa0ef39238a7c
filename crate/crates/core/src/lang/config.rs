use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LangError;

/// How a template formula is made local before precomputation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LocaliseMode {
    /// Trust the declared radius after a sampling check.
    AlreadyLocal { radius: u32 },
    /// Replace quantified blocks by neighbourhood-type colours.
    Hanf { radius_cap: u32, quantifier_cap: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub formula: String,
    #[serde(flatten)]
    pub mode: LocaliseMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Counting summands per hypothesis term.
    pub max_summands: usize,
    /// Literals per pattern conjunction.
    pub max_psi_atoms: usize,
    /// Distinct variables per counting term, free and bound together.
    pub max_term_vars: usize,
    /// Upper limit on the pattern library; exceeding it is an error.
    pub max_library: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_summands: 2, max_psi_atoms: 3, max_term_vars: 3, max_library: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisClassConfig {
    /// Arity of the instances being classified.
    pub k: usize,
    /// Number of parameters.
    pub ell: usize,
    /// Largest number of variables a counting term may bind.
    pub q: usize,
    /// Integers the hypothesis may use besides small constants.
    #[serde(default)]
    pub ints: Vec<i128>,
    /// Locality radius of the pattern library.
    #[serde(default)]
    pub radius: u32,
    #[serde(default)]
    pub caps: Caps,
    /// Relation symbols allowed in patterns; all symbols when absent.
    #[serde(default)]
    pub symbols: Option<Vec<String>>,
    #[serde(default)]
    pub templates: Vec<Template>,
}

/// Largest `k + ell + q` for which component patterns are enumerated.
pub const MAX_PATTERN_VERTICES: usize = 12;

impl HypothesisClassConfig {
    pub fn new(k: usize, ell: usize, q: usize) -> Self {
        HypothesisClassConfig {
            k,
            ell,
            q,
            ints: Vec::new(),
            radius: 0,
            caps: Caps::default(),
            symbols: None,
            templates: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), LangError> {
        let bad = |m: &str| Err(LangError::Config(m.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.k + self.ell + self.q > MAX_PATTERN_VERTICES {
            return bad("k + ell + q exceeds the pattern vertex cap of 12");
        }
        if self.caps.max_psi_atoms == 0 || self.caps.max_term_vars == 0 {
            return bad("pattern caps must be positive");
        }
        Ok(())
    }

    /// Stable digest of the configuration, used to tie indexes and hypotheses together.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn from_json(text: &str) -> Result<Self, LangError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LangError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
