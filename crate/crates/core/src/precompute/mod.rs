//! Index construction: the expansion by localised predicates and the lookup table of
//! ground counting patterns.

mod index_io;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use index_io::{load_index, load_index_str, save_index, save_index_string, FORMAT_VERSION};

use crate::eval::Evaluator;
use crate::lang::{parse_with, HypothesisClassConfig, LangError, Registry};
use crate::learner::{CandidateSpace, LearnError};
use crate::locality::{nu, LocalisationReport, LocalityError, Localiser};
use crate::pattern::PatternTerm;
use crate::relstore::{persist_string, Elem, RelError, Relation, Structure, Symbol};
use crate::semantics::EvalError;

#[derive(Debug, thiserror::Error)]
pub enum PrecomputeError {
    #[error("template {index} ({formula}): {source}")]
    Template { index: usize, formula: String, source: LocalityError },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Library(#[from] LearnError),
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("index mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: String, found: String },
    #[error("table loop made {iterations} iterations at one element, above the bound {bound}")]
    LoopBound { iterations: u64, bound: u128 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub elements: usize,
    pub degree: usize,
    pub localise_micros: u64,
    pub table_micros: u64,
    pub total_micros: u64,
    pub table_entries: usize,
    pub library_size: usize,
    pub table_iterations: u64,
    pub max_iterations_per_element: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub version: u32,
    pub config: HypothesisClassConfig,
    pub config_digest: String,
    /// Locality radius `r` of the patterns; distance literals use `2r+1`.
    pub radius: u32,
    /// Largest number of bound variables per pattern.
    pub width: usize,
    /// Degree of the expanded structure.
    pub degree: usize,
    /// Neighbourhood radius that decides every non-ground pattern around its free elements.
    pub eval_radius: u32,
    /// Table key to the ball radius its loop enumerated.
    pub entry_radii: BTreeMap<String, u32>,
    pub templates: Vec<LocalisationReport>,
    pub stats: BuildStats,
    /// Digest of configuration, expansion and table together.
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexArtifact {
    pub structure: Structure,
    pub table: BTreeMap<String, i128>,
    pub meta: IndexMeta,
}

impl IndexArtifact {
    pub fn digest(&self) -> &str {
        &self.meta.digest
    }
}

fn content_digest(config_digest: &str, structure: &Structure, table: &BTreeMap<String, i128>) -> String {
    let mut h = Sha256::new();
    h.update(config_digest.as_bytes());
    h.update(persist_string(structure).as_bytes());
    h.update(serde_json::to_string(table).expect("table serializes").as_bytes());
    hex::encode(h.finalize())
}

/// Radius around the free elements of a pattern that contains every witness, every
/// distance literal's shortest paths and every tuple of those elements.
pub fn eval_radius(radius: u32, width: usize) -> u32 {
    (2 * radius + 1) * width as u32 + radius + 1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoopStats {
    pub iterations: u64,
    pub max_per_element: u64,
}

/// Value of a ground pattern `#z.(psi & delta_H)` with `H` connected: for every first
/// witness `v1`, the other witnesses range over the `(2r+1)m`-ball of `v1` only.
pub fn ground_count(s: &Structure, registry: &Registry, p: &PatternTerm) -> Result<(i128, LoopStats), PrecomputeError> {
    assert!(p.is_ground() && p.graph.is_connected(), "ground connected pattern");
    let m = p.bound.len();
    if m == 0 {
        let ev = Evaluator::new(s, registry);
        let body = ev.compile(&p.body(), &[])?;
        return Ok((i128::from(ev.formula(&body, &[])?), LoopStats { iterations: 1, max_per_element: 1 }));
    }
    let reach = p.rho * m as u32;
    let bound = nu(s.gaifman().degree() as u64, reach as u64).saturating_pow(m as u32 - 1);
    let per_element = s
        .universe()
        .into_par_iter()
        .map_init(
            || (Evaluator::new(s, registry), None),
            |(ev, compiled), v1| {
                let body = match compiled {
                    Some(c) => c,
                    None => compiled.insert(ev.compile(&p.body(), &p.bound)?),
                };
                let ball = s.gaifman().ball(&[v1], reach)?;
                let mut tuple: Vec<Elem> = vec![v1; m];
                let mut idx = vec![0usize; m - 1];
                let mut count = 0i128;
                let mut iterations = 0u64;
                loop {
                    for (slot, &i) in idx.iter().enumerate() {
                        tuple[slot + 1] = ball[i];
                    }
                    iterations += 1;
                    if ev.formula(body, &tuple)? {
                        count += 1;
                    }
                    let mut pos = 0;
                    while pos < idx.len() {
                        idx[pos] += 1;
                        if idx[pos] < ball.len() {
                            break;
                        }
                        idx[pos] = 0;
                        pos += 1;
                    }
                    if pos == idx.len() {
                        break;
                    }
                }
                Ok::<_, PrecomputeError>((count, iterations))
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    let mut stats = LoopStats::default();
    let mut total = 0i128;
    for (count, iterations) in per_element {
        total += count;
        stats.iterations += iterations;
        stats.max_per_element = stats.max_per_element.max(iterations);
    }
    if stats.max_per_element as u128 > bound {
        return Err(PrecomputeError::LoopBound { iterations: stats.max_per_element, bound });
    }
    Ok((total, stats))
}

fn micros(since: Instant) -> u64 {
    since.elapsed().as_micros() as u64
}

/// Localises every template into its own namespace `L{i}_`, expands `s` by all added
/// predicates, and tabulates every ground pattern of the candidate library.
pub fn precompute(s: &Structure, cfg: &HypothesisClassConfig, registry: &Registry) -> Result<IndexArtifact, PrecomputeError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut additions: Vec<(Symbol, Relation)> = Vec::new();
    let mut reports = Vec::new();
    for (index, template) in cfg.templates.iter().enumerate() {
        let fail = |source: LocalityError| PrecomputeError::Template { index, formula: template.formula.clone(), source };
        let phi = parse_with(&template.formula, registry).map_err(|e| fail(e.into()))?;
        let out = Localiser::new(registry, &format!("L{index}_")).run(&phi, s, &template.mode).map_err(fail)?;
        let sig = out.structure.signature();
        for (id, sym) in sig.symbols().iter().enumerate() {
            if s.signature().lookup(&sym.name).is_none() {
                additions.push((sym.clone(), out.structure.relation(id).clone()));
            }
        }
        reports.push(out.report);
    }
    let expanded = if additions.is_empty() { s.clone() } else { s.expand(additions)? };
    let localise_micros = micros(start);

    let table_start = Instant::now();
    let degree = expanded.gaifman().degree();
    let space = CandidateSpace::build(cfg, expanded.signature(), degree)?;
    let mut table = BTreeMap::new();
    let mut entry_radii = BTreeMap::new();
    let mut iterations = 0;
    let mut max_per_element = 0;
    for term in space.ground_terms() {
        let (value, stats) = ground_count(&expanded, registry, &term.pattern)?;
        iterations += stats.iterations;
        max_per_element = max_per_element.max(stats.max_per_element);
        table.insert(term.key.clone(), value);
        entry_radii.insert(term.key.clone(), term.pattern.rho * term.pattern.bound.len() as u32);
    }
    let table_micros = micros(table_start);

    let config_digest = cfg.digest();
    let digest = content_digest(&config_digest, &expanded, &table);
    let stats = BuildStats {
        elements: expanded.len(),
        degree,
        localise_micros,
        table_micros,
        total_micros: micros(start),
        table_entries: table.len(),
        library_size: space.library.len(),
        table_iterations: iterations,
        max_iterations_per_element: max_per_element,
    };
    Ok(IndexArtifact {
        meta: IndexMeta {
            version: FORMAT_VERSION,
            config: cfg.clone(),
            config_digest,
            radius: cfg.radius,
            width: cfg.q,
            degree,
            eval_radius: eval_radius(cfg.radius, cfg.q),
            entry_radii,
            templates: reports,
            stats,
            digest,
        },
        structure: expanded,
        table,
    })
}
