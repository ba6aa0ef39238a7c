//! The learn phase: search the candidate space for a term and parameter tuple that agree
//! with the training labels, touching the structure only through local queries.

mod library;
#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use library::{constant_bound, CandidateSpace, LibraryTerm};

use crate::eval::{Compiled, Evaluator};
use crate::lang::{canonical_key, parse_with, Expr, HypothesisClassConfig, LangError, Registry, Var};
use crate::pattern::PatternTerm;
use crate::precompute::IndexArtifact;
use crate::relstore::{AccessAudit, AuditCounts, Elem, LocalOracle, RelError, Structure};
use crate::semantics::EvalError;

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("symbol {0} is not in the signature")]
    UnknownSymbol(String),
    #[error("pattern library exceeds its cap of {cap} terms")]
    CapOverflow { cap: usize },
    #[error("contradictory labels for tuple ({tuple}): {first} and {second}")]
    Contradictory { tuple: String, first: i128, second: i128 },
    #[error("tuple has {found} entries, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("index was built for another configuration (expected {expected}, found {found})")]
    ConfigMismatch { expected: String, found: String },
    #[error("stale index: {0}")]
    StaleIndex(String),
    #[error("access audit recorded {scans} global scans during the learn phase")]
    AuditViolation { scans: u64 },
    #[error("malformed training data at line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("malformed hypothesis: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rel(#[from] RelError),
}

/// Labelled `k`-tuples, deduplicated, sorted by tuple.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainingSet {
    k: usize,
    examples: Vec<(Vec<Elem>, i128)>,
}

impl TrainingSet {
    /// Fails on a tuple of the wrong length or one tuple with two labels.
    pub fn new(k: usize, examples: impl IntoIterator<Item = (Vec<Elem>, i128)>) -> Result<Self, LearnError> {
        let mut seen: BTreeMap<Vec<Elem>, i128> = BTreeMap::new();
        for (tuple, label) in examples {
            if tuple.len() != k {
                return Err(LearnError::Length { expected: k, found: tuple.len() });
            }
            if let Some(&first) = seen.get(&tuple) {
                if first != label {
                    let tuple = tuple.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",");
                    return Err(LearnError::Contradictory { tuple, first, second: label });
                }
            }
            seen.insert(tuple, label);
        }
        Ok(TrainingSet { k, examples: seen.into_iter().collect() })
    }

    /// Reads JSON lines `{"tuple": [names...], "label": int}`, resolving names in `s`.
    pub fn from_jsonl(text: &str, s: &Structure, k: usize) -> Result<Self, LearnError> {
        #[derive(Deserialize)]
        struct Line {
            tuple: Vec<String>,
            label: i128,
        }
        let mut examples = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line =
                serde_json::from_str(raw).map_err(|e| LearnError::Format { line: i + 1, reason: e.to_string() })?;
            let tuple = line.tuple.iter().map(|n| s.resolve(n)).collect::<Result<Vec<_>, _>>()?;
            examples.push((tuple, line.label));
        }
        Self::new(k, examples)
    }

    pub fn empty(k: usize) -> Self {
        TrainingSet { k, examples: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn examples(&self) -> &[(Vec<Elem>, i128)] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// `constant + sum c * u` with parameters `params` for `ys`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub constant: i128,
    pub summands: Vec<(i128, Expr)>,
    pub xs: Vec<Var>,
    pub ys: Vec<Var>,
    pub params: Vec<Elem>,
    pub index_digest: String,
}

#[derive(Serialize, Deserialize)]
struct StoredSummand {
    coefficient: String,
    term: String,
}

#[derive(Serialize, Deserialize)]
struct StoredHypothesis {
    term: String,
    constant: String,
    summands: Vec<StoredSummand>,
    xs: Vec<String>,
    ys: Vec<String>,
    params: Vec<String>,
    index_digest: String,
}

impl Hypothesis {
    pub fn term(&self) -> Expr {
        let mut acc: Option<Expr> = (self.constant != 0 || self.summands.is_empty()).then(|| Expr::int(self.constant));
        for (c, u) in &self.summands {
            let scaled = |c: i128| if c == 1 { u.clone() } else { Expr::mul(Expr::int(c), u.clone()) };
            acc = Some(match acc {
                None => scaled(*c),
                Some(a) if *c < 0 => Expr::sub(a, scaled(-c)),
                Some(a) => Expr::add(a, scaled(*c)),
            });
        }
        acc.expect("constant or summand")
    }

    pub fn to_json(&self, s: &Structure) -> String {
        let stored = StoredHypothesis {
            term: self.term().to_string(),
            constant: self.constant.to_string(),
            summands: self
                .summands
                .iter()
                .map(|(c, u)| StoredSummand { coefficient: c.to_string(), term: u.to_string() })
                .collect(),
            xs: self.xs.iter().map(|v| v.to_string()).collect(),
            ys: self.ys.iter().map(|v| v.to_string()).collect(),
            params: self.params.iter().map(|&e| s.name(e).to_string()).collect(),
            index_digest: self.index_digest.clone(),
        };
        serde_json::to_string_pretty(&stored).expect("hypothesis serializes")
    }

    /// Reads a stored hypothesis against `index`, re-checking that every summand has
    /// pattern shape and that the hypothesis was learnt on this index.
    pub fn from_json(text: &str, index: &IndexArtifact, registry: &Registry) -> Result<Self, LearnError> {
        let bad = |m: String| LearnError::Hypothesis(m);
        let stored: StoredHypothesis = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if stored.index_digest != index.digest() {
            return Err(LearnError::StaleIndex(format!(
                "hypothesis was learnt on index {}, given {}",
                stored.index_digest,
                index.digest()
            )));
        }
        let cfg = &index.meta.config;
        if stored.xs.len() != cfg.k || stored.ys.len() != cfg.ell || stored.params.len() != cfg.ell {
            return Err(bad("variable counts do not match the index configuration".into()));
        }
        let int = |t: &str| t.parse::<i128>().map_err(|e| bad(format!("{t}: {e}")));
        let rho = 2 * index.meta.radius + 1;
        let mut summands = Vec::new();
        for s in &stored.summands {
            let u = parse_with(&s.term, registry)?;
            let p = PatternTerm::recognise(&u, rho).ok_or_else(|| bad(format!("{} is not a counting pattern", s.term)))?;
            if !p.graph.is_connected() || p.bound.len() > cfg.q {
                return Err(bad(format!("{} is outside the candidate grammar", s.term)));
            }
            summands.push((int(&s.coefficient)?, u));
        }
        Ok(Hypothesis {
            constant: int(&stored.constant)?,
            summands,
            xs: stored.xs.iter().map(|v| crate::lang::var(v)).collect(),
            ys: stored.ys.iter().map(|v| crate::lang::var(v)).collect(),
            params: stored.params.iter().map(|n| index.structure.resolve(n)).collect::<Result<_, _>>()?,
            index_digest: stored.index_digest,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Hypothesis(Hypothesis),
    Reject,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LearnReport {
    pub library_size: usize,
    pub neighbourhood: usize,
    pub parameter_tuples: usize,
    /// Term skeletons times parameter tuples: the size of the searched space.
    pub pairs_examined: u128,
    pub audit: AuditCounts,
}

#[derive(Clone, Debug)]
pub struct LearnResult {
    pub outcome: Outcome,
    pub report: LearnReport,
}

fn check_config(cfg: &HypothesisClassConfig, index: &IndexArtifact) -> Result<(), LearnError> {
    let want = cfg.digest();
    if want != index.meta.config_digest {
        return Err(LearnError::ConfigMismatch { expected: want, found: index.meta.config_digest.clone() });
    }
    Ok(())
}

/// The candidate space for `cfg` over the index's expanded signature.
pub fn candidate_terms(cfg: &HypothesisClassConfig, index: &IndexArtifact) -> Result<CandidateSpace, LearnError> {
    check_config(cfg, index)?;
    CandidateSpace::build(cfg, index.structure.signature(), index.meta.degree)
}

/// Every `ell`-tuple over `N`, the `(2r+1)(ell+q)`-ball of the training entries, in
/// lexicographic order of handles.
pub fn parameter_candidates(
    set: &TrainingSet,
    cfg: &HypothesisClassConfig,
    oracle: &LocalOracle<'_>,
) -> Result<(Vec<Elem>, Vec<Vec<Elem>>), LearnError> {
    if cfg.ell == 0 {
        return Ok((Vec::new(), vec![Vec::new()]));
    }
    let centres: Vec<Elem> = set.examples().iter().flat_map(|(t, _)| t.iter().copied()).collect();
    let radius = (2 * cfg.radius + 1) * (cfg.ell + cfg.q) as u32;
    let mut n = oracle.ball(&centres, radius)?;
    if n.is_empty() {
        n.extend(oracle.any_element());
    }
    let mut tuples = vec![Vec::new()];
    for _ in 0..cfg.ell {
        tuples = tuples
            .into_iter()
            .flat_map(|t: Vec<Elem>| {
                n.iter().map(move |&e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    Ok((n, tuples))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Group {
    Ground,
    X,
    Y,
    Mixed,
}

fn group(t: &LibraryTerm, ys: &[Var]) -> Group {
    let has_y = t.pattern.free.iter().any(|v| ys.contains(v));
    let has_x = t.pattern.free.iter().any(|v| !ys.contains(v));
    match (has_x, has_y) {
        (false, false) => Group::Ground,
        (true, false) => Group::X,
        (false, true) => Group::Y,
        (true, true) => Group::Mixed,
    }
}

/// Values of a non-ground pattern: its free variables take their values from `xs -> a`
/// and `ys -> w`, and it is evaluated on the neighbourhood of those values.
struct LocalTerms<'a> {
    space: &'a CandidateSpace,
    registry: &'a Registry,
    compiled: Vec<Option<Compiled>>,
    radius: u32,
}

impl<'a> LocalTerms<'a> {
    fn new(space: &'a CandidateSpace, s: &Structure, registry: &'a Registry, radius: u32) -> Result<Self, LearnError> {
        let ev = Evaluator::new(s, registry);
        let compiled = space
            .library
            .iter()
            .map(|t| (!t.is_ground()).then(|| ev.compile(&t.expr, &t.pattern.free)).transpose())
            .collect::<Result<_, _>>()?;
        Ok(LocalTerms { space, registry, compiled, radius })
    }

    /// Values of the terms `which` at `(a, w)`, read from one materialised neighbourhood.
    fn values(&self, oracle: &LocalOracle<'_>, a: &[Elem], w: &[Elem], which: &[usize]) -> Result<Vec<i128>, LearnError> {
        let centres: Vec<Elem> = a.iter().chain(w).copied().collect();
        let region = oracle.materialize(&centres, self.radius)?;
        let ev = Evaluator::new(&region.structure, self.registry);
        let value_of = |v: &Var| -> Elem {
            match self.space.xs.iter().position(|x| x == v) {
                Some(i) => a[i],
                None => w[self.space.ys.iter().position(|y| y == v).expect("pattern variable")],
            }
        };
        which
            .iter()
            .map(|&j| {
                let globals: Vec<Elem> = self.space.library[j].pattern.free.iter().map(value_of).collect();
                let args = region.localize(&globals)?;
                Ok(ev.term(self.compiled[j].as_ref().expect("non-ground"), &args)?)
            })
            .collect()
    }
}

/// Lexicographically first `(j_1, c_1, ..., j_p, c_p)` with `j` increasing and
/// `sum c_t * g[j_t] = target`, for the smallest `p <= max`.
fn first_combination(g: &[Vec<i128>], coefficients: &[i128], target: &[i128], max: usize) -> Option<Vec<(usize, usize)>> {
    if target.iter().all(|&v| v == 0) {
        return Some(Vec::new());
    }
    if max == 0 {
        return None;
    }
    let scale = |c: i128, v: &[i128]| -> Option<Vec<i128>> { v.iter().map(|&x| x.checked_mul(c)).collect() };
    // scaled vector -> (term, coefficient index), ascending
    let mut lookup: FxHashMap<Vec<i128>, Vec<(usize, usize)>> = FxHashMap::default();
    for (j, v) in g.iter().enumerate() {
        if v.iter().all(|&x| x == 0) {
            continue;
        }
        for (ci, &c) in coefficients.iter().enumerate() {
            if let Some(key) = scale(c, v) {
                lookup.entry(key).or_default().push((j, ci));
            }
        }
    }
    fn search(
        g: &[Vec<i128>],
        coefficients: &[i128],
        lookup: &FxHashMap<Vec<i128>, Vec<(usize, usize)>>,
        rest: &[i128],
        start: usize,
        left: usize,
        chosen: &mut Vec<(usize, usize)>,
    ) -> bool {
        if left == 1 {
            if let Some(hits) = lookup.get(rest) {
                let at = hits.partition_point(|&(j, _)| j < start);
                if let Some(&hit) = hits.get(at) {
                    chosen.push(hit);
                    return true;
                }
            }
            return false;
        }
        for j in start..g.len() {
            if g[j].iter().all(|&x| x == 0) {
                continue;
            }
            for (ci, &c) in coefficients.iter().enumerate() {
                let next: Option<Vec<i128>> =
                    rest.iter().zip(&g[j]).map(|(&r, &x)| x.checked_mul(c).and_then(|p| r.checked_sub(p))).collect();
                let Some(next) = next else { continue };
                chosen.push((j, ci));
                if search(g, coefficients, lookup, &next, j + 1, left - 1, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    (1..=max).find_map(|p| {
        let mut chosen = Vec::new();
        search(g, coefficients, &lookup, target, 0, p, &mut chosen).then_some(chosen)
    })
}

/// Searches for the first consistent hypothesis: fewest summands, then the summand
/// sequence in library and coefficient order, then the parameter tuple. The constant
/// is fixed by the first example's label.
pub fn learn(
    set: &TrainingSet,
    cfg: &HypothesisClassConfig,
    index: &IndexArtifact,
    registry: &Registry,
    audit: &AccessAudit,
) -> Result<LearnResult, LearnError> {
    check_config(cfg, index)?;
    if set.k() != cfg.k {
        return Err(LearnError::Length { expected: cfg.k, found: set.k() });
    }
    let before = audit.snapshot();
    let space = CandidateSpace::build(cfg, index.structure.signature(), index.meta.degree)?;
    let oracle = LocalOracle::new(&index.structure, audit);
    let (n, params) = parameter_candidates(set, cfg, &oracle)?;

    let mut ground = vec![0i128; space.library.len()];
    for (j, t) in space.library.iter().enumerate() {
        if t.is_ground() {
            ground[j] = *index
                .table
                .get(&t.key)
                .ok_or_else(|| LearnError::StaleIndex(format!("no table entry for {}", t.expr)))?;
        }
    }
    let groups: Vec<Group> = space.library.iter().map(|t| group(t, &space.ys)).collect();
    let of = |want: Group| -> Vec<usize> { (0..groups.len()).filter(|&j| groups[j] == want).collect() };
    let (x_terms, y_terms, mixed_terms) = (of(Group::X), of(Group::Y), of(Group::Mixed));

    let local = LocalTerms::new(&space, &index.structure, registry, index.meta.eval_radius)?;
    let examples = set.examples();
    let labels: Vec<i128> = examples.iter().map(|(_, l)| *l).collect();
    // features[j][i]: value of term j on example i
    let mut base: Vec<Vec<i128>> = ground.iter().map(|&v| vec![v; examples.len()]).collect();
    for (i, (a, _)) in examples.iter().enumerate() {
        for (&j, v) in x_terms.iter().zip(local.values(&oracle, a, &[], &x_terms)?) {
            base[j][i] = v;
        }
    }

    let best = params
        .par_iter()
        .enumerate()
        .map_init(
            // the same compilation already succeeded above
            || LocalTerms::new(&space, &index.structure, registry, index.meta.eval_radius).expect("compiles"),
            |local, (pi, w)| -> Result<Option<(Vec<(usize, usize)>, usize, i128)>, LearnError> {
            let mut f = base.clone();
            if !examples.is_empty() {
                let ys = local.values(&oracle, &[], w, &y_terms)?;
                for (&j, v) in y_terms.iter().zip(ys) {
                    f[j].iter_mut().for_each(|x| *x = v);
                }
            }
            for (i, (a, _)) in examples.iter().enumerate() {
                for (&j, v) in mixed_terms.iter().zip(local.values(&oracle, a, w, &mixed_terms)?) {
                    f[j][i] = v;
                }
            }
            let first = |v: &Vec<i128>| v.first().copied().unwrap_or(0);
            let g: Vec<Vec<i128>> = f.iter().map(|v| v.iter().map(|x| x - first(v)).collect()).collect();
            let target: Vec<i128> = labels.iter().map(|l| l - labels[0]).collect();
            Ok(first_combination(&g, &space.coefficients, &target, space.max_summands).map(|combo| {
                let offset: i128 = combo.iter().map(|&(j, ci)| space.coefficients[ci] * first(&f[j])).sum();
                (combo, pi, labels.first().copied().unwrap_or(0) - offset)
            }))
        },
        )
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .min_by(|a, b| (a.0.len(), &a.0, a.1).cmp(&(b.0.len(), &b.0, b.1)));

    let audit_delta = audit.snapshot().since(&before);
    if audit_delta.global_scans != 0 {
        return Err(LearnError::AuditViolation { scans: audit_delta.global_scans });
    }
    let report = LearnReport {
        library_size: space.library.len(),
        neighbourhood: n.len(),
        parameter_tuples: params.len(),
        pairs_examined: space.skeleton_count().saturating_mul(params.len() as u128),
        audit: audit_delta,
    };
    let outcome = match best {
        None => Outcome::Reject,
        Some((combo, pi, constant)) => Outcome::Hypothesis(Hypothesis {
            constant,
            summands: combo
                .into_iter()
                .map(|(j, ci)| (space.coefficients[ci], space.library[j].expr.clone()))
                .collect(),
            xs: space.xs.clone(),
            ys: space.ys.clone(),
            params: params[pi].clone(),
            index_digest: index.digest().to_string(),
        }),
    };
    Ok(LearnResult { outcome, report })
}

/// Value of `h` at `a`: ground summands come from the lookup table, the others are
/// evaluated on the neighbourhood of `a` and the parameters.
pub fn evaluate_hypothesis(
    h: &Hypothesis,
    a: &[Elem],
    index: &IndexArtifact,
    registry: &Registry,
    audit: &AccessAudit,
) -> Result<i128, LearnError> {
    if h.index_digest != index.digest() {
        return Err(LearnError::StaleIndex(format!(
            "hypothesis was learnt on index {}, given {}",
            h.index_digest,
            index.digest()
        )));
    }
    if a.len() != h.xs.len() {
        return Err(LearnError::Length { expected: h.xs.len(), found: a.len() });
    }
    let before = audit.snapshot();
    let oracle = LocalOracle::new(&index.structure, audit);
    let mut total = h.constant;
    let mut region = None;
    for (c, u) in &h.summands {
        let value = if u.free_vars().is_empty() {
            *index
                .table
                .get(&canonical_key(u))
                .ok_or_else(|| LearnError::StaleIndex(format!("no table entry for {u}")))?
        } else {
            let centres: Vec<Elem> = a.iter().chain(&h.params).copied().collect();
            let region = match &mut region {
                Some(r) => r,
                None => region.insert(oracle.materialize(&centres, index.meta.eval_radius)?),
            };
            let inputs: Vec<Var> = u.free_vars().iter().cloned().collect();
            let globals: Vec<Elem> = inputs
                .iter()
                .map(|v| match h.xs.iter().position(|x| x == v) {
                    Some(i) => Ok(a[i]),
                    None => h
                        .ys
                        .iter()
                        .position(|y| y == v)
                        .map(|i| h.params[i])
                        .ok_or_else(|| LearnError::Hypothesis(format!("variable {v} is not a hypothesis variable"))),
                })
                .collect::<Result<_, _>>()?;
            let ev = Evaluator::new(&region.structure, registry);
            let compiled = ev.compile(u, &inputs)?;
            ev.term(&compiled, &region.localize(&globals)?)?
        };
        total = c
            .checked_mul(value)
            .and_then(|v| total.checked_add(v))
            .ok_or(LearnError::Eval(EvalError::Overflow))?;
    }
    let scans = audit.snapshot().since(&before).global_scans;
    if scans != 0 {
        return Err(LearnError::AuditViolation { scans });
    }
    Ok(total)
}
