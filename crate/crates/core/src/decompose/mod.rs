//! Rewriting counting terms into sums and products of connected-local counting terms.
//!
//! A term `#z.phi'` splits over component patterns as `sum_G #z.(phi' & delta_G)`.
//! Each summand with a disconnected pattern `G` is rewritten by induction on the number
//! of components: with `C1` the component of the first vertex and `C2` the rest,
//! `phi'` is split into exclusive pairs `(alpha, beta)` over the two sides, and
//!
//! `#z.(alpha & beta & delta_G) = #z1.(alpha & delta_{G[C1]}) * #z2.(beta & delta_{G[C2]})
//!     - sum_{H} #z.(alpha & beta & delta_H)`
//!
//! where `H` ranges over the patterns agreeing with `G` inside `C1` and `C2` but joining
//! them somewhere. Connected summands without instance variables become constants,
//! and those whose parameters lie outside the training neighbourhood become 0.


use std::collections::BTreeSet;

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::eval::Evaluator;
use crate::graph::Graph;
use crate::lang::{canonical_key, Expr, Kind, Registry, Var};
use crate::locality::{locality_radius, nu};
use crate::pattern::PatternTerm;
use crate::relstore::{Elem, RelError, Structure};
use crate::semantics::{Assignment, EvalError};

/// Side-1 blocks beyond this make the exclusive expansion too large.
const MAX_BLOCKS: usize = 12;
/// Vertex pairs beyond this make the pattern family too large to enumerate.
const MAX_PATTERN_PAIRS: usize = 15;

#[derive(Debug, thiserror::Error)]
pub enum DecomposeError {
    #[error("{expr} is outside the separable fragment: {reason}")]
    Fragment { expr: String, reason: String },
    #[error("radius mismatch: {expr} is {found:?}-local, declared radius is {declared}")]
    Radius { expr: String, found: Option<u32>, declared: u32 },
    #[error("tuple lengths differ: {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("pattern on {vertices} vertices is too large to enumerate")]
    TooLarge { vertices: usize },
    #[error("constant {value} for {term} outside [0, {bound}]")]
    Range { term: String, value: i128, bound: u128 },
    #[error("free variable {0} is neither an instance nor a parameter variable")]
    Unbound(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rel(#[from] RelError),
}

/// `w ≍_N w'`: the tuples agree wherever `w` has an entry in `n`. Not symmetric.
pub fn tuple_eq_in_set(w: &[Elem], w2: &[Elem], n: &FxHashSet<Elem>) -> Result<bool, DecomposeError> {
    if w.len() != w2.len() {
        return Err(DecomposeError::LengthMismatch { left: w.len(), right: w2.len() });
    }
    Ok(w.iter().zip(w2).all(|(a, b)| !n.contains(a) || a == b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentSplit {
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
    pub g1: Graph,
    pub g2: Graph,
}

/// Splits off the component of vertex 0.
pub fn component_split(g: &Graph) -> ComponentSplit {
    assert!(!g.is_empty(), "pattern needs a vertex");
    let c1 = g.components().swap_remove(0);
    let c2: Vec<usize> = (0..g.len()).filter(|v| !c1.contains(v)).collect();
    ComponentSplit { g1: g.induced(&c1), g2: g.induced(&c2), c1, c2 }
}

/// Split of the free variables, with every cross pair known to be more than `apart` apart.
#[derive(Clone, Debug)]
pub struct Partition {
    pub left: BTreeSet<Var>,
    pub right: BTreeSet<Var>,
    pub apart: u32,
}

/// Exclusive pairs: `phi` holds iff exactly one pair has both halves true.
#[derive(Clone, Debug)]
pub struct PairDecomposition {
    pub pairs: Vec<(Expr, Expr)>,
}

fn conj(a: Expr, b: Expr) -> Expr {
    match (a.kind(), b.kind()) {
        (Kind::Bool(false), _) | (_, Kind::Bool(true)) => a,
        (_, Kind::Bool(false)) | (Kind::Bool(true), _) => b,
        _ => Expr::and(a, b),
    }
}

fn disj(a: Expr, b: Expr) -> Expr {
    match (a.kind(), b.kind()) {
        (Kind::Bool(true), _) | (_, Kind::Bool(false)) => a,
        (_, Kind::Bool(true)) | (Kind::Bool(false), _) => b,
        _ => Expr::or(a, b),
    }
}

fn neg(a: Expr) -> Expr {
    match a.kind() {
        Kind::Bool(b) => Expr::truth(!b),
        Kind::Not(inner) => inner.clone(),
        _ => Expr::not(a),
    }
}

struct Splitter<'p> {
    part: &'p Partition,
    blocks: Vec<Expr>,
}

enum Side {
    Left,
    Right,
    Mixed,
}

impl Splitter<'_> {
    fn side(&self, e: &Expr) -> Side {
        let fv = e.free_vars();
        if fv.iter().all(|v| self.part.left.contains(v)) {
            Side::Left
        } else if fv.iter().all(|v| self.part.right.contains(v)) {
            Side::Right
        } else {
            Side::Mixed
        }
    }

    fn collect(&mut self, e: &Expr) -> Result<(), DecomposeError> {
        match self.side(e) {
            Side::Left => {
                if !self.blocks.contains(e) {
                    self.blocks.push(e.clone());
                }
                Ok(())
            }
            Side::Right => Ok(()),
            Side::Mixed => match e.kind() {
                Kind::Not(a) => self.collect(a),
                Kind::Or(a, b) => {
                    self.collect(a)?;
                    self.collect(b)
                }
                _ => self.cross_leaf(e).map(|_| ()),
            },
        }
    }

    /// Value of an atomic formula whose variables lie on both sides.
    fn cross_leaf(&self, e: &Expr) -> Result<bool, DecomposeError> {
        let outside = |reason: &str| DecomposeError::Fragment { expr: e.to_string(), reason: reason.to_string() };
        for v in e.free_vars() {
            if !self.part.left.contains(v) && !self.part.right.contains(v) {
                return Err(outside(&format!("variable {v} is on neither side")));
            }
        }
        match e.kind() {
            Kind::Eq(..) => Ok(false),
            Kind::Atom(..) if self.part.apart >= 1 => Ok(false),
            Kind::DistLe(_, _, r) if *r <= self.part.apart => Ok(false),
            _ => Err(outside("a subformula reaches across the split")),
        }
    }

    fn instantiate(&self, e: &Expr, truth: &[bool]) -> Result<Expr, DecomposeError> {
        Ok(match self.side(e) {
            Side::Left => {
                let i = self.blocks.iter().position(|b| b == e).expect("collected block");
                Expr::truth(truth[i])
            }
            Side::Right => e.clone(),
            Side::Mixed => match e.kind() {
                Kind::Not(a) => neg(self.instantiate(a, truth)?),
                Kind::Or(a, b) => disj(self.instantiate(a, truth)?, self.instantiate(b, truth)?),
                _ => Expr::truth(self.cross_leaf(e)?),
            },
        })
    }
}

/// Exclusive decomposition of `phi` along `part`, by case distinction over the truth
/// values of its maximal left-side blocks. Pairs with equal right halves are merged.
pub fn fv_decompose(phi: &Expr, part: &Partition) -> Result<PairDecomposition, DecomposeError> {
    let mut sp = Splitter { part, blocks: Vec::new() };
    sp.collect(phi)?;
    if sp.blocks.len() > MAX_BLOCKS {
        return Err(DecomposeError::Fragment {
            expr: phi.to_string(),
            reason: format!("{} left-side blocks exceed the cap of {MAX_BLOCKS}", sp.blocks.len()),
        });
    }
    let p = sp.blocks.len();
    let mut pairs: Vec<(Expr, Expr)> = Vec::new();
    let mut keys: Vec<String> = Vec::new();
    for code in 0..(1u32 << p) {
        // block 0 is the most significant choice, true before false
        let truth: Vec<bool> = (0..p).map(|i| code & (1 << (p - 1 - i)) == 0).collect();
        let beta = sp.instantiate(phi, &truth)?;
        if matches!(beta.kind(), Kind::Bool(false)) {
            continue;
        }
        let alpha = sp
            .blocks
            .iter()
            .zip(&truth)
            .map(|(b, &t)| if t { b.clone() } else { neg(b.clone()) })
            .fold(Expr::truth(true), conj);
        let key = canonical_key(&beta);
        match keys.iter().position(|k| *k == key) {
            Some(i) => pairs[i].0 = disj(pairs[i].0.clone(), alpha),
            None => {
                keys.push(key);
                pairs.push((alpha, beta));
            }
        }
    }
    Ok(PairDecomposition { pairs })
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.kind(), b.kind()) {
        (Kind::Int(0), _) => b,
        (_, Kind::Int(0)) => a,
        (Kind::Int(i), Kind::Int(j)) => Expr::int(i + j),
        _ => Expr::add(a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.kind(), b.kind()) {
        (Kind::Int(0), _) | (_, Kind::Int(1)) => a,
        (_, Kind::Int(0)) | (Kind::Int(1), _) => b,
        (Kind::Int(i), Kind::Int(j)) => Expr::int(i * j),
        _ => Expr::mul(a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.kind(), b.kind()) {
        (_, Kind::Int(0)) => a,
        (Kind::Int(i), Kind::Int(j)) => Expr::int(i - j),
        _ => Expr::sub(a, b),
    }
}

/// Rewrite tree of one pattern summand.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Trace {
    /// Connected pattern kept as it is (no free variables, or parameters near the examples).
    Keep { term: String },
    /// Connected pattern over parameters only, replaced by its value.
    Constant { term: String, value: i128, bound: u128 },
    /// Connected pattern joining instances to a parameter outside the neighbourhood.
    Zero { term: String },
    Split { term: String, c1: Vec<usize>, c2: Vec<usize>, pairs: Vec<PairTrace> },
}

#[derive(Clone, Debug, Serialize)]
pub struct PairTrace {
    pub alpha: String,
    pub beta: String,
    pub left: Trace,
    pub right: Trace,
    pub corrections: Vec<Trace>,
}

/// One summand `u_G` of a counting term and its rewriting.
#[derive(Clone, Debug)]
pub struct Piece {
    pub graph: Graph,
    pub source: Expr,
    pub rewritten: Expr,
    pub trace: Trace,
}

#[derive(Clone, Debug)]
pub struct CountDecomposition {
    pub count: Expr,
    pub pieces: Vec<Piece>,
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    /// The rewritten term `t'`.
    pub term: Expr,
    pub counts: Vec<CountDecomposition>,
    /// Values introduced for parameter-only patterns, with their bounds.
    pub constants: Vec<(i128, u128)>,
    /// The neighbourhood of the training tuples used for the parameter cases.
    pub neighbourhood: Vec<Elem>,
    pub radius: u32,
    /// Largest number of variables bound by one counting term of the input.
    pub width: usize,
    pub degree: usize,
}

impl DecompositionResult {
    pub fn to_json(&self) -> serde_json::Value {
        let counts: Vec<_> = self
            .counts
            .iter()
            .map(|c| {
                let pieces: Vec<_> = c
                    .pieces
                    .iter()
                    .map(|p| {
                        serde_json::json!({
                            "graph": p.graph.edges(),
                            "source": p.source.to_string(),
                            "rewritten": p.rewritten.to_string(),
                            "trace": p.trace,
                        })
                    })
                    .collect();
                serde_json::json!({ "count": c.count.to_string(), "pieces": pieces })
            })
            .collect();
        serde_json::json!({
            "term": self.term.to_string(),
            "radius": self.radius,
            "width": self.width,
            "degree": self.degree,
            "neighbourhood": self.neighbourhood,
            "constants": self.constants.iter().map(|(v, b)| serde_json::json!({"value": v, "bound": b.to_string()})).collect::<Vec<_>>(),
            "counts": counts,
        })
    }
}

/// Everything the rewriting depends on besides the term itself.
#[derive(Clone, Debug)]
pub struct DecomposeInput<'a> {
    /// The expanded structure the term is local on.
    pub structure: &'a Structure,
    pub registry: &'a Registry,
    pub xs: Vec<Var>,
    pub ys: Vec<Var>,
    pub training: Vec<Vec<Elem>>,
    pub params: Vec<Elem>,
    /// Locality radius of every counting body.
    pub radius: u32,
}

struct Ctx<'a, 'i> {
    input: &'i DecomposeInput<'a>,
    near: FxHashSet<Elem>,
    degree: usize,
    constants: Vec<(i128, u128)>,
}

impl Ctx<'_, '_> {
    fn param(&self, v: &Var) -> Option<Elem> {
        self.input.ys.iter().position(|y| y == v).map(|i| self.input.params[i])
    }

    fn is_instance(&self, v: &Var) -> bool {
        self.input.xs.contains(v)
    }

    fn rewrite(&mut self, p: &PatternTerm) -> Result<(Expr, Trace), DecomposeError> {
        if p.graph.is_connected() {
            return self.base(p);
        }
        let split = component_split(&p.graph);
        let vars = p.vars();
        let nf = p.free.len();
        let pick = |side: &[usize]| -> (Vec<Var>, Vec<Var>) {
            let free = side.iter().filter(|&&i| i < nf).map(|&i| vars[i].clone()).collect();
            let bound = side.iter().filter(|&&i| i >= nf).map(|&i| vars[i].clone()).collect();
            (free, bound)
        };
        let (f1, b1) = pick(&split.c1);
        let (f2, b2) = pick(&split.c2);
        let part = Partition {
            left: split.c1.iter().map(|&i| vars[i].clone()).collect(),
            right: split.c2.iter().map(|&i| vars[i].clone()).collect(),
            apart: p.rho,
        };
        let delta = fv_decompose(&p.psi, &part)?;
        let family = joined_family(&p.graph, &split);
        let mut total = Expr::int(0);
        let mut traces = Vec::new();
        for (alpha, beta) in delta.pairs {
            let t1 = PatternTerm { free: f1.clone(), bound: b1.clone(), psi: alpha.clone(), graph: split.g1, rho: p.rho };
            let t2 = PatternTerm { free: f2.clone(), bound: b2.clone(), psi: beta.clone(), graph: split.g2, rho: p.rho };
            let (e1, tr1) = self.rewrite(&t1)?;
            let (e2, tr2) = self.rewrite(&t2)?;
            let mut correction = Expr::int(0);
            let mut corr_traces = Vec::new();
            for h in &family {
                let th = PatternTerm {
                    free: p.free.clone(),
                    bound: p.bound.clone(),
                    psi: conj(alpha.clone(), beta.clone()),
                    graph: *h,
                    rho: p.rho,
                };
                let (eh, trh) = self.rewrite(&th)?;
                correction = add(correction, eh);
                corr_traces.push(trh);
            }
            total = add(total, sub(mul(e1, e2), correction));
            traces.push(PairTrace {
                alpha: alpha.to_string(),
                beta: beta.to_string(),
                left: tr1,
                right: tr2,
                corrections: corr_traces,
            });
        }
        let trace = Trace::Split { term: p.to_expr().to_string(), c1: split.c1, c2: split.c2, pairs: traces };
        Ok((total, trace))
    }

    fn base(&mut self, p: &PatternTerm) -> Result<(Expr, Trace), DecomposeError> {
        let term = p.to_expr();
        let has_x = p.free.iter().any(|v| self.is_instance(v));
        let params: Vec<Elem> = p.free.iter().filter_map(|v| self.param(v)).collect();
        if !has_x && params.is_empty() {
            return Ok((term.clone(), Trace::Keep { term: term.to_string() }));
        }
        if has_x {
            if params.iter().all(|w| self.near.contains(w)) {
                return Ok((term.clone(), Trace::Keep { term: term.to_string() }));
            }
            return Ok((Expr::int(0), Trace::Zero { term: term.to_string() }));
        }
        // every witness lies within (2r'+1)m of the parameters
        let m = p.bound.len() as u64;
        let reach = p.rho * m as u32;
        let s = self.input.structure;
        let ball = s.gaifman().ball(&params, reach + self.input.radius + 1)?;
        let region = s.induced(&ball)?;
        let ev = Evaluator::new(&region.structure, self.input.registry);
        let beta: Assignment = p
            .free
            .iter()
            .map(|v| Ok((v.clone(), region.local(self.param(v).expect("parameter")).expect("parameter in its ball"))))
            .collect::<Result<_, DecomposeError>>()?;
        let value = ev.eval_term(&term, &beta)?;
        let base = (params.len() as u128).saturating_mul(nu(self.degree as u64, reach as u64));
        let bound = (0..m).fold(1u128, |acc, _| acc.saturating_mul(base));
        if value < 0 || value as u128 > bound {
            return Err(DecomposeError::Range { term: term.to_string(), value, bound });
        }
        self.constants.push((value, bound));
        Ok((Expr::int(value), Trace::Constant { term: term.to_string(), value, bound }))
    }
}

/// Patterns that agree with `g` inside both sides of `split` and join them somewhere.
fn joined_family(g: &Graph, split: &ComponentSplit) -> Vec<Graph> {
    let cross: Vec<(usize, usize)> = split
        .c1
        .iter()
        .flat_map(|&a| split.c2.iter().map(move |&b| (a.min(b), a.max(b))))
        .collect();
    (1u64..(1u64 << cross.len()))
        .map(|mask| {
            let mut h = *g;
            for (i, &(a, b)) in cross.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    h.add_edge(a, b);
                }
            }
            h
        })
        .collect()
}

/// The summands `#z.(phi & delta_{G,rho})` of a counting term, one per pattern `G` on
/// its free variables followed by its bound ones. Free variables are ordered as in
/// `order`.
pub fn pattern_split(count: &Expr, order: &[Var], rho: u32) -> Result<Vec<PatternTerm>, DecomposeError> {
    let Kind::Count(zs, body) = count.kind() else {
        return Err(DecomposeError::Fragment { expr: count.to_string(), reason: "not a counting term".into() });
    };
    let free: Vec<Var> = order.iter().filter(|v| count.free_vars().contains(*v)).cloned().collect();
    if let Some(v) = count.free_vars().iter().find(|v| !order.contains(v)) {
        return Err(DecomposeError::Unbound(v.to_string()));
    }
    let n = free.len() + zs.len();
    if n * n.saturating_sub(1) / 2 > MAX_PATTERN_PAIRS {
        return Err(DecomposeError::TooLarge { vertices: n });
    }
    Ok(Graph::all(n)
        .map(|graph| PatternTerm { free: free.clone(), bound: zs.clone(), psi: body.clone(), graph, rho })
        .collect())
}

/// Largest number of variables bound by a single counting term.
pub fn count_width(e: &Expr) -> usize {
    let mut w = 0;
    e.visit(&mut |n| {
        if let Kind::Count(zs, _) = n.kind() {
            w = w.max(zs.len());
        }
    });
    w
}

/// Rewrites every outermost counting term of `t` as described in the module docs.
///
/// The result agrees with `t` at every training tuple and every parameter tuple `w'`
/// with `params ≍_N w'`, where `N` is the `(2r+1)(ell+q)`-neighbourhood of the
/// training tuples.
pub fn decompose_term(t: &Expr, input: &DecomposeInput<'_>) -> Result<DecompositionResult, DecomposeError> {
    if input.params.len() != input.ys.len() {
        return Err(DecomposeError::LengthMismatch { left: input.ys.len(), right: input.params.len() });
    }
    for v in &input.training {
        if v.len() != input.xs.len() {
            return Err(DecomposeError::LengthMismatch { left: input.xs.len(), right: v.len() });
        }
    }
    let s = input.structure;
    let r = input.radius;
    let rho = 2 * r + 1;
    let width = count_width(t);
    let centers: Vec<Elem> = input.training.iter().flatten().copied().collect();
    let reach = rho * (input.ys.len() + width) as u32;
    let neighbourhood = s.gaifman().ball(&centers, reach)?;
    let mut ctx = Ctx {
        input,
        near: neighbourhood.iter().copied().collect(),
        degree: s.gaifman().degree(),
        constants: Vec::new(),
    };
    let order: Vec<Var> = input.xs.iter().chain(&input.ys).cloned().collect();
    let mut counts = Vec::new();
    let term = rewrite_counts(t, &mut |count| {
        let Kind::Count(_, body) = count.kind() else { unreachable!() };
        let found = locality_radius(body, s.signature());
        if found.is_none_or(|f| f > r) {
            return Err(DecomposeError::Radius { expr: body.to_string(), found, declared: r });
        }
        let mut pieces = Vec::new();
        let mut sum = Expr::int(0);
        for u in pattern_split(count, &order, rho)? {
            let (rewritten, trace) = ctx.rewrite(&u)?;
            sum = add(sum, rewritten.clone());
            pieces.push(Piece { graph: u.graph, source: u.to_expr(), rewritten, trace });
        }
        counts.push(CountDecomposition { count: count.clone(), pieces });
        Ok(sum)
    })?;
    Ok(DecompositionResult {
        term,
        counts,
        constants: ctx.constants,
        neighbourhood,
        radius: r,
        width,
        degree: ctx.degree,
    })
}

fn rewrite_counts(
    e: &Expr,
    f: &mut impl FnMut(&Expr) -> Result<Expr, DecomposeError>,
) -> Result<Expr, DecomposeError> {
    match e.kind() {
        Kind::Count(..) => f(e),
        Kind::Int(_) => Ok(e.clone()),
        Kind::Add(a, b) => Ok(add(rewrite_counts(a, f)?, rewrite_counts(b, f)?)),
        Kind::Mul(a, b) => Ok(mul(rewrite_counts(a, f)?, rewrite_counts(b, f)?)),
        _ => Err(DecomposeError::Fragment {
            expr: e.to_string(),
            reason: "only sums and products of counting terms are decomposed".into(),
        }),
    }
}
