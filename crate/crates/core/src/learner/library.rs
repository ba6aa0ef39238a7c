//! The candidate space: connected-local counting patterns and their linear combinations.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashSet;

use super::LearnError;
use crate::graph::Graph;
use crate::lang::{canonical_key, var, Expr, HypothesisClassConfig, Kind, Var};
use crate::locality::nu;
use crate::pattern::PatternTerm;
use crate::relstore::Signature;

#[derive(Clone, Debug)]
pub struct LibraryTerm {
    pub pattern: PatternTerm,
    pub expr: Expr,
    /// Lookup-table key; also the deduplication key.
    pub key: String,
    pub uses_params: bool,
}

impl LibraryTerm {
    pub fn is_ground(&self) -> bool {
        self.pattern.is_ground()
    }
}

/// Hypotheses `c0 + c1*u1 + ... + cp*up` with `p <= max_summands`, distinct `u` from the
/// library in increasing order, and `c` from `coefficients`. The constant `c0` is solved
/// from the training labels.
#[derive(Clone, Debug)]
pub struct CandidateSpace {
    pub xs: Vec<Var>,
    pub ys: Vec<Var>,
    pub library: Vec<LibraryTerm>,
    pub coefficients: Vec<i128>,
    pub max_summands: usize,
    /// Largest small constant of the grammar, `(ell * nu_d((2r+1)q))^q`.
    pub constant_bound: i128,
    pub clamped: bool,
    pub rho: u32,
}

fn binom(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

impl CandidateSpace {
    /// Number of term skeletons `(u, c)` of every length up to `max_summands`.
    pub fn skeleton_count(&self) -> u128 {
        let l = self.library.len() as u128;
        let c = self.coefficients.len() as u128;
        (0..=self.max_summands as u128)
            .filter(|&p| p <= l)
            .map(|p| binom(l, p).saturating_mul(c.saturating_pow(p as u32)))
            .fold(0u128, u128::saturating_add)
    }

    /// Size of the term set when the constant ranges over `-1..=constant_bound`.
    pub fn term_count(&self) -> u128 {
        self.skeleton_count().saturating_mul(self.constant_bound as u128 + 2)
    }

    pub fn ground_terms(&self) -> impl Iterator<Item = &LibraryTerm> {
        self.library.iter().filter(|t| t.is_ground())
    }

    pub fn build(cfg: &HypothesisClassConfig, sig: &Signature, degree: usize) -> Result<CandidateSpace, LearnError> {
        cfg.validate()?;
        let xs: Vec<Var> = (1..=cfg.k).map(|i| var(&format!("x{i}"))).collect();
        let ys: Vec<Var> = (1..=cfg.ell).map(|i| var(&format!("y{i}"))).collect();
        let rho = 2 * cfg.radius + 1;
        let symbols: Vec<(String, usize)> = sig
            .symbols()
            .iter()
            .filter(|s| cfg.symbols.as_ref().is_none_or(|allowed| allowed.contains(&s.name)))
            .map(|s| (s.name.clone(), s.arity))
            .collect();
        if let Some(allowed) = &cfg.symbols {
            if let Some(missing) = allowed.iter().find(|a| sig.lookup(a).is_none()) {
                return Err(LearnError::UnknownSymbol(missing.clone()));
            }
        }
        let mut library = Vec::new();
        let mut seen: FxHashSet<String> = FxHashSet::default();
        let pool: Vec<Var> = xs.iter().chain(&ys).cloned().collect();
        let max_vars = cfg.caps.max_term_vars;
        for total in 1..=max_vars {
            for m in 0..=cfg.q.min(total) {
                let nf = total - m;
                if nf > pool.len() {
                    continue;
                }
                for free in subsets(&pool, nf) {
                    let zs: Vec<Var> = (1..=m).map(|i| var(&format!("z{i}"))).collect();
                    let vars: Vec<Var> = free.iter().chain(&zs).cloned().collect();
                    let literals = literals(&symbols, &vars);
                    for psi in conjunctions(&literals, &vars, cfg.caps.max_psi_atoms) {
                        for graph in Graph::connected(vars.len()) {
                            if !compatible(&psi, &vars, &graph) {
                                continue;
                            }
                            let pattern = PatternTerm {
                                free: free.clone(),
                                bound: zs.clone(),
                                psi: Expr::and_all(psi.iter().cloned()),
                                graph,
                                rho,
                            };
                            let key = dedup_key(&pattern);
                            if !seen.insert(key) {
                                continue;
                            }
                            if library.len() >= cfg.caps.max_library {
                                return Err(LearnError::CapOverflow { cap: cfg.caps.max_library });
                            }
                            let expr = pattern.to_expr();
                            library.push(LibraryTerm {
                                key: canonical_key(&expr),
                                uses_params: free.iter().any(|v| ys.contains(v)),
                                expr,
                                pattern,
                            });
                        }
                    }
                }
            }
        }
        let mut coefficients = vec![1, -1];
        let mut extra: Vec<i128> = cfg.ints.iter().copied().filter(|c| !coefficients.contains(c) && *c != 0).collect();
        extra.sort_unstable();
        extra.dedup();
        coefficients.extend(extra);
        let (constant_bound, clamped) = constant_bound(cfg, degree);
        if clamped {
            log::warn!("constant bound exceeds the 128-bit range and was clamped");
        }
        Ok(CandidateSpace {
            xs,
            ys,
            library,
            coefficients,
            max_summands: cfg.caps.max_summands,
            constant_bound,
            clamped,
            rho,
        })
    }
}

/// `(ell * nu_d((2r+1)q))^q`, clamped to `i128::MAX`.
pub fn constant_bound(cfg: &HypothesisClassConfig, degree: usize) -> (i128, bool) {
    let reach = (2 * cfg.radius as u64 + 1) * cfg.q as u64;
    let base = (cfg.ell as u128).saturating_mul(nu(degree as u64, reach));
    let mut acc: u128 = 1;
    for _ in 0..cfg.q {
        acc = acc.saturating_mul(base);
    }
    if cfg.q > 0 && base == 0 {
        acc = 0;
    }
    if acc > i128::MAX as u128 {
        (i128::MAX, true)
    } else {
        (acc as i128, false)
    }
}

fn subsets(pool: &[Var], k: usize) -> Vec<Vec<Var>> {
    let mut out = Vec::new();
    let n = pool.len();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).map(|i| pool[i].clone()).collect());
        }
    }
    out
}

/// Atoms and equalities over `vars`, each followed by its negation.
fn literals(symbols: &[(String, usize)], vars: &[Var]) -> Vec<Expr> {
    let mut atoms = Vec::new();
    for (name, arity) in symbols {
        let n = vars.len();
        let total = n.pow(*arity as u32);
        for code in 0..total {
            let mut c = code;
            let args: Vec<Var> = (0..*arity)
                .map(|_| {
                    let v = vars[c % n].clone();
                    c /= n;
                    v
                })
                .collect();
            atoms.push(Expr::atom_vars(name, args));
        }
    }
    for j in 0..vars.len() {
        for i in 0..j {
            atoms.push(Expr::new(Kind::Eq(vars[i].clone(), vars[j].clone())).expect("equality"));
        }
    }
    atoms.into_iter().flat_map(|a| [a.clone(), Expr::not(a)]).collect()
}

/// Conjunctions of 1 to `max` literals that mention every variable and never contain
/// a literal together with its negation.
fn conjunctions(literals: &[Expr], vars: &[Var], max: usize) -> Vec<Vec<Expr>> {
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(literals: &[Expr], vars: &[Var], max: usize, start: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<Expr>>) {
        if !chosen.is_empty() {
            let lits: Vec<&Expr> = chosen.iter().map(|&i| &literals[i]).collect();
            let covered: BTreeSet<&Var> = lits.iter().flat_map(|l| l.free_vars().iter()).collect();
            if covered.len() == vars.len() {
                out.push(lits.into_iter().cloned().collect());
            }
        }
        if chosen.len() == max {
            return;
        }
        for i in start..literals.len() {
            // literals come in (atom, negation) pairs
            if chosen.iter().any(|&c| c / 2 == i / 2) {
                continue;
            }
            chosen.push(i);
            rec(literals, vars, max, i + 1, chosen, out);
            chosen.pop();
        }
    }
    rec(literals, vars, max, 0, &mut chosen, &mut out);
    out
}

/// Positive atoms and equalities force their variables within distance 1, so the
/// pattern must join them; otherwise the term is identically 0.
fn compatible(psi: &[Expr], vars: &[Var], graph: &Graph) -> bool {
    let pos = |v: &Var| vars.iter().position(|w| w == v).expect("pattern variable");
    psi.iter().all(|lit| {
        let args: Vec<&Var> = match lit.kind() {
            Kind::Atom(_, args) => args.iter().collect(),
            Kind::Eq(a, b) => vec![a, b],
            _ => return true,
        };
        args.iter().all(|a| args.iter().all(|b| a == b || graph.has_edge(pos(a), pos(b))))
    })
}

fn symmetric_normal(e: &Expr) -> Expr {
    match e.kind() {
        Kind::Eq(a, b) if a > b => Expr::new(Kind::Eq(b.clone(), a.clone())).expect("equality"),
        _ => {
            let kids: Vec<Expr> = e.children().into_iter().map(symmetric_normal).collect();
            if kids.is_empty() {
                e.clone()
            } else {
                e.with_children(kids).expect("same sorts")
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Canonical key minimised over renamings of the bound variables.
fn dedup_key(p: &PatternTerm) -> String {
    let nf = p.free.len();
    let n = nf + p.bound.len();
    permutations(p.bound.len())
        .into_iter()
        .map(|perm| {
            let map: BTreeMap<Var, Var> =
                p.bound.iter().enumerate().map(|(i, z)| (z.clone(), p.bound[perm[i]].clone())).collect();
            let image = |v: usize| if v < nf { v } else { nf + perm[v - nf] };
            let mut g = Graph::empty(n);
            for (a, b) in p.graph.edges() {
                g.add_edge(image(a), image(b));
            }
            let q = PatternTerm { psi: symmetric_normal(&p.psi.rename(&map)), graph: g, ..p.clone() };
            canonical_key(&q.to_expr())
        })
        .min()
        .expect("at least the identity")
}
