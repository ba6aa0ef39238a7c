use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::LangError;

/// Variable names are shared strings; cloning is a refcount bump.
pub type Var = Arc<str>;

pub fn var(name: &str) -> Var {
    Arc::from(name)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Formula,
    Term,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Formula => f.write_str("formula"),
            Sort::Term => f.write_str("term"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Eq(Var, Var),
    Atom(Arc<str>, Vec<Var>),
    /// `dist(x,y) <= r`, shorthand for the first-order distance formula.
    DistLe(Var, Var, u32),
    Bool(bool),
    Not(Expr),
    Or(Expr, Expr),
    Exists(Var, Expr),
    NumPred(Arc<str>, Vec<Expr>),
    Count(Vec<Var>, Expr),
    Int(i128),
    Add(Expr, Expr),
    Mul(Expr, Expr),
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct Node {
    kind: Kind,
    free: BTreeSet<Var>,
    size: usize,
    sort: Sort,
}

/// An immutable formula or counting term.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

fn expect_sort(e: &Expr, want: Sort) -> Result<(), LangError> {
    if e.sort() == want {
        Ok(())
    } else {
        Err(LangError::Sort { expected: want, found: e.sort() })
    }
}

impl Expr {
    /// Checked constructor: validates child sorts, distinct count variables and the
    /// one-free-variable rule for numerical predicates.
    pub fn new(kind: Kind) -> Result<Expr, LangError> {
        let (free, size, sort) = match &kind {
            Kind::Eq(a, b) => ([a.clone(), b.clone()].into_iter().collect(), 3, Sort::Formula),
            Kind::Atom(_, args) => {
                let size = if args.is_empty() { 3 } else { 2 * args.len() + 2 };
                (args.iter().cloned().collect(), size, Sort::Formula)
            }
            Kind::DistLe(a, b, _) => ([a.clone(), b.clone()].into_iter().collect(), 8, Sort::Formula),
            Kind::Bool(_) => (BTreeSet::new(), 1, Sort::Formula),
            Kind::Not(e) => {
                expect_sort(e, Sort::Formula)?;
                (e.free_vars().clone(), 1 + e.size(), Sort::Formula)
            }
            Kind::Or(a, b) => {
                expect_sort(a, Sort::Formula)?;
                expect_sort(b, Sort::Formula)?;
                let free = a.free_vars().union(b.free_vars()).cloned().collect();
                (free, 3 + a.size() + b.size(), Sort::Formula)
            }
            Kind::Exists(x, e) => {
                expect_sort(e, Sort::Formula)?;
                let mut free = e.free_vars().clone();
                free.remove(x);
                (free, 2 + e.size(), Sort::Formula)
            }
            Kind::NumPred(name, args) => {
                let mut free = BTreeSet::new();
                for a in args {
                    expect_sort(a, Sort::Term)?;
                    free.extend(a.free_vars().iter().cloned());
                }
                if free.len() > 1 {
                    return Err(LangError::NumPredFreeVars {
                        pred: name.to_string(),
                        vars: free.iter().map(|v| v.to_string()).collect(),
                    });
                }
                let size = 3 + args.iter().map(Expr::size).sum::<usize>() + args.len().saturating_sub(1);
                (free, size, Sort::Formula)
            }
            Kind::Count(zs, e) => {
                expect_sort(e, Sort::Formula)?;
                let mut seen = BTreeSet::new();
                for z in zs {
                    if !seen.insert(z.clone()) {
                        return Err(LangError::RepeatedBoundVar(z.to_string()));
                    }
                }
                let free = e.free_vars().difference(&seen).cloned().collect();
                let size = 4 + zs.len() + zs.len().saturating_sub(1) + e.size();
                (free, size, Sort::Term)
            }
            Kind::Int(_) => (BTreeSet::new(), 1, Sort::Term),
            Kind::Add(a, b) | Kind::Mul(a, b) => {
                expect_sort(a, Sort::Term)?;
                expect_sort(b, Sort::Term)?;
                let free = a.free_vars().union(b.free_vars()).cloned().collect();
                (free, 3 + a.size() + b.size(), Sort::Term)
            }
        };
        Ok(Expr(Arc::new(Node { kind, free, size, sort })))
    }

    fn build(kind: Kind) -> Expr {
        match Expr::new(kind) {
            Ok(e) => e,
            Err(err) => panic!("ill-formed expression: {err}"),
        }
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn sort(&self) -> Sort {
        self.0.sort
    }

    pub fn is_formula(&self) -> bool {
        self.0.sort == Sort::Formula
    }

    pub fn is_term(&self) -> bool {
        self.0.sort == Sort::Term
    }

    pub fn free_vars(&self) -> &BTreeSet<Var> {
        &self.0.free
    }

    pub fn size(&self) -> usize {
        self.0.size
    }

    /// Same node, not just equal structure.
    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    // Infallible constructors. They panic on sort errors, which are programming mistakes.

    pub fn eq(a: &str, b: &str) -> Expr {
        Expr::build(Kind::Eq(var(a), var(b)))
    }

    pub fn atom(rel: &str, args: &[&str]) -> Expr {
        Expr::build(Kind::Atom(Arc::from(rel), args.iter().map(|a| var(a)).collect()))
    }

    pub fn atom_vars(rel: &str, args: Vec<Var>) -> Expr {
        Expr::build(Kind::Atom(Arc::from(rel), args))
    }

    pub fn dist_le(a: &str, b: &str, r: u32) -> Expr {
        Expr::build(Kind::DistLe(var(a), var(b), r))
    }

    pub fn truth(b: bool) -> Expr {
        Expr::build(Kind::Bool(b))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::build(Kind::Not(e))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::build(Kind::Or(a, b))
    }

    /// `a & b`, stored as `!(!a | !b)`.
    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::not(Expr::or(Expr::not(a), Expr::not(b)))
    }

    pub fn exists(x: &str, e: Expr) -> Expr {
        Expr::build(Kind::Exists(var(x), e))
    }

    pub fn forall(x: &str, e: Expr) -> Expr {
        Expr::not(Expr::exists(x, Expr::not(e)))
    }

    pub fn count(zs: &[&str], e: Expr) -> Expr {
        Expr::build(Kind::Count(zs.iter().map(|z| var(z)).collect(), e))
    }

    pub fn count_vars(zs: Vec<Var>, e: Expr) -> Expr {
        Expr::build(Kind::Count(zs, e))
    }

    pub fn int(i: i128) -> Expr {
        Expr::build(Kind::Int(i))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::build(Kind::Add(a, b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::build(Kind::Mul(a, b))
    }

    /// `a - b`, stored as `a + (-1 * b)`.
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::mul(Expr::int(-1), b))
    }

    pub fn numpred(name: &str, args: Vec<Expr>) -> Result<Expr, LangError> {
        Expr::new(Kind::NumPred(Arc::from(name), args))
    }

    /// Conjunction of all items; `true` when empty.
    pub fn and_all(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().reduce(Expr::and).unwrap_or_else(|| Expr::truth(true))
    }

    /// Disjunction of all items; `false` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().reduce(Expr::or).unwrap_or_else(|| Expr::truth(false))
    }

    /// Sum of all items; `0` when empty.
    pub fn sum(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().reduce(Expr::add).unwrap_or_else(|| Expr::int(0))
    }

    /// Recognises `!(!a | !b)`.
    pub fn as_and(&self) -> Option<(&Expr, &Expr)> {
        if let Kind::Not(inner) = self.kind() {
            if let Kind::Or(l, r) = inner.kind() {
                if let (Kind::Not(a), Kind::Not(b)) = (l.kind(), r.kind()) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Recognises `!exists x. !a`.
    pub fn as_forall(&self) -> Option<(&Var, &Expr)> {
        if let Kind::Not(inner) = self.kind() {
            if let Kind::Exists(x, body) = inner.kind() {
                if let Kind::Not(a) = body.kind() {
                    return Some((x, a));
                }
            }
        }
        None
    }

    /// Recognises `a + (-1 * b)`.
    pub fn as_sub(&self) -> Option<(&Expr, &Expr)> {
        if let Kind::Add(a, rhs) = self.kind() {
            if let Kind::Mul(m, b) = rhs.kind() {
                if matches!(m.kind(), Kind::Int(-1)) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Flattened conjuncts, looking through nested `&`.
    pub fn conjuncts(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            match e.as_and() {
                Some((a, b)) => {
                    stack.push(b.clone());
                    stack.push(a.clone());
                }
                None => out.push(e),
            }
        }
        out
    }

    /// Direct sub-expressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self.kind() {
            Kind::Eq(..) | Kind::Atom(..) | Kind::DistLe(..) | Kind::Bool(_) | Kind::Int(_) => vec![],
            Kind::Not(e) | Kind::Exists(_, e) | Kind::Count(_, e) => vec![e],
            Kind::Or(a, b) | Kind::Add(a, b) | Kind::Mul(a, b) => vec![a, b],
            Kind::NumPred(_, args) => args.iter().collect(),
        }
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Number of nodes, counting each node once.
    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(Expr::node_count).sum::<usize>()
    }

    /// Relation symbols used, with their arities.
    pub fn relations(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.visit(&mut |e| {
            if let Kind::Atom(r, args) = e.kind() {
                out.insert(r.to_string(), args.len());
            }
        });
        out
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e.kind() {
            Kind::Eq(a, b) | Kind::DistLe(a, b, _) => {
                out.insert(a.clone());
                out.insert(b.clone());
            }
            Kind::Atom(_, args) => out.extend(args.iter().cloned()),
            Kind::Exists(x, _) => {
                out.insert(x.clone());
            }
            Kind::Count(zs, _) => out.extend(zs.iter().cloned()),
            _ => {}
        });
        out
    }

    /// Greatest nesting depth of counting terms.
    pub fn count_depth(&self) -> usize {
        let below = self.children().into_iter().map(Expr::count_depth).max().unwrap_or(0);
        below + usize::from(matches!(self.kind(), Kind::Count(..)))
    }

    /// Rebuild with children replaced, keeping the node kind.
    pub fn with_children(&self, mut kids: Vec<Expr>) -> Result<Expr, LangError> {
        let kind = match self.kind() {
            Kind::Eq(..) | Kind::Atom(..) | Kind::DistLe(..) | Kind::Bool(_) | Kind::Int(_) => {
                return Ok(self.clone())
            }
            Kind::Not(_) => Kind::Not(kids.remove(0)),
            Kind::Exists(x, _) => Kind::Exists(x.clone(), kids.remove(0)),
            Kind::Count(zs, _) => Kind::Count(zs.clone(), kids.remove(0)),
            Kind::Or(..) => {
                let b = kids.pop().expect("two children");
                Kind::Or(kids.pop().expect("two children"), b)
            }
            Kind::Add(..) => {
                let b = kids.pop().expect("two children");
                Kind::Add(kids.pop().expect("two children"), b)
            }
            Kind::Mul(..) => {
                let b = kids.pop().expect("two children");
                Kind::Mul(kids.pop().expect("two children"), b)
            }
            Kind::NumPred(p, _) => Kind::NumPred(p.clone(), kids),
        };
        Expr::new(kind)
    }

    /// Capture-avoiding substitution of free variables by variables.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Expr {
        if map.is_empty() || self.free_vars().iter().all(|v| !map.contains_key(v)) {
            return self.clone();
        }
        let sub = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self.kind() {
            Kind::Eq(a, b) => Expr::build(Kind::Eq(sub(a), sub(b))),
            Kind::DistLe(a, b, r) => Expr::build(Kind::DistLe(sub(a), sub(b), *r)),
            Kind::Atom(r, args) => Expr::build(Kind::Atom(r.clone(), args.iter().map(sub).collect())),
            Kind::Exists(x, body) => {
                let (binders, body) = rebind(std::slice::from_ref(x), body, map);
                Expr::build(Kind::Exists(binders[0].clone(), body))
            }
            Kind::Count(zs, body) => {
                let (binders, body) = rebind(zs, body, map);
                Expr::build(Kind::Count(binders, body))
            }
            _ => {
                let kids = self.children().into_iter().map(|c| c.rename(map)).collect();
                self.with_children(kids).expect("renaming preserves sorts")
            }
        }
    }
}

/// Renames a binder scope: bound names shadow the map, and binders that would
/// capture an incoming name are renamed apart.
fn rebind(binders: &[Var], body: &Expr, map: &BTreeMap<Var, Var>) -> (Vec<Var>, Expr) {
    let mut inner: BTreeMap<Var, Var> = map.iter().filter(|(k, _)| !binders.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
    let incoming: BTreeSet<Var> = body
        .free_vars()
        .iter()
        .filter_map(|v| inner.get(v).cloned())
        .collect();
    let mut taken: BTreeSet<Var> = body.all_vars();
    taken.extend(inner.values().cloned());
    let mut out = Vec::with_capacity(binders.len());
    for b in binders {
        if incoming.contains(b) {
            let fresh = fresh_var(b, &taken);
            taken.insert(fresh.clone());
            inner.insert(b.clone(), fresh.clone());
            out.push(fresh);
        } else {
            out.push(b.clone());
        }
    }
    (out, body.rename(&inner))
}

/// `base` with a numeric suffix that avoids `taken`.
pub fn fresh_var(base: &str, taken: &BTreeSet<Var>) -> Var {
    (0..)
        .map(|i| var(&format!("{base}_{i}")))
        .find(|v| !taken.contains(v))
        .expect("unbounded supply")
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
