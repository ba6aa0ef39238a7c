use std::collections::BTreeMap;

use crate::lang::{Expr, Kind, Var};
use crate::relstore::Signature;

/// How far from its free variables `e` looks, assuming every edge between inspected
/// elements is witnessed by a tuple of inspected elements. `None` when some quantifier
/// is not tied to the free variables by a positive conjunct.
fn inspect(e: &Expr) -> Option<u32> {
    match e.kind() {
        Kind::Eq(..) | Kind::Atom(..) | Kind::Bool(_) | Kind::Int(_) => Some(0),
        Kind::DistLe(_, _, r) => Some(r / 2),
        Kind::Not(a) => inspect(a),
        Kind::Or(a, b) | Kind::Add(a, b) | Kind::Mul(a, b) => Some(inspect(a)?.max(inspect(b)?)),
        Kind::NumPred(_, args) => args.iter().try_fold(0, |acc, a| Some(acc.max(inspect(a)?))),
        Kind::Exists(x, body) => quantified(e, std::slice::from_ref(x), body),
        Kind::Count(zs, body) => quantified(e, zs, body),
    }
}

/// Distance bound for each bound variable, relaxed along the guards of `body`.
fn quantified(whole: &Expr, zs: &[Var], body: &Expr) -> Option<u32> {
    let inner = inspect(body)?;
    if zs.is_empty() {
        return Some(inner);
    }
    let anchors = whole.free_vars();
    if anchors.is_empty() {
        return None;
    }
    let links = implied(body, true);
    let mut hop: BTreeMap<&Var, u32> = BTreeMap::new();
    for _ in 0..zs.len() {
        for ((a, b), cost) in &links {
            if !zs.contains(b) || (zs.contains(a) && !hop.contains_key(a)) {
                continue;
            }
            let base = if zs.contains(a) {
                hop[a]
            } else if anchors.contains(a) {
                0
            } else {
                continue;
            };
            let cand = base + cost;
            let slot = hop.entry(b).or_insert(u32::MAX);
            *slot = (*slot).min(cand);
        }
    }
    let mut worst = 0;
    for z in zs {
        worst = worst.max(*hop.get(z)?);
    }
    Some(worst + inner)
}

fn uses_distance(e: &Expr) -> bool {
    let mut found = false;
    e.visit(&mut |n| found |= matches!(n.kind(), Kind::DistLe(..)));
    found
}

/// Radius `r` such that `e` is r-local around its free variables, read off the syntax.
/// Distance checks over relations of arity three or more need one extra layer so that
/// every witnessing tuple lies inside the neighbourhood.
pub fn syntactic_locality_radius(e: &Expr, max_arity: usize) -> Option<u32> {
    let r = inspect(e)?;
    Some(if max_arity >= 3 && uses_distance(e) { r + 1 } else { r })
}

/// [`syntactic_locality_radius`] for the arities of `sig`.
pub fn locality_radius(e: &Expr, sig: &Signature) -> Option<u32> {
    let max_arity = sig.symbols().iter().map(|s| s.arity).max().unwrap_or(0);
    syntactic_locality_radius(e, max_arity)
}

/// Nesting depth of quantifiers, counting each variable of a counting term.
pub fn quantifier_depth(e: &Expr) -> usize {
    let below = e.children().into_iter().map(quantifier_depth).max().unwrap_or(0);
    below
        + match e.kind() {
            Kind::Exists(..) => 1,
            Kind::Count(zs, _) => zs.len(),
            _ => 0,
        }
}

/// Pairs `(a, b) -> cost` such that `e` (or its negation, when `positive` is false)
/// implies `b` lies within `cost` of `a`.
fn implied(e: &Expr, positive: bool) -> BTreeMap<(Var, Var), u32> {
    let mut out: BTreeMap<(Var, Var), u32> = BTreeMap::new();
    let mut add = |a: &Var, b: &Var, cost: u32| {
        for key in [(a.clone(), b.clone()), (b.clone(), a.clone())] {
            let slot = out.entry(key).or_insert(cost);
            *slot = (*slot).min(cost);
        }
    };
    match (e.kind(), positive) {
        (Kind::Not(inner), _) => return implied(inner, !positive),
        (Kind::Eq(a, b), true) => add(a, b, 0),
        (Kind::DistLe(a, b, r), true) => add(a, b, *r),
        (Kind::Atom(_, args), true) => {
            for a in args {
                for b in args {
                    if a != b {
                        add(a, b, 1);
                    }
                }
            }
        }
        // a true disjunction: whatever both sides imply
        (Kind::Or(l, r), true) => {
            let right = implied(r, true);
            for (key, c1) in implied(l, true) {
                if let Some(c2) = right.get(&key) {
                    out.insert(key, c1.max(*c2));
                }
            }
        }
        // a false disjunction: both sides are false
        (Kind::Or(l, r), false) => {
            for ((a, b), cost) in implied(l, false).into_iter().chain(implied(r, false)) {
                add(&a, &b, cost);
            }
        }
        _ => {}
    }
    out
}
