//! Distance and component-pattern formulas, locality radii, and the localiser.

mod canon;
mod localise;
mod radius;


use std::collections::BTreeSet;

pub use canon::{canonical_type, TypeKey};
pub use localise::{certify_local, localise, LocalisationOutput, LocalisationReport, Localiser, PredicateReport};
pub use radius::{locality_radius, quantifier_depth, syntactic_locality_radius};

use crate::graph::Graph;
use crate::lang::{fresh_var, var, Expr, Kind, LangError, Var};
use crate::relstore::{Elem, RelError, Signature, Structure};
use crate::semantics::EvalError;

#[derive(Debug, thiserror::Error)]
pub enum LocalityError {
    #[error("unsupported for neighbourhood-type localisation: {reason}; declare the template with mode already_local instead")]
    Unsupported { reason: String },
    #[error("locality check failed at radius {radius}: {expr} differs locally and globally at {assignment}")]
    CertificationFailed { radius: u32, expr: String, assignment: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Rel(#[from] RelError),
}

/// Upper bound on the size of an r-ball around one vertex in a graph of degree at most d.
pub fn nu(d: u64, r: u64) -> u128 {
    let d = d as u128;
    let mut sum: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..r {
        sum = sum.saturating_add(pow);
        pow = pow.saturating_mul(d.saturating_sub(1));
    }
    1u128.saturating_add(d.saturating_mul(sum))
}

/// First-order formula stating that `x` and `y` are adjacent in the Gaifman graph.
fn adjacent_formula(sig: &Signature, x: &Var, y: &Var, taken: &mut BTreeSet<Var>) -> Expr {
    let mut options = Vec::new();
    for sym in sig.symbols() {
        for i in 0..sym.arity {
            for j in 0..sym.arity {
                if i == j {
                    continue;
                }
                let mut args = Vec::with_capacity(sym.arity);
                let mut fillers = Vec::new();
                for p in 0..sym.arity {
                    if p == i {
                        args.push(x.clone());
                    } else if p == j {
                        args.push(y.clone());
                    } else {
                        let w = fresh_var("w", taken);
                        taken.insert(w.clone());
                        fillers.push(w.clone());
                        args.push(w);
                    }
                }
                let mut f = Expr::atom_vars(&sym.name, args);
                for w in fillers.iter().rev() {
                    f = Expr::new(Kind::Exists(w.clone(), f)).expect("formula body");
                }
                options.push(f);
            }
        }
    }
    let differ = Expr::not(Expr::new(Kind::Eq(x.clone(), y.clone())).expect("equality"));
    Expr::and(differ, Expr::or_all(options))
}

/// Pure first-order formula with free variables `x`, `y` that holds iff their Gaifman
/// distance is at most `r`.
pub fn dist_formula(sig: &Signature, r: u32, x: &str, y: &str) -> Expr {
    let mut taken: BTreeSet<Var> = [var(x), var(y)].into_iter().collect();
    dist_rec(sig, r, &var(x), &var(y), &mut taken)
}

fn dist_rec(sig: &Signature, r: u32, x: &Var, y: &Var, taken: &mut BTreeSet<Var>) -> Expr {
    let same = Expr::new(Kind::Eq(x.clone(), y.clone())).expect("equality");
    if r == 0 {
        return same;
    }
    if r == 1 {
        return Expr::or(same, adjacent_formula(sig, x, y, taken));
    }
    let z = fresh_var("u", taken);
    taken.insert(z.clone());
    let step = adjacent_formula(sig, x, &z, taken);
    let rest = dist_rec(sig, r - 1, &z, y, taken);
    let hop = Expr::new(Kind::Exists(z.clone(), Expr::and(step, rest))).expect("formula body");
    Expr::or(same, hop)
}

/// Replaces every `dist(x,y) <= r` shorthand by its first-order expansion.
pub fn expand_dist(e: &Expr, sig: &Signature) -> Expr {
    match e.kind() {
        Kind::DistLe(a, b, r) => dist_formula(sig, *r, a, b),
        _ => {
            let kids: Vec<Expr> = e.children().into_iter().map(|c| expand_dist(c, sig)).collect();
            if kids.is_empty() {
                e.clone()
            } else {
                e.with_children(kids).expect("expansion preserves sorts")
            }
        }
    }
}

/// `δ_{G,radius}(vars)`: pairs joined in `g` are within `radius`, all others are farther apart.
pub fn delta_formula(g: &Graph, vars: &[Var], radius: u32) -> Expr {
    assert_eq!(g.len(), vars.len(), "one variable per pattern vertex");
    let mut parts = Vec::new();
    for j in 0..vars.len() {
        for i in 0..j {
            let d = Expr::new(Kind::DistLe(vars[i].clone(), vars[j].clone(), radius)).expect("distance atom");
            parts.push(if g.has_edge(i, j) { d } else { Expr::not(d) });
        }
    }
    Expr::and_all(parts)
}

/// The pattern realised by a tuple: `i` and `j` are joined iff their distance is at most `radius`.
pub fn realised_pattern(s: &Structure, tuple: &[Elem], radius: u32) -> Graph {
    let g = s.gaifman();
    let mut out = Graph::empty(tuple.len());
    for j in 0..tuple.len() {
        for i in 0..j {
            if g.bounded_distance(&[tuple[i]], tuple[j], radius) <= radius {
                out.add_edge(i, j);
            }
        }
    }
    out
}
