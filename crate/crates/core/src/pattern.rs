//! Counting terms of the form `#z.(psi & delta_{H,rho})`.

use std::collections::BTreeSet;

use crate::graph::Graph;
use crate::lang::{Expr, Kind, Var};
use crate::locality::delta_formula;

/// `#bound.(psi & delta_{graph, rho}(free ++ bound))`. Vertex `i` of `graph`
/// is the `i`-th variable of `free ++ bound`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PatternTerm {
    pub free: Vec<Var>,
    pub bound: Vec<Var>,
    pub psi: Expr,
    pub graph: Graph,
    pub rho: u32,
}

impl PatternTerm {
    pub fn vars(&self) -> Vec<Var> {
        self.free.iter().chain(&self.bound).cloned().collect()
    }

    pub fn is_ground(&self) -> bool {
        self.free.is_empty()
    }

    pub fn body(&self) -> Expr {
        let delta = delta_formula(&self.graph, &self.vars(), self.rho);
        if matches!(delta.kind(), Kind::Bool(true)) {
            self.psi.clone()
        } else if matches!(self.psi.kind(), Kind::Bool(true)) {
            delta
        } else {
            Expr::and(self.psi.clone(), delta)
        }
    }

    pub fn to_expr(&self) -> Expr {
        Expr::count_vars(self.bound.clone(), self.body())
    }

    /// Reads a counting term built by [`PatternTerm::to_expr`] back into pattern form:
    /// the body is `psi & delta` (or just `delta`, or just `psi` for one variable), where
    /// `delta` has one distance literal at radius `rho` per pair of the term's variables.
    /// Free variables are ordered by name.
    pub fn recognise(e: &Expr, rho: u32) -> Option<PatternTerm> {
        let Kind::Count(zs, body) = e.kind() else {
            return None;
        };
        let free: Vec<Var> = e.free_vars().iter().cloned().collect();
        let vars: Vec<Var> = free.iter().chain(zs).cloned().collect();
        let with = |psi: Expr, graph: Graph| PatternTerm { free: free.clone(), bound: zs.clone(), psi, graph, rho };
        if vars.len() <= 1 {
            return Some(with(body.clone(), Graph::empty(vars.len())));
        }
        if let Some((psi, delta)) = body.as_and() {
            if let Some(g) = read_delta(delta, &vars, rho) {
                return Some(with(psi.clone(), g));
            }
        }
        read_delta(body, &vars, rho).map(|g| with(Expr::truth(true), g))
    }
}

fn read_delta(delta: &Expr, vars: &[Var], rho: u32) -> Option<Graph> {
    let pos = |v: &Var| vars.iter().position(|w| w == v);
    let n = vars.len();
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut graph = Graph::empty(n);
    for c in delta.conjuncts() {
        let (a, b, joined) = match c.kind() {
            Kind::DistLe(a, b, r) if *r == rho => (a, b, true),
            Kind::Not(inner) => match inner.kind() {
                Kind::DistLe(a, b, r) if *r == rho => (a, b, false),
                _ => return None,
            },
            _ => return None,
        };
        let (i, j) = (pos(a)?, pos(b)?);
        let key = (i.min(j), i.max(j));
        if i == j || !seen.insert(key) {
            return None;
        }
        if joined {
            graph.add_edge(key.0, key.1);
        }
    }
    (seen.len() == n * (n - 1) / 2).then_some(graph)
}

/// Every counting subterm of `e` that is not nested inside another one.
pub fn outer_counts(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    fn walk(e: &Expr, out: &mut Vec<Expr>) {
        if matches!(e.kind(), Kind::Count(..)) {
            out.push(e.clone());
        } else {
            for c in e.children() {
                walk(c, out);
            }
        }
    }
    walk(e, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, var};

    #[test]
    fn round_trip_through_recognise() {
        let p = PatternTerm {
            free: vec![var("x"), var("y")],
            bound: vec![var("z")],
            psi: Expr::and(Expr::atom("E", &["x", "z"]), Expr::atom("Blue", &["y"])),
            graph: Graph::from_edges(3, &[(0, 2), (1, 2)]),
            rho: 1,
        };
        let e = p.to_expr();
        assert_eq!(PatternTerm::recognise(&e, 1), Some(p.clone()));
        assert_eq!(PatternTerm::recognise(&e, 3), None);
        let reparsed = parse(&e.to_string()).unwrap();
        assert_eq!(PatternTerm::recognise(&reparsed, 1), Some(p));
    }

    #[test]
    fn single_vertex_patterns_have_no_distance_part() {
        let e = parse("#(z).Blue(z)").unwrap();
        let p = PatternTerm::recognise(&e, 1).unwrap();
        assert!(p.is_ground());
        assert_eq!(p.graph.len(), 1);
        assert_eq!(p.to_expr(), e);
    }

    #[test]
    fn missing_pairs_are_rejected() {
        let e = parse("#(z1,z2).(E(x,z1) & dist(x,z1) <= 1)").unwrap();
        assert_eq!(PatternTerm::recognise(&e, 1), None);
    }

    #[test]
    fn outer_counts_skip_nested() {
        let e = parse("(2 * #(z).E(x,z)) + #(z).Peq(#(u).E(z,u), 1)").unwrap();
        assert_eq!(outer_counts(&e).len(), 2);
    }
}
