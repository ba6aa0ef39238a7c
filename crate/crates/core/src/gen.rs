//! Random well-formed expressions for differential testing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{var, Expr, Kind, Registry, Var};
use crate::relstore::Signature;

/// Generator over a fixed signature and variable pool.
pub struct ExprGen {
    symbols: Vec<(String, usize)>,
    predicates: Vec<(String, usize)>,
    pub vars: Vec<Var>,
    /// Upper bound on AST nodes.
    pub max_nodes: usize,
    pub max_count_depth: usize,
    /// Integer literals are drawn from `-int_range..=int_range`.
    pub int_range: i128,
    pub allow_dist: bool,
}

impl ExprGen {
    pub fn new(sig: &Signature, registry: &Registry) -> Self {
        let predicates = registry
            .names()
            .filter_map(|n| registry.get(n).map(|p| (n.to_string(), p.arity)))
            .collect();
        ExprGen {
            symbols: sig.symbols().iter().map(|s| (s.name.clone(), s.arity)).collect(),
            predicates,
            vars: ["x", "y", "z"].iter().map(|v| var(v)).collect(),
            max_nodes: 8,
            max_count_depth: 2,
            int_range: 3,
            allow_dist: true,
        }
    }

    pub fn formula<R: Rng>(&self, rng: &mut R) -> Expr {
        let budget = rng.gen_range(1..=self.max_nodes);
        self.gen_formula(rng, budget, self.max_count_depth)
    }

    pub fn term<R: Rng>(&self, rng: &mut R) -> Expr {
        let budget = rng.gen_range(1..=self.max_nodes);
        self.gen_term(rng, budget, self.max_count_depth)
    }

    pub fn expr<R: Rng>(&self, rng: &mut R) -> Expr {
        if rng.gen_bool(0.5) {
            self.formula(rng)
        } else {
            self.term(rng)
        }
    }

    fn pick_var<R: Rng>(&self, rng: &mut R) -> Var {
        self.vars.choose(rng).expect("variable pool is non-empty").clone()
    }

    fn leaf_formula<R: Rng>(&self, rng: &mut R) -> Expr {
        let roll = rng.gen_range(0..10);
        if roll < 5 && !self.symbols.is_empty() {
            let (name, arity) = self.symbols.choose(rng).expect("non-empty").clone();
            let args = (0..arity).map(|_| self.pick_var(rng)).collect();
            return Expr::atom_vars(&name, args);
        }
        match roll {
            5..=7 => Expr::new(Kind::Eq(self.pick_var(rng), self.pick_var(rng))).expect("well-formed"),
            8 if self.allow_dist => {
                Expr::new(Kind::DistLe(self.pick_var(rng), self.pick_var(rng), rng.gen_range(0..3)))
                    .expect("well-formed")
            }
            _ => Expr::truth(rng.gen_bool(0.5)),
        }
    }

    fn gen_formula<R: Rng>(&self, rng: &mut R, budget: usize, depth: usize) -> Expr {
        if budget <= 1 {
            return self.leaf_formula(rng);
        }
        match rng.gen_range(0..6) {
            0 => self.leaf_formula(rng),
            1 => Expr::not(self.gen_formula(rng, budget - 1, depth)),
            2 if budget >= 3 => {
                let left = rng.gen_range(1..budget - 1);
                Expr::or(self.gen_formula(rng, left, depth), self.gen_formula(rng, budget - 1 - left, depth))
            }
            3 => {
                let x = self.pick_var(rng);
                Expr::new(Kind::Exists(x, self.gen_formula(rng, budget - 1, depth))).expect("well-formed")
            }
            4 if budget >= 6 => {
                let left = rng.gen_range(1..budget - 4);
                Expr::and(self.gen_formula(rng, left, depth), self.gen_formula(rng, budget - 4 - left, depth))
            }
            5 if depth > 0 => self.gen_numpred(rng, budget, depth),
            _ => self.gen_formula(rng, budget - 1, depth),
        }
    }

    fn gen_numpred<R: Rng>(&self, rng: &mut R, budget: usize, depth: usize) -> Expr {
        let fitting: Vec<_> = self.predicates.iter().filter(|(_, a)| *a >= 1 && *a < budget).collect();
        let Some((name, arity)) = fitting.choose(rng).map(|p| (p.0.clone(), p.1)) else {
            return self.leaf_formula(rng);
        };
        let mut left = budget - 1;
        let mut args = Vec::with_capacity(arity);
        for i in 0..arity {
            let share = if i + 1 == arity { left } else { rng.gen_range(1..=left - (arity - 1 - i)) };
            left -= share;
            args.push(self.gen_term(rng, share, depth));
        }
        // collapse all free variables onto one so the predicate stays well-formed
        let free: Vec<Var> = args.iter().flat_map(|a| a.free_vars().iter().cloned()).collect();
        if let Some(first) = free.first() {
            let map: BTreeMap<Var, Var> = free.iter().map(|v| (v.clone(), first.clone())).collect();
            args = args.iter().map(|a| a.rename(&map)).collect();
        }
        Expr::numpred(&name, args).expect("free variables were collapsed")
    }

    fn gen_term<R: Rng>(&self, rng: &mut R, budget: usize, depth: usize) -> Expr {
        let int = |rng: &mut R| Expr::int(rng.gen_range(-self.int_range..=self.int_range));
        if budget <= 1 {
            return int(rng);
        }
        match rng.gen_range(0..5) {
            0 => int(rng),
            1 | 2 if depth > 0 => {
                let k = rng.gen_range(0..=2.min(self.vars.len()));
                let mut pool = self.vars.clone();
                pool.shuffle(rng);
                pool.truncate(k);
                Expr::count_vars(pool, self.gen_formula(rng, budget - 1, depth - 1))
            }
            3 | 4 if budget >= 3 => {
                let left = rng.gen_range(1..budget - 1);
                let a = self.gen_term(rng, left, depth);
                let b = self.gen_term(rng, budget - 1 - left, depth);
                if rng.gen_bool(0.5) {
                    Expr::add(a, b)
                } else {
                    Expr::mul(a, b)
                }
            }
            _ => int(rng),
        }
    }
}

/// `c0 + c1 * #z.phi1 + ...` with up to `summands` counting terms. Each `phi` is a
/// Boolean combination of literals over `free` and the bound variables, possibly with
/// one guarded block `exists u. (E(v,u) & Blue(u))`. Bodies are local with radius at
/// most 1. Needs `E/2` and `Blue/1` in `sig`.
pub fn local_count_term<R: Rng>(rng: &mut R, sig: &Signature, free: &[Var], max_bound: usize, summands: usize) -> Expr {
    let mut t = Expr::int(rng.gen_range(-2..=2));
    for _ in 0..rng.gen_range(1..=summands.max(1)) {
        let m = rng.gen_range(1..=max_bound.max(1));
        let zs: Vec<Var> = (1..=m).map(|i| var(&format!("z{i}"))).collect();
        let mut pool: Vec<Var> = free.to_vec();
        pool.extend(zs.iter().cloned());
        let leaves = rng.gen_range(1..=4);
        let mut body = local_leaf(rng, sig, &pool);
        for _ in 1..leaves {
            let leaf = local_leaf(rng, sig, &pool);
            let leaf = if rng.gen_bool(0.3) { Expr::not(leaf) } else { leaf };
            body = if rng.gen_bool(0.6) { Expr::and(body, leaf) } else { Expr::or(body, leaf) };
        }
        let c = rng.gen_range(1..=2) * if rng.gen_bool(0.3) { -1 } else { 1 };
        t = Expr::add(t, Expr::mul(Expr::int(c), Expr::count_vars(zs, body)));
    }
    t
}

fn local_leaf<R: Rng>(rng: &mut R, sig: &Signature, pool: &[Var]) -> Expr {
    let pick = |rng: &mut R| pool.choose(rng).expect("non-empty pool").clone();
    match rng.gen_range(0..10) {
        0..=4 => {
            let sym = sig.symbols().choose(rng).expect("non-empty signature");
            Expr::atom_vars(&sym.name, (0..sym.arity).map(|_| pick(rng)).collect())
        }
        5 | 6 => Expr::new(Kind::Eq(pick(rng), pick(rng))).expect("well-formed"),
        7 => Expr::new(Kind::DistLe(pick(rng), pick(rng), rng.gen_range(1..=2))).expect("well-formed"),
        _ => {
            let v = pick(rng);
            let u = var("u");
            let guard = Expr::atom_vars("E", vec![v, u.clone()]);
            Expr::new(Kind::Exists(u.clone(), Expr::and(guard, Expr::atom_vars("Blue", vec![u])))).expect("well-formed")
        }
    }
}
