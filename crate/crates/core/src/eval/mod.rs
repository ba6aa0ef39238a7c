//! Indexed evaluation of formulas and counting terms.

use std::cell::RefCell;
use std::rc::Rc;

use rustc_hash::FxHashMap;

use crate::lang::{Expr, Kind, Registry, Var};
use crate::relstore::{AccessAudit, Elem, LocalOracle, RelId, Structure};
use crate::semantics::{Assignment, EvalError, Value};


type Slot = usize;

/// Where the values of a quantified variable may come from.
#[derive(Debug, Clone)]
enum Source {
    Universe,
    /// Exactly the value of another slot.
    Same(Slot),
    /// Entries at `target` of tuples that have the value of `known` at `at`.
    Index { rel: RelId, at: usize, known: Slot, target: usize },
    /// Entries at `target` of any tuple.
    Column { rel: RelId, target: usize },
    Ball { center: Slot, radius: u32 },
}

#[derive(Debug)]
enum F {
    Const(bool),
    Eq(Slot, Slot),
    Atom(RelId, Vec<Slot>),
    DistLe(Slot, Slot, u32),
    Not(Box<F>),
    Or(Vec<F>),
    And(Vec<F>),
    Exists { slot: Slot, source: Source, body: Box<F> },
    Pred { name: Rc<str>, args: Vec<T> },
}

#[derive(Debug)]
enum T {
    Int(i128),
    Add(Box<T>, Box<T>),
    Mul(Box<T>, Box<T>),
    Count { slots: Vec<Slot>, sources: Vec<Source>, body: Box<F> },
    /// A closed subterm, computed once per compiled expression.
    Ground { inner: Box<T>, cache: RefCell<Option<i128>> },
}

#[derive(Debug)]
enum Root {
    F(F),
    T(T),
}

/// An expression bound to a structure's signature, with variables mapped to slots.
/// The first slots hold the variables passed to [`Evaluator::compile`] in order.
#[derive(Debug)]
pub struct Compiled {
    root: Root,
    slots: usize,
    inputs: usize,
}

impl Compiled {
    pub fn is_formula(&self) -> bool {
        matches!(self.root, Root::F(_))
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }
}

struct Scope {
    names: Vec<Var>,
    bound: Vec<bool>,
}

impl Scope {
    fn lookup(&self, v: &Var) -> Result<Slot, EvalError> {
        self.names
            .iter()
            .rposition(|n| n == v)
            .ok_or_else(|| EvalError::Unassigned(v.to_string()))
    }

    fn push(&mut self, v: &Var) -> Slot {
        self.names.push(v.clone());
        self.bound.push(false);
        self.names.len() - 1
    }
}

/// Evaluates expressions on one structure. Not shareable across threads; create one per worker.
pub struct Evaluator<'s> {
    structure: &'s Structure,
    registry: &'s Registry,
    audit: Option<&'s AccessAudit>,
    memo: RefCell<FxHashMap<(Rc<str>, Vec<i128>), bool>>,
    balls: RefCell<FxHashMap<(Elem, u32), Rc<Vec<Elem>>>>,
}

impl<'s> Evaluator<'s> {
    pub fn new(structure: &'s Structure, registry: &'s Registry) -> Self {
        Evaluator {
            structure,
            registry,
            audit: None,
            memo: RefCell::new(FxHashMap::default()),
            balls: RefCell::new(FxHashMap::default()),
        }
    }

    /// Counts every iteration over the whole universe as a global scan.
    pub fn with_audit(mut self, audit: &'s AccessAudit) -> Self {
        self.audit = Some(audit);
        self
    }

    pub fn structure(&self) -> &'s Structure {
        self.structure
    }

    pub fn compile(&self, e: &Expr, inputs: &[Var]) -> Result<Compiled, EvalError> {
        let mut scope = Scope { names: inputs.to_vec(), bound: vec![true; inputs.len()] };
        let mut slots = inputs.len();
        let root = if e.is_formula() {
            Root::F(self.compile_f(e, &mut scope, &mut slots)?)
        } else {
            Root::T(self.compile_t(e, &mut scope, &mut slots)?)
        };
        Ok(Compiled { root, slots, inputs: inputs.len() })
    }

    fn relation(&self, name: &str, arity: usize) -> Result<RelId, EvalError> {
        let id = self
            .structure
            .signature()
            .lookup(name)
            .ok_or_else(|| EvalError::UnknownRelation(name.to_string()))?;
        let expected = self.structure.relation(id).arity();
        if expected != arity {
            return Err(EvalError::RelationArity { rel: name.to_string(), expected, found: arity });
        }
        Ok(id)
    }

    fn compile_f(&self, e: &Expr, scope: &mut Scope, slots: &mut usize) -> Result<F, EvalError> {
        if e.as_and().is_some() {
            let mut parts = e
                .conjuncts()
                .iter()
                .map(|c| self.compile_f(c, scope, slots))
                .collect::<Result<Vec<_>, _>>()?;
            // cheap tests first
            parts.sort_by_key(|f| match f {
                F::Const(_) | F::Eq(..) => 0,
                F::Atom(..) => 1,
                F::DistLe(..) => 2,
                F::Not(inner) if matches!(**inner, F::Eq(..) | F::Atom(..)) => 1,
                _ => 3,
            });
            return Ok(F::And(parts));
        }
        Ok(match e.kind() {
            Kind::Bool(b) => F::Const(*b),
            Kind::Eq(a, b) => F::Eq(scope.lookup(a)?, scope.lookup(b)?),
            Kind::Atom(r, args) => {
                let id = self.relation(r, args.len())?;
                F::Atom(id, args.iter().map(|v| scope.lookup(v)).collect::<Result<_, _>>()?)
            }
            Kind::DistLe(a, b, r) => F::DistLe(scope.lookup(a)?, scope.lookup(b)?, *r),
            Kind::Not(a) => F::Not(Box::new(self.compile_f(a, scope, slots)?)),
            Kind::Or(a, b) => {
                let mut parts = Vec::new();
                for side in [a, b] {
                    match self.compile_f(side, scope, slots)? {
                        F::Or(inner) => parts.extend(inner),
                        f => parts.push(f),
                    }
                }
                F::Or(parts)
            }
            Kind::Exists(x, body) => {
                let slot = scope.push(x);
                *slots = (*slots).max(slot + 1);
                let source = self.source_for(x, body, scope)?;
                scope.bound[slot] = true;
                let body = self.compile_f(body, scope, slots)?;
                scope.names.pop();
                scope.bound.pop();
                F::Exists { slot, source, body: Box::new(body) }
            }
            Kind::NumPred(p, args) => F::Pred {
                name: Rc::from(p.as_ref()),
                args: args.iter().map(|a| self.compile_t(a, scope, slots)).collect::<Result<_, _>>()?,
            },
            _ => unreachable!("terms are never formulas"),
        })
    }

    fn compile_t(&self, e: &Expr, scope: &mut Scope, slots: &mut usize) -> Result<T, EvalError> {
        let closed = e.free_vars().is_empty() && !matches!(e.kind(), Kind::Int(_));
        let t = match e.kind() {
            Kind::Int(i) => T::Int(*i),
            Kind::Add(a, b) => T::Add(Box::new(self.compile_t(a, scope, slots)?), Box::new(self.compile_t(b, scope, slots)?)),
            Kind::Mul(a, b) => T::Mul(Box::new(self.compile_t(a, scope, slots)?), Box::new(self.compile_t(b, scope, slots)?)),
            Kind::Count(zs, body) => {
                let mut ids = Vec::with_capacity(zs.len());
                let mut sources = Vec::with_capacity(zs.len());
                for z in zs {
                    let slot = scope.push(z);
                    *slots = (*slots).max(slot + 1);
                    ids.push(slot);
                }
                for (i, z) in zs.iter().enumerate() {
                    sources.push(self.source_for(z, body, scope)?);
                    scope.bound[ids[i]] = true;
                }
                let body = self.compile_f(body, scope, slots)?;
                for _ in zs {
                    scope.names.pop();
                    scope.bound.pop();
                }
                T::Count { slots: ids, sources, body: Box::new(body) }
            }
            _ => unreachable!("formulas are never terms"),
        };
        Ok(if closed { T::Ground { inner: Box::new(t), cache: RefCell::new(None) } } else { t })
    }

    /// Picks the narrowest candidate set for `x` from the positive conjuncts of `body`
    /// that mention `x` and an already bound variable.
    fn source_for(&self, x: &Var, body: &Expr, scope: &Scope) -> Result<Source, EvalError> {
        let ready = |v: &Var| -> Option<Slot> {
            let slot = scope.lookup(v).ok()?;
            (scope.bound[slot] && v != x).then_some(slot)
        };
        let mut best = Source::Universe;
        let mut rank = 9;
        for c in body.conjuncts() {
            match c.kind() {
                Kind::Eq(a, b) => {
                    let other = if a == x { b } else if b == x { a } else { continue };
                    if let Some(slot) = ready(other) {
                        return Ok(Source::Same(slot));
                    }
                }
                Kind::Atom(r, args) => {
                    let Some(target) = args.iter().position(|v| v == x) else { continue };
                    let id = self.relation(r, args.len())?;
                    if let Some((at, known)) = args.iter().enumerate().find_map(|(i, v)| ready(v).map(|s| (i, s))) {
                        if rank > 1 {
                            best = Source::Index { rel: id, at, known, target };
                            rank = 1;
                        }
                    } else if rank > 3 {
                        best = Source::Column { rel: id, target };
                        rank = 3;
                    }
                }
                Kind::DistLe(a, b, r) => {
                    let other = if a == x { b } else if b == x { a } else { continue };
                    if let Some(slot) = ready(other) {
                        if rank > 2 {
                            best = Source::Ball { center: slot, radius: *r };
                            rank = 2;
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(best)
    }

    fn ball(&self, center: Elem, radius: u32) -> Rc<Vec<Elem>> {
        if let Some(b) = self.balls.borrow().get(&(center, radius)) {
            return b.clone();
        }
        let mut b: Vec<Elem> = self.structure.gaifman().distances_within(&[center], radius).into_keys().collect();
        b.sort_unstable();
        let b = Rc::new(b);
        self.balls.borrow_mut().insert((center, radius), b.clone());
        b
    }

    fn candidates(&self, source: &Source, env: &[Elem]) -> Vec<Elem> {
        match *source {
            Source::Universe => {
                if let Some(a) = self.audit {
                    a.record_global_scan();
                }
                self.structure.universe().collect()
            }
            Source::Same(slot) => vec![env[slot]],
            Source::Index { rel, at, known, target } => {
                let mut v: Vec<Elem> =
                    self.structure.relation(rel).with_entry_at(at, env[known]).map(|t| t[target]).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            Source::Column { rel, target } => self.structure.relation(rel).column(target),
            Source::Ball { center, radius } => self.ball(env[center], radius).as_ref().clone(),
        }
    }

    fn eval_f(&self, f: &F, env: &mut [Elem]) -> Result<bool, EvalError> {
        Ok(match f {
            F::Const(b) => *b,
            F::Eq(a, b) => env[*a] == env[*b],
            F::Atom(rel, args) => {
                let mut buf = [0 as Elem; 8];
                let rel = self.structure.relation(*rel);
                if args.len() <= buf.len() {
                    for (i, &s) in args.iter().enumerate() {
                        buf[i] = env[s];
                    }
                    rel.contains(&buf[..args.len()])
                } else {
                    rel.contains(&args.iter().map(|&s| env[s]).collect::<Vec<_>>())
                }
            }
            F::DistLe(a, b, r) => {
                let (a, b) = (env[*a], env[*b]);
                a == b || (*r > 0 && self.ball(a, *r).binary_search(&b).is_ok())
            }
            F::Not(a) => !self.eval_f(a, env)?,
            F::Or(parts) => {
                for p in parts {
                    if self.eval_f(p, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            F::And(parts) => {
                for p in parts {
                    if !self.eval_f(p, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            F::Exists { slot, source, body } => {
                for v in self.candidates(source, env) {
                    env[*slot] = v;
                    if self.eval_f(body, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            F::Pred { name, args } => {
                let vals = args.iter().map(|a| self.eval_t(a, env)).collect::<Result<Vec<_>, _>>()?;
                let key = (name.clone(), vals);
                if let Some(&hit) = self.memo.borrow().get(&key) {
                    return Ok(hit);
                }
                let out = self.registry.decide(name, &key.1)?;
                self.memo.borrow_mut().insert(key, out);
                out
            }
        })
    }

    fn count(&self, slots: &[Slot], sources: &[Source], body: &F, env: &mut [Elem]) -> Result<i128, EvalError> {
        let Some((&slot, rest)) = slots.split_first() else {
            return Ok(i128::from(self.eval_f(body, env)?));
        };
        let mut total: i128 = 0;
        for v in self.candidates(&sources[0], env) {
            env[slot] = v;
            total += self.count(rest, &sources[1..], body, env)?;
        }
        Ok(total)
    }

    fn eval_t(&self, t: &T, env: &mut [Elem]) -> Result<i128, EvalError> {
        match t {
            T::Int(i) => Ok(*i),
            T::Add(a, b) => self.eval_t(a, env)?.checked_add(self.eval_t(b, env)?).ok_or(EvalError::Overflow),
            T::Mul(a, b) => self.eval_t(a, env)?.checked_mul(self.eval_t(b, env)?).ok_or(EvalError::Overflow),
            T::Count { slots, sources, body } => self.count(slots, sources, body, env),
            T::Ground { inner, cache } => {
                if let Some(v) = *cache.borrow() {
                    return Ok(v);
                }
                let v = self.eval_t(inner, env)?;
                *cache.borrow_mut() = Some(v);
                Ok(v)
            }
        }
    }

    fn env(&self, c: &Compiled, args: &[Elem]) -> Result<Vec<Elem>, EvalError> {
        assert_eq!(args.len(), c.inputs, "one value per compiled input");
        for &a in args {
            self.structure.check(a)?;
        }
        let mut env = vec![0; c.slots];
        env[..args.len()].copy_from_slice(args);
        Ok(env)
    }

    pub fn formula(&self, c: &Compiled, args: &[Elem]) -> Result<bool, EvalError> {
        let mut env = self.env(c, args)?;
        match &c.root {
            Root::F(f) => self.eval_f(f, &mut env),
            Root::T(_) => panic!("compiled expression is a term"),
        }
    }

    pub fn term(&self, c: &Compiled, args: &[Elem]) -> Result<i128, EvalError> {
        let mut env = self.env(c, args)?;
        match &c.root {
            Root::T(t) => self.eval_t(t, &mut env),
            Root::F(_) => panic!("compiled expression is a formula"),
        }
    }

    pub fn value(&self, c: &Compiled, args: &[Elem]) -> Result<Value, EvalError> {
        if c.is_formula() {
            self.formula(c, args).map(Value::Bool)
        } else {
            self.term(c, args).map(Value::Int)
        }
    }

    /// One-shot evaluation under an assignment covering the free variables.
    pub fn eval(&self, e: &Expr, beta: &Assignment) -> Result<Value, EvalError> {
        let inputs: Vec<Var> = e.free_vars().iter().cloned().collect();
        let args = inputs
            .iter()
            .map(|v| beta.get(v).copied().ok_or_else(|| EvalError::Unassigned(v.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let c = self.compile(e, &inputs)?;
        self.value(&c, &args)
    }

    pub fn eval_formula(&self, e: &Expr, beta: &Assignment) -> Result<bool, EvalError> {
        self.eval(e, beta).map(|v| v.as_bool().expect("formula"))
    }

    pub fn eval_term(&self, e: &Expr, beta: &Assignment) -> Result<i128, EvalError> {
        self.eval(e, beta).map(|v| v.as_int().expect("term"))
    }
}

/// Evaluates `e` on the `radius`-neighbourhood of its free variables' values, fetched
/// through the oracle. Agrees with global evaluation whenever `e` is `radius`-local.
pub fn eval_local(
    e: &Expr,
    radius: u32,
    beta: &Assignment,
    oracle: &LocalOracle<'_>,
    registry: &Registry,
) -> Result<Value, EvalError> {
    let inputs: Vec<Var> = e.free_vars().iter().cloned().collect();
    let tuple = inputs
        .iter()
        .map(|v| beta.get(v).copied().ok_or_else(|| EvalError::Unassigned(v.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let region = oracle.materialize(&tuple, radius)?;
    let local = region.localize(&tuple)?;
    let ev = Evaluator::new(&region.structure, registry);
    let c = ev.compile(e, &inputs)?;
    ev.value(&c, &local)
}
