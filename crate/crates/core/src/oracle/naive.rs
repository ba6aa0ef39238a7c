use crate::semantics::{Assignment, EvalError, Value};
use crate::lang::{Expr, Kind, Registry, Var};
use crate::relstore::{Elem, Structure};

fn lookup(beta: &Assignment, v: &Var) -> Result<Elem, EvalError> {
    beta.get(v).copied().ok_or_else(|| EvalError::Unassigned(v.to_string()))
}

/// Distance by repeated frontier expansion, scanning every tuple each round.
pub(super) fn naive_distance_at_most(s: &Structure, a: Elem, b: Elem, r: u32) -> bool {
    let mut reached = vec![false; s.len()];
    reached[a as usize] = true;
    for _ in 0..r {
        let mut next = reached.clone();
        for rel in s.relations() {
            for t in rel.tuples() {
                if t.iter().any(|&e| reached[e as usize]) {
                    for &e in t {
                        next[e as usize] = true;
                    }
                }
            }
        }
        reached = next;
    }
    reached[b as usize]
}

fn formula(e: &Expr, s: &Structure, reg: &Registry, beta: &mut Assignment) -> Result<bool, EvalError> {
    Ok(match e.kind() {
        Kind::Eq(a, b) => lookup(beta, a)? == lookup(beta, b)?,
        Kind::Atom(r, args) => {
            let id = s.signature().lookup(r).ok_or_else(|| EvalError::UnknownRelation(r.to_string()))?;
            let rel = s.relation(id);
            if rel.arity() != args.len() {
                return Err(EvalError::RelationArity { rel: r.to_string(), expected: rel.arity(), found: args.len() });
            }
            let tuple = args.iter().map(|v| lookup(beta, v)).collect::<Result<Vec<_>, _>>()?;
            rel.tuples().any(|t| t == tuple.as_slice())
        }
        Kind::DistLe(a, b, r) => naive_distance_at_most(s, lookup(beta, a)?, lookup(beta, b)?, *r),
        Kind::Bool(b) => *b,
        Kind::Not(a) => !formula(a, s, reg, beta)?,
        Kind::Or(a, b) => {
            let l = formula(a, s, reg, beta)?;
            let r = formula(b, s, reg, beta)?;
            l || r
        }
        Kind::Exists(x, body) => {
            let saved = beta.get(x).copied();
            let mut found = false;
            for v in s.universe() {
                beta.insert(x.clone(), v);
                if formula(body, s, reg, beta)? {
                    found = true;
                }
            }
            restore(beta, x, saved);
            found
        }
        Kind::NumPred(p, args) => {
            let vals = args.iter().map(|a| term(a, s, reg, beta)).collect::<Result<Vec<_>, _>>()?;
            reg.decide(p, &vals)?
        }
        Kind::Count(..) | Kind::Int(_) | Kind::Add(..) | Kind::Mul(..) => {
            unreachable!("terms are never formulas")
        }
    })
}

fn restore(beta: &mut Assignment, x: &Var, saved: Option<Elem>) {
    match saved {
        Some(v) => beta.insert(x.clone(), v),
        None => beta.remove(x),
    };
}

fn term(e: &Expr, s: &Structure, reg: &Registry, beta: &mut Assignment) -> Result<i128, EvalError> {
    match e.kind() {
        Kind::Int(i) => Ok(*i),
        Kind::Add(a, b) => term(a, s, reg, beta)?.checked_add(term(b, s, reg, beta)?).ok_or(EvalError::Overflow),
        Kind::Mul(a, b) => term(a, s, reg, beta)?.checked_mul(term(b, s, reg, beta)?).ok_or(EvalError::Overflow),
        Kind::Count(zs, body) => {
            let saved: Vec<_> = zs.iter().map(|z| beta.get(z).copied()).collect();
            let n = s.len() as u64;
            let total = (0..zs.len()).try_fold(1u64, |acc, _| acc.checked_mul(n)).ok_or(EvalError::Overflow)?;
            let mut count: i128 = 0;
            // enumerate A^k by mixed-radix counting
            for mut code in 0..total {
                for z in zs {
                    beta.insert(z.clone(), (code % n) as Elem);
                    code /= n;
                }
                if formula(body, s, reg, beta)? {
                    count += 1;
                }
            }
            for (z, v) in zs.iter().zip(saved) {
                restore(beta, z, v);
            }
            Ok(count)
        }
        _ => unreachable!("formulas are never terms"),
    }
}

/// Direct reading of the semantics: every quantifier and count ranges over the whole universe.
pub fn naive_eval(e: &Expr, s: &Structure, registry: &Registry, beta: &Assignment) -> Result<Value, EvalError> {
    for v in e.free_vars() {
        lookup(beta, v)?;
    }
    let mut beta = beta.clone();
    if e.is_formula() {
        formula(e, s, registry, &mut beta).map(Value::Bool)
    } else {
        term(e, s, registry, &mut beta).map(Value::Int)
    }
}
