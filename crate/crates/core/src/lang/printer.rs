use std::fmt::{self, Write};

use super::ast::{Expr, Kind};

fn join_vars(vars: &[super::Var]) -> String {
    vars.iter().map(|v| v.as_ref()).collect::<Vec<_>>().join(",")
}

fn write_expr(e: &Expr, out: &mut String) -> fmt::Result {
    if let Some((a, b)) = e.as_and() {
        out.push('(');
        write_expr(a, out)?;
        out.push_str(" & ");
        write_expr(b, out)?;
        out.push(')');
        return Ok(());
    }
    if let Some((x, a)) = e.as_forall() {
        write!(out, "forall {x}. ")?;
        return write_expr(a, out);
    }
    if let Some((a, b)) = e.as_sub() {
        out.push('(');
        write_expr(a, out)?;
        out.push_str(" - ");
        write_expr(b, out)?;
        out.push(')');
        return Ok(());
    }
    match e.kind() {
        Kind::Eq(a, b) => write!(out, "{a} = {b}"),
        Kind::Atom(r, args) => write!(out, "{r}({})", join_vars(args)),
        Kind::DistLe(a, b, r) => write!(out, "dist({a},{b}) <= {r}"),
        Kind::Bool(b) => write!(out, "{b}"),
        Kind::Not(inner) => match inner.kind() {
            Kind::DistLe(a, b, r) => write!(out, "dist({a},{b}) > {r}"),
            Kind::Eq(a, b) => write!(out, "!({a} = {b})"),
            _ => {
                out.push('!');
                write_expr(inner, out)
            }
        },
        Kind::Or(a, b) => {
            out.push('(');
            write_expr(a, out)?;
            out.push_str(" | ");
            write_expr(b, out)?;
            out.push(')');
            Ok(())
        }
        Kind::Exists(x, body) => {
            write!(out, "exists {x}. ")?;
            write_expr(body, out)
        }
        Kind::NumPred(p, args) => {
            write!(out, "{p}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, out)?;
            }
            out.push(')');
            Ok(())
        }
        Kind::Count(zs, body) => {
            write!(out, "#({}).", join_vars(zs))?;
            write_expr(body, out)
        }
        Kind::Int(i) => write!(out, "{i}"),
        Kind::Add(a, b) | Kind::Mul(a, b) => {
            let op = if matches!(e.kind(), Kind::Add(..)) { " + " } else { " * " };
            out.push('(');
            write_expr(a, out)?;
            out.push_str(op);
            write_expr(b, out)?;
            out.push(')');
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, &mut s)?;
        f.write_str(&s)
    }
}

/// Print form with commutative `&`, `|`, `+` and `*` chains flattened and sorted, so that
/// syntactic reorderings share one key.
pub fn canonical_key(e: &Expr) -> String {
    if e.as_and().is_some() {
        return chain(e, " & ", &|x| x.as_and().map(|(a, b)| (a.clone(), b.clone())));
    }
    match e.kind() {
        Kind::Or(..) => chain(e, " | ", &|x| match x.kind() {
            Kind::Or(a, b) => Some((a.clone(), b.clone())),
            _ => None,
        }),
        Kind::Add(..) => chain(e, " + ", &|x| match x.kind() {
            Kind::Add(a, b) => Some((a.clone(), b.clone())),
            _ => None,
        }),
        Kind::Mul(..) => chain(e, " * ", &|x| match x.kind() {
            Kind::Mul(a, b) => Some((a.clone(), b.clone())),
            _ => None,
        }),
        Kind::Not(inner) => match inner.kind() {
            Kind::DistLe(..) | Kind::Eq(..) => e.to_string(),
            _ => format!("!{}", canonical_key(inner)),
        },
        Kind::Exists(x, body) => {
            if let Some((y, a)) = e.as_forall() {
                format!("forall {y}. {}", canonical_key(a))
            } else {
                format!("exists {x}. {}", canonical_key(body))
            }
        }
        Kind::Count(zs, body) => format!("#({}).{}", join_vars(zs), canonical_key(body)),
        Kind::NumPred(p, args) => {
            let parts: Vec<String> = args.iter().map(canonical_key).collect();
            format!("{p}({})", parts.join(", "))
        }
        _ => e.to_string(),
    }
}

fn chain(e: &Expr, sep: &str, split: &dyn Fn(&Expr) -> Option<(Expr, Expr)>) -> String {
    let mut parts = Vec::new();
    let mut stack = vec![e.clone()];
    while let Some(x) = stack.pop() {
        match split(&x) {
            Some((a, b)) => {
                stack.push(a);
                stack.push(b);
            }
            None => parts.push(canonical_key(&x)),
        }
    }
    parts.sort();
    format!("({})", parts.join(sep))
}
