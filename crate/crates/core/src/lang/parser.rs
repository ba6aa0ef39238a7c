use super::ast::{var, Expr, Kind, Var};
use super::registry::Registry;
use super::LangError;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Digits(String),
    Sym(&'static str),
    End,
}

const SYMBOLS: [&str; 14] = ["<=", "(", ")", ",", ".", "&", "|", "!", "=", "+", "*", "-", "#", ">"];

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, LangError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((Tok::Digits(text[start..i].to_string()), start));
            continue;
        }
        for s in SYMBOLS {
            if text[i..].starts_with(s) {
                out.push((Tok::Sym(s), i));
                i += s.len();
                continue 'outer;
            }
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(LangError::Syntax { pos: i, message: format!("unexpected character {ch:?}") });
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

const KEYWORDS: [&str; 5] = ["exists", "forall", "dist", "true", "false"];

fn is_var_name(s: &str) -> bool {
    s.as_bytes().first().is_some_and(u8::is_ascii_lowercase) && !KEYWORDS.contains(&s)
}

struct Parser<'r> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    registry: &'r Registry,
}

type PResult<T> = Result<T, LangError>;

impl<'r> Parser<'r> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn fail<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(LangError::Syntax { pos: self.pos(), message: message.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> PResult<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.fail(format!("expected '{sym}'"))
        }
    }

    fn variable(&mut self) -> PResult<Var> {
        match self.peek().clone() {
            Tok::Ident(s) if is_var_name(&s) => {
                self.bump();
                Ok(var(&s))
            }
            _ => self.fail("expected a variable"),
        }
    }

    fn radius(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Digits(d) => match d.parse() {
                Ok(r) => {
                    self.bump();
                    Ok(r)
                }
                Err(_) => self.fail("radius out of range"),
            },
            _ => self.fail("expected a radius"),
        }
    }

    fn end(&self) -> PResult<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.fail("unexpected trailing input")
        }
    }

    fn formula(&mut self) -> PResult<Expr> {
        let mut acc = self.conjunction()?;
        while self.eat("|") {
            let rhs = self.conjunction()?;
            acc = Expr::new(Kind::Or(acc, rhs))?;
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        let mut acc = self.unary()?;
        while self.eat("&") {
            let rhs = self.unary()?;
            acc = Expr::and(acc, rhs);
        }
        Ok(acc)
    }

    fn quantified(&mut self, universal: bool) -> PResult<Expr> {
        let mut vars = vec![self.variable()?];
        while self.eat(",") {
            vars.push(self.variable()?);
        }
        self.expect(".")?;
        let mut body = self.unary()?;
        for v in vars.iter().rev() {
            body = if universal { Expr::forall(v, body) } else { Expr::exists(v, body) };
        }
        Ok(body)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat("!") {
            return Ok(Expr::not(self.unary()?));
        }
        if self.eat("(") {
            let inner = self.formula()?;
            self.expect(")")?;
            return Ok(inner);
        }
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return self.fail("expected a formula"),
        };
        match name.as_str() {
            "exists" | "forall" => {
                self.bump();
                return self.quantified(name == "forall");
            }
            "true" | "false" => {
                self.bump();
                return Ok(Expr::truth(name == "true"));
            }
            "dist" if *self.peek2() == Tok::Sym("(") => {
                self.bump();
                self.bump();
                let a = self.variable()?;
                self.expect(",")?;
                let b = self.variable()?;
                self.expect(")")?;
                let within = if self.eat("<=") {
                    true
                } else if self.eat(">") {
                    false
                } else {
                    return self.fail("expected '<=' or '>' after dist(...)");
                };
                let r = self.radius()?;
                let d = Expr::new(Kind::DistLe(a, b, r))?;
                return Ok(if within { d } else { Expr::not(d) });
            }
            _ => {}
        }
        if *self.peek2() == Tok::Sym("(") {
            self.bump();
            self.bump();
            if let Some(pred) = self.registry.get(&name) {
                let arity = pred.arity;
                let mut args = Vec::new();
                if !self.eat(")") {
                    loop {
                        args.push(self.term()?);
                        if self.eat(")") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                if args.len() != arity {
                    return Err(LangError::PredicateArity { name, expected: arity, found: args.len() });
                }
                return Expr::new(Kind::NumPred(Arc::from(name.as_str()), args));
            }
            let mut args = Vec::new();
            if !self.eat(")") {
                loop {
                    args.push(self.variable()?);
                    if self.eat(")") {
                        break;
                    }
                    self.expect(",")?;
                }
            }
            return Expr::new(Kind::Atom(Arc::from(name.as_str()), args));
        }
        let a = self.variable()?;
        self.expect("=")?;
        let b = self.variable()?;
        Expr::new(Kind::Eq(a, b))
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut acc = self.product()?;
        loop {
            if self.eat("+") {
                acc = Expr::new(Kind::Add(acc, self.product()?))?;
            } else if self.eat("-") {
                acc = Expr::sub(acc, self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> PResult<Expr> {
        let mut acc = self.term_primary()?;
        while self.eat("*") {
            acc = Expr::new(Kind::Mul(acc, self.term_primary()?))?;
        }
        Ok(acc)
    }

    fn integer(&mut self, negative: bool) -> PResult<Expr> {
        let digits = match self.peek().clone() {
            Tok::Digits(d) => d,
            _ => return self.fail("expected an integer"),
        };
        let text = if negative { format!("-{digits}") } else { digits };
        match text.parse::<i128>() {
            Ok(i) => {
                self.bump();
                Ok(Expr::int(i))
            }
            Err(_) => self.fail("integer literal exceeds the 128-bit range"),
        }
    }

    fn term_primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Digits(_) => self.integer(false),
            Tok::Sym("-") => {
                self.bump();
                self.integer(true)
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.term()?;
                self.expect(")")?;
                Ok(inner)
            }
            Tok::Sym("#") => {
                self.bump();
                self.expect("(")?;
                let mut zs = Vec::new();
                if !self.eat(")") {
                    loop {
                        zs.push(self.variable()?);
                        if self.eat(")") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                self.expect(".")?;
                let body = self.unary()?;
                Expr::new(Kind::Count(zs, body))
            }
            _ => self.fail("expected a term"),
        }
    }
}

fn run<T>(text: &str, registry: &Registry, f: impl FnOnce(&mut Parser<'_>) -> PResult<T>) -> PResult<T> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, registry };
    let out = f(&mut p)?;
    p.end()?;
    Ok(out)
}

pub fn parse_formula(text: &str, registry: &Registry) -> Result<Expr, LangError> {
    run(text, registry, |p| p.formula())
}

pub fn parse_term(text: &str, registry: &Registry) -> Result<Expr, LangError> {
    run(text, registry, |p| p.term())
}

/// Parses either a term or a formula. On failure, reports the more informative error:
/// a well-formedness error beats a syntax error, and a later syntax error beats an earlier one.
pub fn parse_with(text: &str, registry: &Registry) -> Result<Expr, LangError> {
    let as_term = parse_term(text, registry);
    let term_err = match as_term {
        Ok(e) => return Ok(e),
        Err(e) => e,
    };
    let form_err = match parse_formula(text, registry) {
        Ok(e) => return Ok(e),
        Err(e) => e,
    };
    match (&term_err, &form_err) {
        (LangError::Syntax { pos: a, .. }, LangError::Syntax { pos: b, .. }) => {
            if a > b {
                Err(term_err)
            } else {
                Err(form_err)
            }
        }
        (LangError::Syntax { .. }, _) => Err(form_err),
        _ => Err(term_err),
    }
}

/// [`parse_with`] against the built-in numerical predicates.
pub fn parse(text: &str) -> Result<Expr, LangError> {
    parse_with(text, &Registry::builtin())
}
