//! Text parser producing canonical expressions.
//!
//! Grammar: sums, products, quotients, unary minus, `^` (right associative),
//! parentheses, integer literals, `exp(..)`, `log(..)` and identifiers.
//! Identifiers resolve to definitions, independent variables, function
//! symbols, jets (`name_suffix`) or, failing those, parameters.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::context::Context;
use super::error::{KResult, KernelError};
use super::ratfunc::Expr;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(s: &str) -> KResult<Vec<(usize, Tok)>> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && (b[i] as char).is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                return Err(KernelError::Parse {
                    pos: i,
                    msg: "decimal literals are not supported; use p/q".into(),
                });
            }
            out.push((start, Tok::Num(s[start..i].parse().unwrap())));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(s[start..i].to_string())));
        } else if "+-*/^".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else if c == '(' {
            out.push((i, Tok::LParen));
            i += 1;
        } else if c == ')' {
            out.push((i, Tok::RParen));
            i += 1;
        } else {
            return Err(KernelError::Parse {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
    ctx: &'a Context,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> KResult<T> {
        Err(KernelError::Parse {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> KResult<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {t:?}"))
        }
    }

    fn sum(&mut self) -> KResult<Expr> {
        let mut acc = self.product()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if c == '+' { acc.add(&rhs) } else { acc.sub(&rhs) };
        }
        Ok(acc)
    }

    fn product(&mut self) -> KResult<Expr> {
        let mut acc = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if c == '*' { acc.mul(&rhs) } else { acc.div(&rhs)? };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> KResult<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> KResult<Expr> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let e = self.unary()?;
            return base.pow_expr(&e);
        }
        Ok(base)
    }

    fn primary(&mut self) -> KResult<Expr> {
        let start = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::rational(BigRational::from_integer(n)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "exp" || name == "log" {
                    self.expect(Tok::LParen)?;
                    let arg = self.sum()?;
                    self.expect(Tok::RParen)?;
                    return if name == "exp" { Expr::exp(&arg) } else { Expr::log(&arg) };
                }
                self.ident(&name).map_err(|e| match e {
                    KernelError::Parse { msg, .. } => KernelError::Parse { pos: start, msg },
                    other => other,
                })
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }

    fn ident(&self, name: &str) -> KResult<Expr> {
        if let Some(d) = self.ctx.definition(name) {
            return Ok(d.clone());
        }
        if self.ctx.is_var(name) {
            return Ok(Expr::var(name));
        }
        if let Some((f, idx)) = self.ctx.parse_jet_name(name)? {
            return self.ctx.jet(&f, &idx);
        }
        if self.ctx.function(name).is_some() {
            return self.ctx.func(name);
        }
        Ok(Expr::param(name))
    }
}

/// Parses `src` into a canonical expression using the symbols of `ctx`.
pub fn parse(src: &str, ctx: &Context) -> KResult<Expr> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        len: src.len(),
        ctx,
    };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Expands `NAME[k]` index templates (e.g. `U[j+1]` with `j = 2` becomes `U3`)
/// using integer bindings; arithmetic inside brackets supports `+` and `-`.
pub fn instantiate(template: &str, bindings: &[(&str, i64)]) -> KResult<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('[') {
        out.push_str(&rest[..open]);
        let close = rest[open..].find(']').ok_or(KernelError::Parse {
            pos: open,
            msg: "unclosed index bracket".into(),
        })? + open;
        let inner = &rest[open + 1..close];
        out.push_str(&eval_index(inner, bindings)?.to_string());
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn eval_index(s: &str, bindings: &[(&str, i64)]) -> KResult<i64> {
    let mut total = 0i64;
    let mut sign = 1i64;
    for tok in s.split_inclusive(['+', '-']) {
        let (body, next) = match tok.chars().last() {
            Some('+') => (&tok[..tok.len() - 1], 1),
            Some('-') => (&tok[..tok.len() - 1], -1),
            _ => (tok, 1),
        };
        let body = body.trim();
        if !body.is_empty() {
            let v = match body.parse::<i64>() {
                Ok(v) => v,
                Err(_) => bindings
                    .iter()
                    .find(|(k, _)| *k == body)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| KernelError::Parse {
                        pos: 0,
                        msg: format!("unbound index `{body}`"),
                    })?,
            };
            total += sign * v;
        }
        sign = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::FnKind;

    fn ctx() -> Context {
        let mut c = Context::with_vars(&["x", "y", "t"]);
        c.add_function("psi", &["x", "y", "t"], FnKind::Field);
        c.add_function("M", &["x", "y", "t"], FnKind::Field);
        c
    }

    #[test]
    fn parses_lax_operator() {
        let c = ctx();
        let e = parse("psi_xx - (1/4 - lam*M/2)*psi", &c).unwrap();
        assert_eq!(e.to_string(), "-1/4*psi + psi_xx + 1/2*lam*M*psi");
    }

    #[test]
    fn unknown_function_is_reported() {
        let c = ctx();
        assert_eq!(parse("foo_x", &c), Err(KernelError::UnknownFunction("foo".into())));
    }

    #[test]
    fn undeclared_direction_is_reported() {
        let mut c = ctx();
        c.add_function("lam", &["y", "t"], FnKind::Field);
        assert!(matches!(parse("lam_x", &c), Err(KernelError::UndeclaredDirection { .. })));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let c = ctx();
        match parse("x + * y", &c) {
            Err(KernelError::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("(x", &c), Err(KernelError::Parse { .. })));
        assert!(matches!(parse("1.5*x", &c), Err(KernelError::Parse { .. })));
    }

    #[test]
    fn index_templates_expand() {
        let s = instantiate("U[j+1]_x - U[n]", &[("j", 1), ("n", 3)]).unwrap();
        assert_eq!(s, "U2_x - U3");
    }
}
