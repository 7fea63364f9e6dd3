//! Simultaneous substitution of symbols, functions and derivative directions.

use std::collections::HashMap;


use super::atom::{sym, Atom, MultiIndex, Monomial, Sym};
use super::context::Context;
use super::diff::Chain;
use super::error::KResult;
use super::poly::Poly;
use super::ratfunc::{frac_to_coeff, Expr};

/// One replacement inside a [`Substitution`].
#[derive(Clone, Debug)]
pub enum Binding {
    /// Parameter or independent variable replaced by an expression.
    Symbol(Sym, Expr),
    /// Function replaced by an expression; each jet becomes the matching
    /// total derivative of the replacement.
    Function(Sym, Expr),
    /// Direction `from` merged into `to` in every jet (flow specialization).
    Direction { from: Sym, to: Sym },
}

/// Set of bindings applied simultaneously, with an optional Jacobian used
/// when replacements are functions of new variables.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    pub bindings: Vec<Binding>,
    pub chain: Option<Chain>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn symbol(mut self, name: &str, e: Expr) -> Self {
        self.bindings.push(Binding::Symbol(sym(name), e));
        self
    }

    pub fn function(mut self, name: &str, e: Expr) -> Self {
        self.bindings.push(Binding::Function(sym(name), e));
        self
    }

    pub fn direction(mut self, from: &str, to: &str) -> Self {
        self.bindings.push(Binding::Direction {
            from: sym(from),
            to: sym(to),
        });
        self
    }

    pub fn with_chain(mut self, chain: Chain) -> Self {
        self.chain = Some(chain);
        self
    }
}

/// Rebuilds `e` with every base atom passed through `f` (`None` keeps it).
pub fn map_atoms(e: &Expr, f: &mut dyn FnMut(&Atom) -> KResult<Option<Expr>>) -> KResult<Expr> {
    let mut memo: HashMap<Atom, Option<Expr>> = HashMap::new();
    map_expr(e, f, &mut memo)
}

fn map_expr(
    e: &Expr,
    f: &mut dyn FnMut(&Atom) -> KResult<Option<Expr>>,
    memo: &mut HashMap<Atom, Option<Expr>>,
) -> KResult<Expr> {
    let num = map_poly(e.num(), f, memo)?;
    if e.den().is_empty() {
        return Ok(num);
    }
    let mut den = Expr::one();
    for (p, k) in e.den() {
        den = den.mul(&map_poly(p, f, memo)?.pow_int(*k as i64)?);
    }
    num.div(&den)
}

fn map_poly(
    p: &Poly,
    f: &mut dyn FnMut(&Atom) -> KResult<Option<Expr>>,
    memo: &mut HashMap<Atom, Option<Expr>>,
) -> KResult<Expr> {
    let mut unchanged = Poly::zero();
    let mut acc = Vec::new();
    for (m, c) in p.terms() {
        let mut changed: Vec<(Expr, num_rational::Ratio<i64>, bool)> = Vec::new();
        let mut kept = Vec::new();
        for (a, e) in m.factors() {
            match map_atom(a, f, memo)? {
                None => kept.push((a.clone(), *e)),
                Some(r) => changed.push((r, *e, matches!(a, Atom::Exp(_)))),
            }
        }
        if changed.is_empty() {
            unchanged.add_term(m.clone(), c.clone());
            continue;
        }
        let mut t = Expr::monomial(Monomial::from_factors(kept), c.clone());
        for (r, e, is_exp) in changed {
            let factor = if is_exp {
                // r is the mapped argument; fold the exponent into it.
                Expr::exp(&r.scale(&frac_to_coeff(e)))?
            } else {
                r.pow(e)?
            };
            t = t.mul(&factor);
        }
        acc.push(t);
    }
    acc.push(Expr::from_poly(unchanged));
    Ok(Expr::sum(acc))
}

fn map_atom(
    a: &Atom,
    f: &mut dyn FnMut(&Atom) -> KResult<Option<Expr>>,
    memo: &mut HashMap<Atom, Option<Expr>>,
) -> KResult<Option<Expr>> {
    if let Some(r) = memo.get(a) {
        return Ok(r.clone());
    }
    let r = match a {
        Atom::Var(_) | Atom::Param(_) | Atom::Jet(..) => f(a)?,
        Atom::Exp(arg) => {
            let m = map_expr(arg, f, memo)?;
            if &m == arg.as_ref() {
                None
            } else {
                Some(m)
            }
        }
        Atom::Log(arg) => {
            let m = map_expr(arg, f, memo)?;
            if &m == arg.as_ref() {
                None
            } else {
                Some(Expr::log(&m)?)
            }
        }
        Atom::Root(p) => {
            let m = map_poly(p, f, memo)?;
            if m == Expr::from_poly((**p).clone()) {
                None
            } else {
                Some(m)
            }
        }
        Atom::Surd(_) => None,
    };
    memo.insert(a.clone(), r.clone());
    Ok(r)
}

impl Context {
    /// Applies `s` to `e`. Jets of substituted functions are differentiated
    /// in this context (through the substitution's Jacobian, if any).
    pub fn substitute(&self, e: &Expr, s: &Substitution) -> KResult<Expr> {
        let chain = s.chain.as_ref();
        let mut f = |a: &Atom| -> KResult<Option<Expr>> {
            for b in &s.bindings {
                match (b, a) {
                    (Binding::Symbol(name, r), Atom::Param(p) | Atom::Var(p)) if name == p => {
                        return Ok(Some(r.clone()));
                    }
                    (Binding::Function(name, r), Atom::Jet(g, idx)) if name == g => {
                        let mut out = r.clone();
                        for v in idx.expanded() {
                            out = self.diff_chain(&out, &v, chain)?;
                        }
                        return Ok(Some(out));
                    }
                    (Binding::Direction { from, to }, Atom::Var(v)) if v == from => {
                        return Ok(Some(Expr::atom(Atom::Var(to.clone()))));
                    }
                    (Binding::Direction { from, to }, Atom::Jet(g, idx)) if idx.contains(from) => {
                        let k = idx.get(from);
                        let mut rest = idx.clone();
                        for _ in 0..k {
                            rest = rest.lowered(from).unwrap();
                        }
                        let merged: MultiIndex = rest.with(to, k);
                        return Ok(Some(Expr::atom(Atom::Jet(g.clone(), merged))));
                    }
                    _ => {}
                }
            }
            Ok(None)
        };
        map_atoms(e, &mut f)
    }
}

/// Replaces jets by rule values repeatedly until no rule applies.
///
/// `rule` receives each base atom and returns its replacement, if any.
/// Replacements may themselves contain reducible jets.
pub fn reduce_fixpoint(
    e: &Expr,
    rule: &mut dyn FnMut(&Atom) -> KResult<Option<Expr>>,
    max_rounds: usize,
) -> KResult<Expr> {
    let mut cur = e.clone();
    for _ in 0..max_rounds {
        let next = map_atoms(&cur, rule)?;
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
    Err(super::error::KernelError::Unsupported(
        "reduction did not terminate".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::FnKind;
    use crate::expr::parse::parse;

    fn ctx() -> Context {
        let mut c = Context::with_vars(&["x", "y", "t"]);
        c.add_function("M", &["x", "y", "t"], FnKind::Field);
        c.add_function("U1", &["x", "y", "t"], FnKind::Field);
        c
    }

    #[test]
    fn direction_merge_specializes_flow() {
        let c = ctx();
        let e = parse("M_y", &c).unwrap();
        let s = Substitution::new().direction("y", "x");
        assert_eq!(c.substitute(&e, &s).unwrap().to_string(), "M_x");
    }

    #[test]
    fn function_binding_differentiates_replacement() {
        let c = ctx();
        let e = parse("M_x + M", &c).unwrap();
        let s = Substitution::new().function("M", parse("x^2*U1", &c).unwrap());
        let r = c.substitute(&e, &s).unwrap();
        assert_eq!(r, parse("2*x*U1 + x^2*U1_x + x^2*U1", &c).unwrap());
    }

    #[test]
    fn symbol_binding_reaches_inside_exp() {
        let c = ctx();
        let e = parse("exp(a*x)", &c).unwrap();
        let s = Substitution::new().symbol("a", Expr::int(0));
        assert_eq!(c.substitute(&e, &s).unwrap(), Expr::one());
    }
}
