//! Derivations on canonical expressions: total derivatives (optionally through
//! a change of variables), frozen partial derivatives and partials with
//! respect to a single atom.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use super::atom::{sym, Atom, Frac, Monomial, Sym};
use super::context::Context;
use super::error::{KResult, KernelError};
use super::poly::{Coeff, Poly};
use super::ratfunc::{frac_to_coeff, Expr};

/// Jacobian of new variables with respect to old ones, used for the chain rule
/// when functions of the new variables are differentiated along old ones.
#[derive(Clone, Debug, Default)]
pub struct Chain {
    entries: BTreeMap<(Sym, Sym), Expr>,
}

impl Chain {
    pub fn new() -> Self {
        Chain::default()
    }

    pub fn set(&mut self, new: &Sym, old: &Sym, value: Expr) {
        self.entries.insert((new.clone(), old.clone()), value);
    }

    pub fn get(&self, new: &str, old: &str) -> Option<&Expr> {
        self.entries
            .iter()
            .find(|((n, o), _)| &**n == new && &**o == old)
            .map(|(_, e)| e)
    }

    pub fn is_new_var(&self, v: &str) -> bool {
        self.entries.keys().any(|(n, _)| &**n == v)
    }

    pub fn new_vars(&self) -> Vec<Sym> {
        let mut v: Vec<Sym> = self.entries.keys().map(|(n, _)| n.clone()).collect();
        v.dedup();
        v
    }
}

/// Applies the derivation whose value on base atoms is given by `base`.
///
/// Exponentials, logarithms and roots are handled by the chain rule.
pub fn derive(e: &Expr, base: &mut dyn FnMut(&Atom) -> KResult<Expr>) -> KResult<Expr> {
    let mut memo: HashMap<Atom, Expr> = HashMap::new();
    derive_memo(e, base, &mut memo)
}

fn derive_memo(
    e: &Expr,
    base: &mut dyn FnMut(&Atom) -> KResult<Expr>,
    memo: &mut HashMap<Atom, Expr>,
) -> KResult<Expr> {
    let dnum = derive_poly(e.num(), base, memo)?;
    if e.den().is_empty() {
        return Ok(dnum);
    }
    // d(N / prod f^k) = (dN - N * sum k df/f) / prod f^k
    let inv_den = Expr::with_den(Poly::one(), e.den().to_vec());
    let mut log_d = Expr::zero();
    for (f, k) in e.den() {
        let df = derive_poly(f, base, memo)?;
        if df.is_zero() {
            continue;
        }
        let fe = Expr::from_poly(f.clone());
        log_d = log_d.add(&df.div(&fe)?.scale(&Coeff::from_integer((*k).into())));
    }
    let num = Expr::from_poly(e.num().clone());
    Ok(dnum.sub(&num.mul(&log_d)).mul(&inv_den))
}

fn derive_atom(
    a: &Atom,
    base: &mut dyn FnMut(&Atom) -> KResult<Expr>,
    memo: &mut HashMap<Atom, Expr>,
) -> KResult<Expr> {
    if let Some(d) = memo.get(a) {
        return Ok(d.clone());
    }
    let d = match a {
        Atom::Var(_) | Atom::Param(_) | Atom::Jet(..) => base(a)?,
        Atom::Exp(arg) => {
            let da = derive_memo(arg, base, memo)?;
            if da.is_zero() {
                Expr::zero()
            } else {
                Expr::atom(a.clone()).mul(&da)
            }
        }
        Atom::Log(arg) => {
            let da = derive_memo(arg, base, memo)?;
            if da.is_zero() {
                Expr::zero()
            } else {
                da.div(arg)?
            }
        }
        // Derivative of the base polynomial; the exponent is applied by the caller.
        Atom::Root(p) => derive_poly(p, base, memo)?,
        Atom::Surd(_) => Expr::zero(),
    };
    memo.insert(a.clone(), d.clone());
    Ok(d)
}

fn derive_poly(
    p: &Poly,
    base: &mut dyn FnMut(&Atom) -> KResult<Expr>,
    memo: &mut HashMap<Atom, Expr>,
) -> KResult<Expr> {
    // Group contributions by the derivative of each atom to share work.
    let mut per_atom: BTreeMap<Atom, Poly> = BTreeMap::new();
    for (m, c) in p.terms() {
        for (a, e) in m.factors() {
            let rest = reduce_exponent(m, a, *e);
            per_atom
                .entry(a.clone())
                .or_default()
                .add_term(rest, c * frac_to_coeff(*e));
        }
    }
    let mut out = Vec::new();
    for (a, cof) in per_atom {
        let da = derive_atom(&a, base, memo)?;
        if da.is_zero() {
            continue;
        }
        let cof = match &a {
            // p^(e-1) * dp is written as p^e * dp / p.
            Atom::Root(rp) => Expr::from_poly(cof).div(&Expr::from_poly((**rp).clone()))?,
            _ => Expr::from_poly(cof),
        };
        out.push(cof.mul(&da));
    }
    Ok(Expr::sum(out))
}

/// Monomial with the exponent of `a` lowered by one. Radicals keep their
/// exponent; the caller divides by the base instead.
fn reduce_exponent(m: &Monomial, a: &Atom, e: Frac) -> Monomial {
    if a.is_radical() {
        return m.clone();
    }
    let (_, rest) = m.split_atom(a);
    rest.mul(&Monomial::power(a.clone(), e - Frac::one()))
}

impl Context {
    /// Total derivative along independent variable `v`.
    pub fn diff(&self, e: &Expr, v: &str) -> KResult<Expr> {
        self.diff_chain(e, v, None)
    }

    /// Repeated total derivative along each variable of `vars`.
    pub fn diff_many(&self, e: &Expr, vars: &[Sym]) -> KResult<Expr> {
        let mut out = e.clone();
        for v in vars {
            out = self.diff(&out, v)?;
        }
        Ok(out)
    }

    /// Total derivative along `v`; functions of the chain's new variables are
    /// differentiated through the Jacobian.
    pub fn diff_chain(&self, e: &Expr, v: &str, chain: Option<&Chain>) -> KResult<Expr> {
        let mut base = |a: &Atom| -> KResult<Expr> {
            match a {
                Atom::Var(u) if &**u == v => Ok(Expr::one()),
                Atom::Var(u) => match chain {
                    Some(ch) if ch.is_new_var(u) => ch.get(u, v).cloned().ok_or_else(|| {
                        KernelError::MissingJacobian {
                            new: u.to_string(),
                            old: v.to_string(),
                        }
                    }),
                    _ => Ok(Expr::zero()),
                },
                Atom::Param(_) => Ok(Expr::zero()),
                Atom::Jet(f, idx) => {
                    let fs = self
                        .function(f)
                        .ok_or_else(|| KernelError::UnknownFunction(f.to_string()))?;
                    if fs.depends_on(v) {
                        return self.jet(f, &idx.with(&sym(v), 1));
                    }
                    let Some(ch) = chain else {
                        return Ok(Expr::zero());
                    };
                    let mut out = Expr::zero();
                    for z in &fs.deps {
                        if !ch.is_new_var(z) {
                            continue;
                        }
                        let j = ch.get(z, v).ok_or_else(|| KernelError::MissingJacobian {
                            new: z.to_string(),
                            old: v.to_string(),
                        })?;
                        if j.is_zero() {
                            continue;
                        }
                        out = out.add(&self.jet(f, &idx.with(z, 1))?.mul(j));
                    }
                    Ok(out)
                }
                _ => unreachable!(),
            }
        };
        derive(e, &mut base)
    }

    /// Partial derivative along `v` holding every field jet fixed; given
    /// functions are still differentiated.
    pub fn diff_frozen(&self, e: &Expr, v: &str, fields: &dyn Fn(&str) -> bool) -> KResult<Expr> {
        let mut base = |a: &Atom| -> KResult<Expr> {
            match a {
                Atom::Var(u) => Ok(if &**u == v { Expr::one() } else { Expr::zero() }),
                Atom::Param(_) => Ok(Expr::zero()),
                Atom::Jet(f, idx) => {
                    if fields(f) {
                        return Ok(Expr::zero());
                    }
                    let fs = self
                        .function(f)
                        .ok_or_else(|| KernelError::UnknownFunction(f.to_string()))?;
                    if fs.depends_on(v) {
                        self.jet(f, &idx.with(&sym(v), 1))
                    } else {
                        Ok(Expr::zero())
                    }
                }
                _ => unreachable!(),
            }
        };
        derive(e, &mut base)
    }
}

/// Partial derivative with respect to a single base atom.
pub fn partial(e: &Expr, target: &Atom) -> KResult<Expr> {
    let mut base = |a: &Atom| -> KResult<Expr> {
        Ok(if a == target { Expr::one() } else { Expr::zero() })
    };
    derive(e, &mut base)
}

/// Degree of `e` in atom `a` (maximum exponent in the numerator).
pub fn degree_in(e: &Expr, a: &Atom) -> Frac {
    e.num()
        .terms()
        .map(|(m, _)| m.exponent(a))
        .max()
        .unwrap_or_else(Frac::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::FnKind;
    use crate::expr::parse::parse;

    fn ctx() -> Context {
        let mut c = Context::with_vars(&["x", "y", "t"]);
        c.add_function("u", &["x", "y", "t"], FnKind::Field);
        c.add_function("lam", &["y", "t"], FnKind::Field);
        c
    }

    #[test]
    fn product_rule_on_jets() {
        let c = ctx();
        let e = parse("u*u_x", &c).unwrap();
        let d = c.diff(&e, "x").unwrap();
        assert_eq!(d, parse("u_x^2 + u*u_xx", &c).unwrap());
    }

    #[test]
    fn structural_independence_gives_zero() {
        let c = ctx();
        let e = parse("lam^2", &c).unwrap();
        assert!(c.diff(&e, "x").unwrap().is_zero());
    }

    #[test]
    fn exponential_and_root_derivatives() {
        let c = ctx();
        let e = parse("exp(x^2)", &c).unwrap();
        assert_eq!(c.diff(&e, "x").unwrap(), parse("2*x*exp(x^2)", &c).unwrap());
        let r = parse("(1 + x^2)^(1/2)", &c).unwrap();
        let expected = parse("x*(1 + x^2)^(-1/2)", &c).unwrap();
        assert_eq!(c.diff(&r, "x").unwrap(), expected);
    }

    #[test]
    fn quotient_rule() {
        let c = ctx();
        let e = parse("1/(1 + x)", &c).unwrap();
        assert_eq!(c.diff(&e, "x").unwrap(), parse("-1/(1 + x)^2", &c).unwrap());
    }

    #[test]
    fn rules_are_applied_eagerly() {
        let mut c = ctx();
        c.add_function("P", &["x", "t"], FnKind::Given);
        c.add_rule("P", "x", Expr::one()).unwrap();
        let e = parse("P_xt", &c).unwrap();
        assert!(e.is_zero());
        let e = parse("P_t", &c).unwrap();
        assert!(c.diff(&e, "x").unwrap().is_zero());
    }

    #[test]
    fn chain_rule_through_jacobian() {
        let mut c = ctx();
        c.add_function("F", &["z1"], FnKind::Field);
        let mut ch = Chain::new();
        ch.set(&sym("z1"), &sym("x"), Expr::int(3));
        let e = parse("F", &c).unwrap();
        let d = c.diff_chain(&e, "x", Some(&ch)).unwrap();
        assert_eq!(d, parse("3*F_z1", &c).unwrap());
    }
}
