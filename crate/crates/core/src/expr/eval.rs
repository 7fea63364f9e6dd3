//! Numeric evaluation: exact rationals where possible, principal-branch
//! complex floating point once exponentials, logarithms or fractional powers
//! are involved.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::atom::{Atom, Frac};
use super::error::{KResult, KernelError};
use super::poly::Poly;
use super::ratfunc::Expr;

/// Value produced by numeric evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Approx(Complex64),
}

impl Number {
    pub fn int(n: i64) -> Number {
        Number::Exact(BigRational::from_integer(n.into()))
    }

    pub fn to_complex(&self) -> Complex64 {
        match self {
            Number::Exact(q) => Complex64::new(q.to_f64().unwrap_or(f64::NAN), 0.0),
            Number::Approx(z) => *z,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Number::Exact(q) if q.is_zero())
    }

    pub fn abs(&self) -> f64 {
        self.to_complex().norm()
    }

    pub fn add(&self, o: &Number) -> Number {
        match (self, o) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a + b),
            _ => Number::Approx(self.to_complex() + o.to_complex()),
        }
    }

    pub fn sub(&self, o: &Number) -> Number {
        match (self, o) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a - b),
            _ => Number::Approx(self.to_complex() - o.to_complex()),
        }
    }

    pub fn mul(&self, o: &Number) -> Number {
        match (self, o) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a * b),
            _ => Number::Approx(self.to_complex() * o.to_complex()),
        }
    }

    pub fn div(&self, o: &Number) -> KResult<Number> {
        match (self, o) {
            (_, Number::Exact(b)) if b.is_zero() => Err(KernelError::DivisionByZero),
            (Number::Exact(a), Number::Exact(b)) => Ok(Number::Exact(a / b)),
            _ => {
                let d = o.to_complex();
                if d.norm() == 0.0 {
                    return Err(KernelError::DivisionByZero);
                }
                Ok(Number::Approx(self.to_complex() / d))
            }
        }
    }

    pub fn powi(&self, k: i64) -> KResult<Number> {
        match self {
            Number::Exact(q) => {
                if k < 0 && q.is_zero() {
                    return Err(KernelError::DivisionByZero);
                }
                let base = if k < 0 { q.recip() } else { q.clone() };
                Ok(Number::Exact(num_traits::pow(base, k.unsigned_abs() as usize)))
            }
            Number::Approx(z) => Ok(Number::Approx(z.powi(k as i32))),
        }
    }

    /// Principal-branch rational power.
    pub fn powr(&self, e: Frac) -> KResult<Number> {
        if e.is_integer() {
            return self.powi(*e.numer());
        }
        let z = self.to_complex();
        if z.norm() == 0.0 {
            return if e > Frac::zero() {
                Ok(Number::Approx(Complex64::zero()))
            } else {
                Err(KernelError::DivisionByZero)
            };
        }
        let r = *e.numer() as f64 / *e.denom() as f64;
        Ok(Number::Approx((z.ln() * r).exp()))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(q) => write!(f, "{q}"),
            Number::Approx(z) => write!(f, "{z}"),
        }
    }
}

/// Values for base atoms (variables, parameters and jets).
pub type Assignment = BTreeMap<Atom, Number>;

/// Evaluates `e` at the point given by `asg`.
pub fn numeric_eval(e: &Expr, asg: &Assignment) -> KResult<Number> {
    let mut memo = BTreeMap::new();
    eval_expr(e, asg, &mut memo)
}

fn eval_expr(e: &Expr, asg: &Assignment, memo: &mut BTreeMap<Atom, Number>) -> KResult<Number> {
    let mut v = eval_poly(e.num(), asg, memo)?;
    for (f, k) in e.den() {
        let d = eval_poly(f, asg, memo)?.powi(*k as i64)?;
        v = v.div(&d)?;
    }
    Ok(v)
}

fn eval_poly(p: &Poly, asg: &Assignment, memo: &mut BTreeMap<Atom, Number>) -> KResult<Number> {
    let mut acc = Number::int(0);
    for (m, c) in p.terms() {
        let mut t = Number::Exact(c.clone());
        for (a, e) in m.factors() {
            let v = eval_atom(a, asg, memo)?;
            t = t.mul(&v.powr(*e)?);
        }
        acc = acc.add(&t);
    }
    Ok(acc)
}

fn eval_atom(a: &Atom, asg: &Assignment, memo: &mut BTreeMap<Atom, Number>) -> KResult<Number> {
    if let Some(v) = memo.get(a) {
        return Ok(v.clone());
    }
    let v = match a {
        Atom::Var(_) | Atom::Param(_) | Atom::Jet(..) => asg
            .get(a)
            .cloned()
            .ok_or_else(|| KernelError::Unassigned(a.to_string()))?,
        Atom::Exp(arg) => {
            let z = eval_expr(arg, asg, memo)?;
            if z.is_exact_zero() {
                Number::int(1)
            } else {
                Number::Approx(z.to_complex().exp())
            }
        }
        Atom::Log(arg) => {
            let z = eval_expr(arg, asg, memo)?;
            if z.to_complex().norm() == 0.0 {
                return Err(KernelError::DivisionByZero);
            }
            Number::Approx(z.to_complex().ln())
        }
        Atom::Root(p) => eval_poly(p, asg, memo)?,
        Atom::Surd(s) => Number::Exact(BigRational::from_integer(s.clone())),
    };
    memo.insert(a.clone(), v.clone());
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::Context;
    use crate::expr::parse::parse;

    #[test]
    fn rational_expressions_evaluate_exactly() {
        let c = Context::with_vars(&["x"]);
        let e = parse("(x^2 + 1)/(x - 3)", &c).unwrap();
        let mut asg = Assignment::new();
        asg.insert(Atom::var("x"), Number::Exact(BigRational::new(1.into(), 2.into())));
        assert_eq!(
            numeric_eval(&e, &asg).unwrap(),
            Number::Exact(BigRational::new((-1).into(), 2.into()))
        );
    }

    #[test]
    fn radicals_evaluate_on_principal_branch() {
        let c = Context::with_vars(&["x"]);
        let e = parse("(-1)^(1/2)*(1 + x)^(1/2)", &c).unwrap();
        let mut asg = Assignment::new();
        asg.insert(Atom::var("x"), Number::int(3));
        let v = numeric_eval(&e, &asg).unwrap().to_complex();
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn missing_values_are_reported() {
        let c = Context::with_vars(&["x"]);
        let e = parse("x + a", &c).unwrap();
        let mut asg = Assignment::new();
        asg.insert(Atom::var("x"), Number::int(3));
        assert!(matches!(numeric_eval(&e, &asg), Err(KernelError::Unassigned(_))));
    }
}
