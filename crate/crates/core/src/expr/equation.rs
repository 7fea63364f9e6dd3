//! Equations `lhs = 0` in normal form and systems of them.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::atom::{Frac, Monomial};
use super::context::Context;
use super::poly::{Coeff, Poly};
use super::ratfunc::Expr;
use super::render::{render, Syntax};

/// Equation `lhs = 0`, normalized up to a nonzero factor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Equation {
    pub lhs: Expr,
}

/// Result of normalizing an expression: `original = factor * equation.lhs`.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub equation: Equation,
    pub factor: Expr,
}

impl Equation {
    /// Normal form of `e = 0`, or `None` when `e` vanishes identically.
    ///
    /// The denominator is dropped, the common monomial factor over atoms that
    /// are nonzero (and any negative powers) is removed, coefficients are made
    /// coprime integers with a positive first term, and declared nonzero
    /// polynomial factors are divided out.
    pub fn normalize(e: &Expr, ctx: &Context) -> Option<Normalized> {
        if e.is_zero() {
            return None;
        }
        let num = e.num();
        let content = num.monomial_content();
        let removable: Vec<_> = content
            .factors()
            .iter()
            .filter(|(a, k)| *k < Frac::zero() || ctx.is_nonzero_atom(a))
            .cloned()
            .collect();
        let shift = Monomial::from_factors(removable);
        let mut p = num.mul_monomial(&shift.inv(), &Coeff::one());
        let mut c = p.rational_content();
        if p.trailing().map(|(_, k)| k.is_negative()).unwrap_or(false) {
            c = -c;
        }
        p = p.scale(&c.recip());
        let mut extra = Poly::one();
        for f in ctx.nonzero_factors() {
            while let Some(q) = p.div_exact(f) {
                if q.len() > p.len() && p.len() > 1 {
                    break;
                }
                p = q;
                extra = extra.mul_raw(f);
            }
        }
        let lhs = Expr::from_poly(p);
        let factor = Expr::monomial(shift, c)
            .mul(&Expr::from_poly(extra))
            .mul(&Expr::with_den(Poly::one(), e.den().to_vec()));
        Some(Normalized {
            equation: Equation { lhs },
            factor,
        })
    }

    pub fn from_expr(e: &Expr, ctx: &Context) -> Option<Equation> {
        Equation::normalize(e, ctx).map(|n| n.equation)
    }

    pub fn render(&self, syntax: Syntax) -> String {
        format!("{} = 0", render(&self.lhs, syntax))
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 0", self.lhs)
    }
}

/// Set of equations compared up to order and normalization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PdeSystem {
    pub equations: Vec<Equation>,
}

impl PdeSystem {
    pub fn new() -> Self {
        PdeSystem::default()
    }

    pub fn push(&mut self, eq: Equation) {
        if !self.equations.contains(&eq) {
            self.equations.push(eq);
        }
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn as_set(&self) -> BTreeSet<Equation> {
        self.equations.iter().cloned().collect()
    }

    pub fn same_as(&self, other: &PdeSystem) -> bool {
        self.as_set() == other.as_set()
    }

    /// Equations of `self` missing from `other` and vice versa.
    pub fn difference(&self, other: &PdeSystem) -> (Vec<Equation>, Vec<Equation>) {
        let a = self.as_set();
        let b = other.as_set();
        (a.difference(&b).cloned().collect(), b.difference(&a).cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::FnKind;
    use crate::expr::parse::parse;

    fn ctx() -> Context {
        let mut c = Context::with_vars(&["x", "y", "t"]);
        c.add_function("lam", &["y", "t"], FnKind::Field);
        c.add_function("M", &["x", "y", "t"], FnKind::Field);
        c.declare_nonzero("lam");
        c.declare_nonzero("M");
        c
    }

    #[test]
    fn normalization_strips_nonzero_factors_and_sign() {
        let c = ctx();
        let e = parse("-3*M*lam^2*lam_t/2 + 3*M*lam_y/2", &c).unwrap();
        let n = Equation::normalize(&e, &c).unwrap();
        assert_eq!(n.equation.lhs.to_string(), "lam_y - lam^2*lam_t");
        assert!(n.factor.mul(&n.equation.lhs).sub(&e).is_zero());
    }

    #[test]
    fn normalization_is_idempotent() {
        let c = ctx();
        let e = parse("(x*M_x - 2*M)/(1 + x)", &c).unwrap();
        let once = Equation::from_expr(&e, &c).unwrap();
        let twice = Equation::from_expr(&once.lhs, &c).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn zero_has_no_equation() {
        let c = ctx();
        assert!(Equation::from_expr(&Expr::zero(), &c).is_none());
    }
}
