//! Atoms, multi-indices and Laurent monomials with rational exponents.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use super::poly::Poly;
use super::ratfunc::Expr;

/// Interned symbol name.
pub type Sym = Arc<str>;

/// Exponent type used on atoms.
pub type Frac = Ratio<i64>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// Ordering rank of independent variables inside jet suffixes.
pub fn var_rank(name: &str) -> (u8, &str) {
    match name {
        "x" => (0, ""),
        "y" => (1, ""),
        "t" => (2, ""),
        "z1" => (3, ""),
        "z2" => (4, ""),
        other => (5, other),
    }
}

/// Derivative orders of a jet, one entry per differentiated variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(Vec<(Sym, u32)>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Sym, u32)>>(pairs: I) -> Self {
        let mut out = MultiIndex::empty();
        for (v, k) in pairs {
            out = out.with(&v, k);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().map(|(_, k)| k).sum()
    }

    pub fn get(&self, var: &str) -> u32 {
        self.0
            .iter()
            .find(|(v, _)| &**v == var)
            .map(|(_, k)| *k)
            .unwrap_or(0)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.get(var) > 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Sym, u32)> {
        self.0.iter()
    }

    /// Index raised by `k` in direction `var`.
    pub fn with(&self, var: &Sym, k: u32) -> Self {
        if k == 0 {
            return self.clone();
        }
        let mut v = self.0.clone();
        match v.iter_mut().find(|(s, _)| s == var) {
            Some(entry) => entry.1 += k,
            None => v.push((var.clone(), k)),
        }
        v.sort_by(|a, b| var_rank(&a.0).cmp(&var_rank(&b.0)));
        MultiIndex(v)
    }

    /// Index lowered by one in direction `var`, if possible.
    pub fn lowered(&self, var: &str) -> Option<Self> {
        let mut v = self.0.clone();
        let pos = v.iter().position(|(s, _)| &**s == var)?;
        if v[pos].1 == 1 {
            v.remove(pos);
        } else {
            v[pos].1 -= 1;
        }
        Some(MultiIndex(v))
    }

    /// Variables listed with multiplicity, in canonical order.
    pub fn expanded(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        for (v, k) in &self.0 {
            for _ in 0..*k {
                out.push(v.clone());
            }
        }
        out
    }

    /// Suffix used in jet names, e.g. `xxt` or `z1z2`.
    pub fn suffix(&self) -> String {
        self.expanded().iter().map(|s| s.to_string()).collect()
    }
}

/// Irreducible building block of a canonical expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// Independent variable.
    Var(Sym),
    /// Named constant.
    Param(Sym),
    /// Derivative of a function symbol; the empty index is the function itself.
    Jet(Sym, MultiIndex),
    /// `exp(arg)` where `arg` has a single unit-coefficient numerator term.
    Exp(Arc<Expr>),
    /// `log(arg)` where `arg` is an atom, a primitive polynomial or a prime.
    Log(Arc<Expr>),
    /// Primitive polynomial carrying a fractional exponent in (0, 1).
    Root(Arc<Poly>),
    /// Prime number, or -1, carrying a fractional exponent in (0, 1).
    Surd(BigInt),
}

impl Atom {
    pub fn var(name: &str) -> Atom {
        Atom::Var(sym(name))
    }

    pub fn param(name: &str) -> Atom {
        Atom::Param(sym(name))
    }

    pub fn func(name: &str) -> Atom {
        Atom::Jet(sym(name), MultiIndex::empty())
    }

    /// True for atoms whose exponent must stay inside (0, 1).
    pub fn is_radical(&self) -> bool {
        matches!(self, Atom::Root(_) | Atom::Surd(_))
    }

    pub fn is_jet_of(&self, f: &str) -> bool {
        matches!(self, Atom::Jet(name, _) if &**name == f)
    }

    pub fn jet_parts(&self) -> Option<(&Sym, &MultiIndex)> {
        match self {
            Atom::Jet(f, idx) => Some((f, idx)),
            _ => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(s) | Atom::Param(s) => write!(f, "{s}"),
            Atom::Jet(name, idx) if idx.is_empty() => write!(f, "{name}"),
            Atom::Jet(name, idx) => write!(f, "{name}_{}", idx.suffix()),
            Atom::Exp(arg) => write!(f, "exp({arg})"),
            Atom::Log(arg) => write!(f, "log({arg})"),
            Atom::Root(p) => write!(f, "({})", p),
            Atom::Surd(s) if s.is_negative() => write!(f, "({s})"),
            Atom::Surd(s) => write!(f, "{s}"),
        }
    }
}

/// Product of atoms raised to nonzero rational powers, kept sorted by atom.
///
/// Monomials are ordered by total degree first, then lexicographically by
/// exponent vector, which makes the order compatible with multiplication.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    degree: Frac,
    factors: Vec<(Atom, Frac)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn atom(a: Atom) -> Self {
        Monomial::from_factors(vec![(a, Frac::one())])
    }

    pub fn power(a: Atom, e: Frac) -> Self {
        Monomial::from_factors(vec![(a, e)])
    }

    /// Builds a monomial from arbitrary (possibly repeated) factors.
    pub fn from_factors(mut f: Vec<(Atom, Frac)>) -> Self {
        f.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Atom, Frac)> = Vec::with_capacity(f.len());
        for (a, e) in f {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += e,
                _ => merged.push((a, e)),
            }
        }
        merged.retain(|(_, e)| !e.is_zero());
        let degree = merged.iter().map(|(_, e)| *e).sum();
        Monomial {
            degree,
            factors: merged,
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> Frac {
        self.degree
    }

    pub fn factors(&self) -> &[(Atom, Frac)] {
        &self.factors
    }

    pub fn exponent(&self, a: &Atom) -> Frac {
        self.factors
            .binary_search_by(|(b, _)| b.cmp(a))
            .map(|i| self.factors[i].1)
            .unwrap_or_else(|_| Frac::zero())
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if !e.is_zero() {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial {
            degree: self.degree + other.degree,
            factors: out,
        }
    }

    pub fn inv(&self) -> Monomial {
        Monomial {
            degree: -self.degree,
            factors: self.factors.iter().map(|(a, e)| (a.clone(), -*e)).collect(),
        }
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        self.mul(&other.inv())
    }

    pub fn pow(&self, r: Frac) -> Monomial {
        Monomial::from_factors(self.factors.iter().map(|(a, e)| (a.clone(), *e * r)).collect())
    }

    /// Per-atom minimum of exponents (absent atoms count as exponent 0).
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (a, e) in &self.factors {
            let m = (*e).min(other.exponent(a));
            if !m.is_zero() {
                out.push((a.clone(), m));
            }
        }
        for (a, e) in &other.factors {
            if self.exponent(a).is_zero() && *e < Frac::zero() {
                out.push((a.clone(), *e));
            }
        }
        Monomial::from_factors(out)
    }

    /// Removes atom `a` entirely, returning its exponent and the rest.
    pub fn split_atom(&self, a: &Atom) -> (Frac, Monomial) {
        let e = self.exponent(a);
        let rest = self.factors.iter().filter(|(b, _)| b != a).cloned().collect();
        (e, Monomial::from_factors(rest))
    }

    /// Splits the monomial into factors selected by `pred` and the rest.
    pub fn partition(&self, pred: impl Fn(&Atom) -> bool) -> (Monomial, Monomial) {
        let (sel, rest): (Vec<_>, Vec<_>) = self.factors.iter().cloned().partition(|(a, _)| pred(a));
        (Monomial::from_factors(sel), Monomial::from_factors(rest))
    }

    pub fn contains(&self, pred: impl Fn(&Atom) -> bool) -> bool {
        self.factors.iter().any(|(a, _)| pred(a))
    }

    /// True when every radical atom carries an exponent inside (0, 1).
    pub fn radicals_reduced(&self) -> bool {
        self.factors
            .iter()
            .all(|(a, e)| !a.is_radical() || (*e > Frac::zero() && *e < Frac::one()))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree.cmp(&other.degree) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Within a degree, a higher power of an earlier atom sorts first.
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some((_, ea)), None) => return Frac::zero().cmp(ea),
                (None, Some((_, eb))) => return eb.cmp(&Frac::zero()),
                (Some((xa, ea)), Some((xb, eb))) => match xa.cmp(xb) {
                    Ordering::Less => return Frac::zero().cmp(ea),
                    Ordering::Greater => return eb.cmp(&Frac::zero()),
                    Ordering::Equal => {
                        match eb.cmp(ea) {
                            Ordering::Equal => {}
                            ord => return ord,
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: i64, d: i64) -> Frac {
        Frac::new(n, d)
    }

    #[test]
    fn multi_index_orders_canonically() {
        let idx = MultiIndex::empty().with(&sym("t"), 1).with(&sym("x"), 2);
        assert_eq!(idx.suffix(), "xxt");
        assert_eq!(idx.order(), 3);
        assert_eq!(idx.lowered("x").unwrap().suffix(), "xt");
        assert!(idx.lowered("y").is_none());
    }

    #[test]
    fn monomial_product_cancels_exponents() {
        let x = Atom::var("x");
        let m = Monomial::power(x.clone(), f(1, 2));
        let p = m.mul(&Monomial::power(x, f(-1, 2)));
        assert!(p.is_one());
    }

    #[test]
    fn graded_order_puts_lower_degree_first() {
        let a = Monomial::atom(Atom::func("lam_y"));
        let b = Monomial::from_factors(vec![(Atom::func("lam"), f(2, 1)), (Atom::func("lam_t"), f(1, 1))]);
        assert!(a < b);
    }

    #[test]
    fn gcd_takes_minimum_exponents() {
        let x = Atom::var("x");
        let y = Atom::var("y");
        let a = Monomial::from_factors(vec![(x.clone(), f(2, 1)), (y.clone(), f(-1, 1))]);
        let b = Monomial::from_factors(vec![(x.clone(), f(1, 1))]);
        let g = a.gcd(&b);
        assert_eq!(g.exponent(&x), f(1, 1));
        assert_eq!(g.exponent(&y), f(-1, 1));
    }
}
