//! Sparse Laurent polynomials over atoms with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::atom::{Atom, Frac, Monomial};

pub type Coeff = BigRational;

/// Sum of monomials with nonzero rational coefficients.
///
/// Terms are stored in ascending monomial order; the last term is the leading one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Coeff>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn atom(a: Atom) -> Self {
        Poly::term(Monomial::atom(a), Coeff::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_monomial(&self) -> Option<(&Monomial, &Coeff)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, Coeff)> {
        self.terms.into_iter()
    }

    pub fn leading(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().next_back()
    }

    pub fn trailing(&self) -> Option<(&Monomial, &Coeff)> {
        self.terms.iter().next()
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &Coeff) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, k: &Coeff) -> Poly {
        let mut out = Poly::zero();
        for (n, c) in &self.terms {
            out.add_term(n.mul(m), c * k);
        }
        out
    }

    /// Product without reducing radical exponents.
    pub fn mul_raw(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (n, d) in &other.terms {
                out.add_term(m.mul(n), c * d);
            }
        }
        out
    }

    pub fn pow_raw(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = out.mul_raw(self);
        }
        out
    }

    pub fn has_radicals(&self) -> bool {
        self.terms.keys().any(|m| m.contains(|a| a.is_radical()))
    }

    pub fn radicals_reduced(&self) -> bool {
        self.terms.keys().all(|m| m.radicals_reduced())
    }

    /// Per-atom minimum exponent over all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        it.fold(first.clone(), |acc, m| acc.gcd(m))
    }

    /// Positive rational `c` such that `self / c` has coprime integer coefficients.
    pub fn rational_content(&self) -> Coeff {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return Coeff::one();
        }
        Coeff::new(num, den)
    }

    /// Writes `self = c * m * p` with `p` primitive: integer coprime
    /// coefficients, nonnegative exponents with no common monomial factor,
    /// and a positive trailing coefficient.
    pub fn primitive_split(&self) -> (Coeff, Monomial, Poly) {
        if self.is_zero() {
            return (Coeff::zero(), Monomial::one(), Poly::zero());
        }
        let m = self.monomial_content();
        let mut c = self.rational_content();
        if self.trailing().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            c = -c;
        }
        let inv_m = m.inv();
        let inv_c = c.recip();
        let p = self.mul_monomial(&inv_m, &inv_c);
        (c, m, p)
    }

    /// Exact quotient `self / divisor`, if the division leaves no remainder.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some((m, c)) = divisor.as_monomial() {
            return Some(self.mul_monomial(&m.inv(), &c.recip()));
        }
        if self.len() < divisor.len() && self.len() == 1 {
            return None;
        }
        let (lm, lc) = divisor.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let (tm, _) = divisor.trailing()?;
        // Quotient terms are bounded below by trailing(self)/trailing(divisor).
        let lower = self.trailing()?.0.div(tm).degree();
        if !self.spans_cover(divisor) {
            return None;
        }
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let cap = 8 * (self.len() + 4) * (divisor.len() + 4);
        for _ in 0..cap {
            let Some((rm, rc)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) else {
                return Some(quot);
            };
            let qm = rm.div(&lm);
            if qm.degree() < lower {
                return None;
            }
            let qc = &rc / &lc;
            for (m, c) in &divisor.terms {
                rem.add_term(m.mul(&qm), -(c * &qc));
            }
            quot.add_term(qm, qc);
        }
        None
    }

    /// Per-atom exponent range `(min, max)`, counting absent atoms as exponent 0.
    fn exponent_ranges(&self) -> BTreeMap<&Atom, (Frac, Frac)> {
        let mut out: BTreeMap<&Atom, (Frac, Frac)> = BTreeMap::new();
        for m in self.terms.keys() {
            for (a, e) in m.factors() {
                let r = out.entry(a).or_insert((Frac::zero(), Frac::zero()));
                r.0 = r.0.min(*e);
                r.1 = r.1.max(*e);
            }
        }
        out
    }

    /// Necessary condition for `divisor | self`: exponent ranges add under
    /// multiplication, so each of the divisor's ranges must fit inside ours.
    fn spans_cover(&self, divisor: &Poly) -> bool {
        let mine = self.exponent_ranges();
        divisor.exponent_ranges().into_iter().all(|(a, (lo, hi))| {
            let (mlo, mhi) = mine.get(a).copied().unwrap_or((Frac::zero(), Frac::zero()));
            mhi - mlo >= hi - lo
        })
    }

    /// Writes a primitive polynomial as `g^k` with `k` maximal, if `k > 1`.
    pub fn perfect_power(&self) -> Option<(Poly, u32)> {
        if self.len() < 2 {
            return None;
        }
        let span = self.leading()?.0.degree() - self.trailing()?.0.degree();
        let max_k = span.to_integer().clamp(0, 16) as u32;
        for k in (2..=max_k).rev() {
            if self.len() < k as usize + 1 {
                continue;
            }
            if let Some(g) = self.kth_root(k) {
                return match g.perfect_power() {
                    Some((h, j)) => Some((h, j * k)),
                    None => Some((g, k)),
                };
            }
        }
        None
    }

    fn kth_root(&self, k: u32) -> Option<Poly> {
        let (lm, lc) = self.leading()?;
        let (tm, _) = self.trailing()?;
        let root_c = rational_root(lc, k)?;
        let kf = Frac::from(k as i64);
        let lower = tm.degree() / kf;
        let mut g = Poly::term(lm.pow(Frac::one() / kf), root_c);
        let (glm, glc) = g.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        // Denominator of the Newton step: k * lt(g)^(k-1).
        let step_m = glm.pow(kf - Frac::one());
        let step_c = num_traits::pow(glc, (k - 1) as usize) * Coeff::from_integer(k.into());
        for _ in 0..(4 * self.len() + 8) {
            let rem = self.sub(&g.pow_raw(k));
            let Some((rm, rc)) = rem.leading() else {
                let negative = g.trailing().map(|(_, c)| c.is_negative()).unwrap_or(false);
                return Some(if negative { g.neg() } else { g });
            };
            let qm = rm.div(&step_m);
            if qm.degree() < lower {
                return None;
            }
            g.add_term(qm, rc / &step_c);
        }
        None
    }

    /// Terms grouped by the exponent of atom `a`.
    pub fn split_by_atom(&self, a: &Atom) -> BTreeMap<Frac, Poly> {
        let mut out: BTreeMap<Frac, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_atom(a);
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out
    }

    /// Terms grouped by the sub-monomial of atoms selected by `pred`.
    pub fn split_by(&self, pred: impl Fn(&Atom) -> bool) -> BTreeMap<Monomial, Poly> {
        let mut out: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (sel, rest) = m.partition(&pred);
            out.entry(sel).or_default().add_term(rest, c.clone());
        }
        out
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = self
            .terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(a, _)| a.clone()))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Monomial, &Coeff) -> Option<(Monomial, Coeff)>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if let Some((m2, c2)) = f(m, c) {
                out.add_term(m2, c2);
            }
        }
        out
    }
}

fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k % 2 == 0 {
            return None;
        }
        return int_root(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

fn rational_root(c: &Coeff, k: u32) -> Option<Coeff> {
    Some(Coeff::new(int_root(c.numer(), k)?, int_root(c.denom(), k)?))
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = super::ratfunc::Expr::from_poly_unchecked(self.clone());
        write!(f, "{}", super::render::render_text(&e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::atom(Atom::var("x"))
    }
    fn y() -> Poly {
        Poly::atom(Atom::var("y"))
    }
    fn k(n: i64) -> Poly {
        Poly::constant(Coeff::from_integer(n.into()))
    }

    #[test]
    fn exact_division_recovers_factor() {
        let a = x().add(&y());
        let b = x().sub(&k(2));
        let prod = a.mul_raw(&b);
        assert_eq!(prod.div_exact(&a), Some(b.clone()));
        assert_eq!(prod.div_exact(&b), Some(a));
    }

    #[test]
    fn inexact_division_is_rejected() {
        let a = x().add(&y());
        let b = x().add(&k(1));
        assert_eq!(a.div_exact(&b), None);
    }

    #[test]
    fn primitive_split_normalizes_sign_and_content() {
        let p = x().scale(&Coeff::new((-3).into(), 2.into())).add(&x().mul_raw(&y()).scale(&Coeff::from_integer(3.into())));
        let (c, m, q) = p.primitive_split();
        assert_eq!(m, Monomial::atom(Atom::var("x")));
        assert_eq!(c, Coeff::new((-3).into(), 2.into()));
        assert!(q.trailing().unwrap().1.is_positive());
        assert_eq!(q.mul_monomial(&m, &c), p);
    }
}
