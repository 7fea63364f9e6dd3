//! Canonical expressions: a Laurent polynomial numerator over a product of
//! primitive polynomial denominator factors.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::atom::{Atom, Frac, Monomial};
use super::error::{KResult, KernelError};
use super::poly::{Coeff, Poly};

/// Canonical symbolic expression.
///
/// Invariants: radical atoms carry exponents in (0, 1); every denominator
/// factor is a primitive, radical-free polynomial with at least two terms;
/// no denominator factor divides the numerator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr {
    num: Poly,
    den: Vec<(Poly, u32)>,
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr {
            num: Poly::zero(),
            den: Vec::new(),
        }
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Self {
        Expr::rational(Coeff::from_integer(n.into()))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Expr::rational(Coeff::new(n.into(), d.into()))
    }

    pub fn rational(c: Coeff) -> Self {
        Expr {
            num: Poly::constant(c),
            den: Vec::new(),
        }
    }

    pub fn atom(a: Atom) -> Self {
        if a.is_radical() {
            return Expr::from_poly(Poly::atom(a));
        }
        Expr {
            num: Poly::atom(a),
            den: Vec::new(),
        }
    }

    pub fn var(name: &str) -> Self {
        Expr::atom(Atom::var(name))
    }

    pub fn param(name: &str) -> Self {
        Expr::atom(Atom::param(name))
    }

    pub fn monomial(m: Monomial, c: Coeff) -> Self {
        Expr::from_poly(Poly::term(m, c))
    }

    pub(crate) fn from_poly_unchecked(num: Poly) -> Self {
        Expr { num, den: Vec::new() }
    }

    /// Canonical form of a polynomial whose radical exponents may be out of range.
    pub fn from_poly(num: Poly) -> Self {
        if num.radicals_reduced() {
            return Expr { num, den: Vec::new() };
        }
        let mut fast = Poly::zero();
        let mut slow: Vec<Expr> = Vec::new();
        for (m, c) in num.into_terms() {
            if m.radicals_reduced() {
                fast.add_term(m, c);
                continue;
            }
            slow.push(reduce_radical_term(&m, &c));
        }
        let mut acc = Expr { num: fast, den: Vec::new() };
        for t in slow {
            acc = acc.add(&t);
        }
        acc
    }

    fn build(num: Poly, den: Vec<(Poly, u32)>) -> Self {
        let mut num = num;
        if num.is_zero() {
            return Expr::zero();
        }
        let mut out_den = Vec::with_capacity(den.len());
        for (f, mut k) in den {
            while k > 0 {
                match num.div_exact(&f) {
                    Some(q) => {
                        num = q;
                        k -= 1;
                    }
                    None => break,
                }
            }
            if k > 0 {
                out_den.push((f, k));
            }
        }
        Expr { num, den: out_den }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &[(Poly, u32)] {
        &self.den
    }

    /// Numerator as an expression with the denominator dropped.
    pub fn numerator(&self) -> Expr {
        Expr::from_poly_unchecked(self.num.clone())
    }

    /// Expanded denominator polynomial.
    pub fn den_poly(&self) -> Poly {
        let mut p = Poly::one();
        for (f, k) in &self.den {
            p = p.mul_raw(&f.pow_raw(*k));
        }
        p
    }

    pub fn denominator(&self) -> Expr {
        Expr::from_poly_unchecked(self.den_poly())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.is_one()
    }

    pub fn as_rational(&self) -> Option<Coeff> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn as_frac(&self) -> Option<Frac> {
        let c = self.as_rational()?;
        Some(Frac::new(c.numer().to_i64()?, c.denom().to_i64()?))
    }

    /// The single atom this expression consists of, if any.
    pub fn as_atom(&self) -> Option<&Atom> {
        if !self.den.is_empty() {
            return None;
        }
        let (m, c) = self.num.as_monomial()?;
        if !c.is_one() || m.factors().len() != 1 || !m.factors()[0].1.is_one() {
            return None;
        }
        Some(&m.factors()[0].0)
    }

    pub fn add(&self, o: &Expr) -> Expr {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return Expr::build(self.num.add(&o.num), self.den.clone());
        }
        let lcm = merge_den(&self.den, &o.den, |a, b| a.max(b));
        let na = self.num.mul_raw(&cofactor(&lcm, &self.den));
        let nb = o.num.mul_raw(&cofactor(&lcm, &o.den));
        Expr::build(na.add(&nb), lcm)
    }

    /// Sum of many terms; terms over the same denominator are added before
    /// any cancellation is attempted.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut groups: BTreeMap<Vec<(Poly, u32)>, Poly> = BTreeMap::new();
        for t in terms {
            if t.is_zero() {
                continue;
            }
            let slot = groups.entry(t.den).or_default();
            *slot = slot.add(&t.num);
        }
        let mut acc = Expr::zero();
        for (den, num) in groups {
            if den.is_empty() {
                acc = acc.add(&Expr { num, den });
            } else {
                acc = acc.add(&Expr::build(num, den));
            }
        }
        acc
    }

    pub fn neg(&self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &Coeff) -> Expr {
        if k.is_zero() {
            return Expr::zero();
        }
        Expr {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        if self.is_zero() || o.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = o.as_rational() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_rational() {
            return o.scale(&c);
        }
        let raw = self.num.mul_raw(&o.num);
        let n = Expr::from_poly(raw);
        let den = merge_den(&merge_den(&self.den, &o.den, |a, b| a + b), &n.den, |a, b| a + b);
        Expr::build(n.num, den)
    }

    pub fn inv(&self) -> KResult<Expr> {
        if self.is_zero() {
            return Err(KernelError::DivisionByZero);
        }
        let (c, m, n) = self.num.primitive_split();
        if n.has_radicals() {
            return Err(KernelError::Unsupported(format!(
                "radical sum in a denominator: {}",
                Expr::from_poly_unchecked(n)
            )));
        }
        let head = Expr::from_poly(Poly::term(m.inv(), c.recip()));
        let num = head.num.mul_raw(&self.den_poly());
        let mut den = head.den;
        if !n.is_one() {
            let factor = n.perfect_power().unwrap_or((n, 1));
            den = merge_den(&den, &[factor], |a, b| a + b);
        }
        Ok(Expr::build(num, den))
    }

    pub fn div(&self, o: &Expr) -> KResult<Expr> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow_int(&self, k: i64) -> KResult<Expr> {
        if k < 0 {
            return self.inv()?.pow_int(-k);
        }
        let mut base = self.clone();
        let mut e = k as u64;
        let mut acc = Expr::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// Rational power, taking principal branches for generic positive atoms.
    pub fn pow(&self, r: Frac) -> KResult<Expr> {
        if r.is_integer() {
            return self.pow_int(*r.numer());
        }
        if self.is_zero() {
            return if r > Frac::zero() {
                Ok(Expr::zero())
            } else {
                Err(KernelError::DivisionByZero)
            };
        }
        let (c, m, n) = self.num.primitive_split();
        let mut out = rational_pow(&c, r)?;
        out = out.mul(&Expr::from_poly(Poly::term(m.pow(r), Coeff::one())));
        out = out.mul(&root_pow(&n, r)?);
        for (f, k) in &self.den {
            out = out.mul(&root_pow(f, -r * Frac::from(*k as i64))?);
        }
        Ok(out)
    }

    /// General power; non-constant exponents go through `exp(e * log(b))`.
    pub fn pow_expr(&self, e: &Expr) -> KResult<Expr> {
        if let Some(c) = e.as_rational() {
            let r = Frac::new(
                c.numer().to_i64().ok_or_else(|| KernelError::ExponentOverflow(c.to_string()))?,
                c.denom().to_i64().ok_or_else(|| KernelError::ExponentOverflow(c.to_string()))?,
            );
            return self.pow(r);
        }
        Expr::exp(&e.mul(&Expr::log(self)?))
    }

    /// Exponential, splitting the argument into unit-coefficient monomials.
    pub fn exp(arg: &Expr) -> KResult<Expr> {
        let mut out = Expr::one();
        for (m, c) in arg.num.terms() {
            let r = coeff_to_frac(c)?;
            if arg.den.is_empty() && m.factors().len() == 1 && m.factors()[0].1.is_one() {
                if let Atom::Log(inner) = &m.factors()[0].0 {
                    out = out.mul(&inner.pow(r)?);
                    continue;
                }
            }
            let unit = Expr {
                num: Poly::term(m.clone(), Coeff::one()),
                den: arg.den.clone(),
            };
            let atom = Atom::Exp(Arc::new(unit));
            out = out.mul(&Expr::monomial(Monomial::power(atom, r), Coeff::one()));
        }
        Ok(out)
    }

    /// Logarithm, expanded over products, powers and rational constants.
    pub fn log(arg: &Expr) -> KResult<Expr> {
        if arg.is_zero() {
            return Err(KernelError::Unsupported("log(0)".into()));
        }
        let (c, m, n) = arg.num.primitive_split();
        let mut out = log_rational(&c)?;
        for (a, e) in m.factors() {
            let term = log_atom(a)?;
            out = out.add(&term.scale(&frac_to_coeff(*e)));
        }
        if !n.is_one() {
            out = out.add(&log_poly(n));
        }
        for (f, k) in &arg.den {
            out = out.sub(&log_poly(f.clone()).scale(&Coeff::from_integer((*k).into())));
        }
        Ok(out)
    }

    /// Atoms appearing at top level of numerator and denominator.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut v = self.num.atoms();
        for (f, _) in &self.den {
            v.extend(f.atoms());
        }
        v.sort();
        v.dedup();
        v
    }

    /// Variables, parameters and jets, including those nested in exp, log and roots.
    pub fn base_atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        collect_base_atoms(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    pub fn contains_atom(&self, pred: &dyn Fn(&Atom) -> bool) -> bool {
        self.atoms().iter().any(pred)
    }

    /// Coefficient of `a^e` in the numerator, over the same denominator.
    pub fn coeff(&self, a: &Atom, e: Frac) -> Expr {
        let part = self.num.split_by_atom(a).remove(&e).unwrap_or_default();
        Expr::build(part, self.den.clone())
    }

    /// Numerator grouped by the sub-monomial of atoms selected by `pred`,
    /// each group carried over the common denominator.
    pub fn collect(&self, pred: impl Fn(&Atom) -> bool) -> BTreeMap<Monomial, Expr> {
        self.num
            .split_by(pred)
            .into_iter()
            .map(|(m, p)| (m, Expr::build(p, self.den.clone())))
            .collect()
    }

    /// Multiplies by a polynomial known to be free of radicals beyond range.
    pub fn with_den(num: Poly, den: Vec<(Poly, u32)>) -> Expr {
        Expr::build(num, den)
    }
}

fn collect_base_atoms(e: &Expr, out: &mut Vec<Atom>) {
    for a in e.atoms() {
        match &a {
            Atom::Var(_) | Atom::Param(_) | Atom::Jet(..) => out.push(a.clone()),
            Atom::Exp(arg) | Atom::Log(arg) => collect_base_atoms(arg, out),
            Atom::Root(p) => collect_base_atoms(&Expr::from_poly_unchecked((**p).clone()), out),
            Atom::Surd(_) => {}
        }
    }
}

pub(crate) fn coeff_to_frac(c: &Coeff) -> KResult<Frac> {
    match (c.numer().to_i64(), c.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Frac::new(n, d)),
        _ => Err(KernelError::ExponentOverflow(c.to_string())),
    }
}

pub(crate) fn frac_to_coeff(f: Frac) -> Coeff {
    Coeff::new((*f.numer()).into(), (*f.denom()).into())
}

fn merge_den(a: &[(Poly, u32)], b: &[(Poly, u32)], op: impl Fn(u32, u32) -> u32) -> Vec<(Poly, u32)> {
    let mut map: BTreeMap<Poly, (u32, u32)> = BTreeMap::new();
    for (f, k) in a {
        map.entry(f.clone()).or_default().0 += k;
    }
    for (f, k) in b {
        map.entry(f.clone()).or_default().1 += k;
    }
    map.into_iter()
        .map(|(f, (x, y))| (f, op(x, y)))
        .filter(|(_, k)| *k > 0)
        .collect()
}

fn cofactor(lcm: &[(Poly, u32)], den: &[(Poly, u32)]) -> Poly {
    let mut p = Poly::one();
    for (f, k) in lcm {
        let have = den.iter().find(|(g, _)| g == f).map(|(_, j)| *j).unwrap_or(0);
        if *k > have {
            p = p.mul_raw(&f.pow_raw(k - have));
        }
    }
    p
}

/// Brings radical exponents of a single term into (0, 1).
fn reduce_radical_term(m: &Monomial, c: &Coeff) -> Expr {
    let mut keep = Vec::new();
    let mut coeff = c.clone();
    let mut num_mult = Poly::one();
    let mut den: Vec<(Poly, u32)> = Vec::new();
    for (a, e) in m.factors() {
        if !a.is_radical() {
            keep.push((a.clone(), *e));
            continue;
        }
        let k = e.floor().to_integer();
        let r = *e - Frac::from(k);
        if !r.is_zero() {
            keep.push((a.clone(), r));
        }
        match a {
            Atom::Surd(s) => {
                let base = Coeff::from_integer(s.clone());
                coeff *= pow_coeff(&base, k);
            }
            Atom::Root(p) => {
                if k > 0 {
                    num_mult = num_mult.mul_raw(&p.pow_raw(k as u32));
                } else if k < 0 {
                    den.push(((**p).clone(), (-k) as u32));
                }
            }
            _ => unreachable!(),
        }
    }
    let num = Poly::term(Monomial::from_factors(keep), coeff).mul_raw(&num_mult);
    Expr::build(num, merge_den(&den, &[], |a, b| a + b))
}

fn pow_coeff(b: &Coeff, k: i64) -> Coeff {
    if k >= 0 {
        num_traits::pow(b.clone(), k as usize)
    } else {
        num_traits::pow(b.recip(), (-k) as usize)
    }
}

/// Factorization of a positive integer by trial division; an unfactored
/// remainder is reported as if prime.
pub(crate) fn factor_integer(n: &BigInt) -> Vec<(BigInt, i64)> {
    let mut out = Vec::new();
    let mut n = n.clone();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(100_000);
    while &p * &p <= n && p <= limit {
        let mut k = 0;
        while (&n % &p).is_zero() {
            n /= &p;
            k += 1;
        }
        if k > 0 {
            out.push((p.clone(), k));
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

fn rational_pow(c: &Coeff, r: Frac) -> KResult<Expr> {
    let mut out = Expr::one();
    if c.is_negative() {
        out = out.mul(&Expr::from_poly(Poly::term(
            Monomial::power(Atom::Surd(BigInt::from(-1)), r),
            Coeff::one(),
        )));
    }
    let a = c.abs();
    let mut factors = Vec::new();
    for (p, k) in factor_integer(a.numer()) {
        factors.push((Atom::Surd(p), r * Frac::from(k)));
    }
    for (p, k) in factor_integer(a.denom()) {
        factors.push((Atom::Surd(p), -r * Frac::from(k)));
    }
    Ok(out.mul(&Expr::from_poly(Poly::term(Monomial::from_factors(factors), Coeff::one()))))
}

fn root_pow(p: &Poly, r: Frac) -> KResult<Expr> {
    if p.is_one() || r.is_zero() {
        return Ok(Expr::one());
    }
    if r.is_integer() {
        return Expr::from_poly(p.clone()).pow_int(*r.numer());
    }
    if p.has_radicals() {
        return Err(KernelError::Unsupported(format!(
            "fractional power of a sum containing radicals: {}",
            Expr::from_poly_unchecked(p.clone())
        )));
    }
    Ok(Expr::from_poly(Poly::term(
        Monomial::power(Atom::Root(Arc::new(p.clone())), r),
        Coeff::one(),
    )))
}

fn log_rational(c: &Coeff) -> KResult<Expr> {
    if c.is_negative() {
        return Err(KernelError::Unsupported(format!("log of negative constant {c}")));
    }
    let mut out = Expr::zero();
    for (p, k) in factor_integer(c.numer()) {
        out = out.add(&prime_log(p).scale(&Coeff::from_integer(k.into())));
    }
    for (p, k) in factor_integer(c.denom()) {
        out = out.sub(&prime_log(p).scale(&Coeff::from_integer(k.into())));
    }
    Ok(out)
}

fn prime_log(p: BigInt) -> Expr {
    Expr::atom(Atom::Log(Arc::new(Expr::rational(Coeff::from_integer(p)))))
}

fn log_poly(p: Poly) -> Expr {
    Expr::atom(Atom::Log(Arc::new(Expr::from_poly_unchecked(p))))
}

fn log_atom(a: &Atom) -> KResult<Expr> {
    Ok(match a {
        Atom::Var(_) | Atom::Param(_) | Atom::Jet(..) | Atom::Log(_) => {
            Expr::atom(Atom::Log(Arc::new(Expr::atom(a.clone()))))
        }
        Atom::Exp(arg) => (**arg).clone(),
        Atom::Root(p) => log_poly((**p).clone()),
        Atom::Surd(s) => {
            if s.is_negative() {
                return Err(KernelError::Unsupported("log of a negative surd".into()));
            }
            prime_log(s.clone())
        }
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::render::render_text(self))
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        Expr::add(self, o)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        Expr::sub(self, o)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        Expr::mul(self, o)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }
    fn y() -> Expr {
        Expr::var("y")
    }

    #[test]
    fn rational_function_cancels() {
        let a = x().add(&y());
        let q = a.mul(&x()).div(&a).unwrap();
        assert_eq!(q, x());
    }

    #[test]
    fn sum_of_fractions_has_common_denominator() {
        let one = Expr::one();
        let a = one.div(&x().add(&one)).unwrap();
        let b = one.div(&x().sub(&one)).unwrap();
        let s = a.add(&b);
        let expected = x().scale(&Coeff::from_integer(2.into())).div(&x().mul(&x()).sub(&one)).unwrap();
        assert!(s.sub(&expected).is_zero());
    }

    #[test]
    fn square_root_squares_back() {
        let s = x().add(&Expr::one()).pow(Frac::new(1, 2)).unwrap();
        assert_eq!(s.mul(&s), x().add(&Expr::one()));
        let two = Expr::int(2).pow(Frac::new(1, 2)).unwrap();
        assert_eq!(two.mul(&two), Expr::int(2));
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one() {
        let i = Expr::int(-1).pow(Frac::new(1, 2)).unwrap();
        assert_eq!(i.mul(&i), Expr::int(-1));
    }

    #[test]
    fn exp_and_log_are_inverse() {
        let e = Expr::exp(&Expr::log(&x()).unwrap().scale(&Coeff::new(1.into(), 2.into()))).unwrap();
        assert_eq!(e, x().pow(Frac::new(1, 2)).unwrap());
        let l = Expr::log(&Expr::exp(&x()).unwrap()).unwrap();
        assert_eq!(l, x());
    }

    #[test]
    fn exp_of_sum_is_product() {
        let a = Expr::exp(&x().add(&y())).unwrap();
        let b = Expr::exp(&x()).unwrap().mul(&Expr::exp(&y()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(Expr::zero().inv(), Err(KernelError::DivisionByZero));
    }

    #[test]
    fn negative_radical_exponent_moves_to_denominator() {
        let s = x().add(&Expr::one());
        let r = s.pow(Frac::new(-1, 2)).unwrap();
        assert_eq!(r.den().len(), 1);
        assert_eq!(r.mul(&s.pow(Frac::new(1, 2)).unwrap()), Expr::one());
    }
}
