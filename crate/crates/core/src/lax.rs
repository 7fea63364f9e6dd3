//! Lax pairs for the 2+1 Camassa-Holm hierarchy, their compatibility
//! conditions and the operators `J` and `K` of the hierarchy.

use std::collections::BTreeMap;

use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    instantiate, parse, reduce_fixpoint, sym, Atom, Coeff, Context, Equation, Expr, FnKind, Frac, KResult, KernelError,
    Monomial, MultiIndex, PdeSystem, Substitution, Sym,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaxError {
    #[error("hierarchy index must be at least 1, got {0}")]
    InvalidN(u32),
    #[error("elimination left the jet `{0}` in the compatibility residual")]
    SurvivingJet(String),
    #[error("{0} is not linear in the eigenfunction")]
    NotLinear(String),
    #[error("compatibility produced no equations")]
    Empty,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Spectral parameter of a Lax pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Spectral {
    /// Parameter field, e.g. `lam(y,t)` or `Lam(z2)`.
    Field(Sym),
    /// Constant parameter, e.g. `lam0`.
    Constant(Sym),
}

impl Spectral {
    pub fn atom(&self) -> Atom {
        match self {
            Spectral::Field(f) => Atom::Jet(f.clone(), MultiIndex::empty()),
            Spectral::Constant(c) => Atom::Param(c.clone()),
        }
    }

    pub fn name(&self) -> &Sym {
        match self {
            Spectral::Field(s) | Spectral::Constant(s) => s,
        }
    }

    fn is_derivative(&self, a: &Atom) -> bool {
        match (self, a) {
            (Spectral::Field(f), Atom::Jet(g, idx)) => f == g && !idx.is_empty(),
            _ => false,
        }
    }
}

/// First-order ODE for the spectral parameter, `f_v = rhs`.
#[derive(Clone, Debug)]
pub struct ParameterOde {
    pub function: Sym,
    pub var: Sym,
    pub rhs: Expr,
}

/// Pair of linear equations in an eigenfunction, `spatial = 0`, `temporal = 0`.
#[derive(Clone, Debug)]
pub struct LaxPair {
    pub n: u32,
    pub eigen: Sym,
    /// Variable of the second-order spatial equation.
    pub space: Sym,
    /// Variable whose first derivative is solved from the temporal equation.
    pub secondary: Sym,
    /// Remaining independent variables.
    pub others: Vec<Sym>,
    pub fields: Vec<Sym>,
    pub spectral: Spectral,
    pub ode: Option<ParameterOde>,
    pub spatial: Expr,
    pub temporal: Expr,
}

/// Symbols of the 2+1 problem for a given `n`.
pub fn ch_context(n: u32) -> Context {
    let mut c = Context::with_vars(&["x", "y", "t"]);
    c.add_function("psi", &["x", "y", "t"], FnKind::Field);
    c.add_function("lam", &["y", "t"], FnKind::Field);
    c.add_function("M", &["x", "y", "t"], FnKind::Field);
    for j in 1..=n {
        c.add_function(&format!("U{j}"), &["x", "y", "t"], FnKind::Field);
    }
    c.declare_nonzero("lam");
    c.declare_nonzero("M");
    c.declare_nonzero("psi");
    c
}

/// `sum_{j=1..n} p^(n-j+1) * F_j` for the spectral atom `p` and fields `F_j`.
pub fn weighted_sum(n: u32, spectral: &Expr, field: &dyn Fn(u32) -> KResult<Expr>) -> KResult<Expr> {
    let mut a = Expr::zero();
    for j in 1..=n {
        a = a.add(&spectral.pow_int((n - j + 1) as i64)?.mul(&field(j)?));
    }
    Ok(a)
}

/// The operator `A = sum_j lam^(n-j+1) U_j`.
pub fn a_hat(n: u32, ctx: &Context) -> KResult<Expr> {
    weighted_sum(n, &ctx.func("lam")?, &|j| ctx.func(&format!("U{j}")))
}

/// Lax pair of the hierarchy for a concrete `n`.
pub fn build_ch_lax(n: u32, ctx: &Context) -> Result<LaxPair, LaxError> {
    if n < 1 {
        return Err(LaxError::InvalidN(n));
    }
    let spatial = parse("psi_xx - (1/4 - lam*M/2)*psi", ctx)?;
    let a = a_hat(n, ctx)?;
    let a_x = ctx.diff(&a, "x")?;
    let psi = ctx.func("psi")?;
    let base = parse(&format!("psi_y - lam^{n}*psi_t"), ctx)?;
    let temporal = base
        .add(&a.mul(&ctx.diff(&psi, "x")?))
        .sub(&a_x.mul(&psi).scale(&crate::expr::Coeff::new(1.into(), 2.into())));
    let mut fields = vec![sym("M")];
    fields.extend((1..=n).map(|j| sym(&format!("U{j}"))));
    Ok(LaxPair {
        n,
        eigen: sym("psi"),
        space: sym("x"),
        secondary: sym("y"),
        others: vec![sym("t")],
        fields,
        spectral: Spectral::Field(sym("lam")),
        ode: None,
        spatial,
        temporal,
    })
}

/// Order in which the two eliminations are preferred.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Cross-differentiate the solved rules; secondary derivatives are eliminated first.
    CrossRules,
    /// Differentiate the equations themselves; second spatial derivatives are eliminated first.
    DirectDifference,
}

/// One coefficient group of the compatibility residual.
#[derive(Clone, Debug)]
pub struct ConstraintGroup {
    /// Surviving eigenfunction jet the group came from.
    pub jet: String,
    /// `spectral-derivatives` or the power of the spectral parameter.
    pub grade: String,
    pub raw: Expr,
    pub factor: Expr,
    pub equation: Equation,
    /// The residual equals the sum over groups of `scale * factor * equation`.
    pub scale: Expr,
}

/// Result of a compatibility computation.
#[derive(Clone, Debug)]
pub struct Compatibility {
    pub system: PdeSystem,
    pub groups: Vec<ConstraintGroup>,
    /// Fully reduced cross-derivative residual.
    pub residual: Expr,
}

struct Rules {
    rule_xx: Expr,
    rule_sec: Expr,
}

fn solved_rules(lp: &LaxPair) -> Result<Rules, LaxError> {
    let piv_xx = Atom::Jet(lp.eigen.clone(), MultiIndex::empty().with(&lp.space, 2));
    let piv_sec = Atom::Jet(lp.eigen.clone(), MultiIndex::empty().with(&lp.secondary, 1));
    let one = Frac::from(1);
    let a = lp.spatial.coeff(&piv_xx, one);
    let b = lp.temporal.coeff(&piv_sec, one);
    if a.is_zero() || b.is_zero() {
        return Err(LaxError::NotLinear("pivot jet is missing".into()));
    }
    let rest_s = lp.spatial.sub(&a.mul(&Expr::atom(piv_xx.clone())));
    let rest_t = lp.temporal.sub(&b.mul(&Expr::atom(piv_sec.clone())));
    if rest_s.contains_atom(&|x| *x == piv_xx) || rest_t.contains_atom(&|x| *x == piv_sec) {
        return Err(LaxError::NotLinear("pivot appears nonlinearly".into()));
    }
    Ok(Rules {
        rule_xx: rest_s.neg().div(&a)?,
        rule_sec: rest_t.neg().div(&b)?,
    })
}

fn reducer<'a>(
    lp: &'a LaxPair,
    ctx: &'a Context,
    rules: &'a Rules,
    schedule: Schedule,
) -> impl FnMut(&Atom) -> KResult<Option<Expr>> + 'a {
    move |a: &Atom| {
        let Atom::Jet(f, idx) = a else {
            return Ok(None);
        };
        if let Some(ode) = &lp.ode {
            if *f == ode.function {
                if let Some(rest) = idx.lowered(&ode.var) {
                    return Ok(Some(ctx.diff_many(&ode.rhs, &rest.expanded())?));
                }
            }
        }
        if *f != lp.eigen {
            return Ok(None);
        }
        let sec = idx.lowered(&lp.secondary);
        let xx = idx.lowered(&lp.space).and_then(|i| i.lowered(&lp.space));
        let (first, second) = match schedule {
            Schedule::CrossRules => ((sec, &rules.rule_sec), (xx, &rules.rule_xx)),
            Schedule::DirectDifference => ((xx, &rules.rule_xx), (sec, &rules.rule_sec)),
        };
        for (rest, rule) in [first, second] {
            if let Some(rest) = rest {
                return Ok(Some(ctx.diff_many(rule, &rest.expanded())?));
            }
        }
        Ok(None)
    }
}

fn reduce(e: &Expr, lp: &LaxPair, ctx: &Context, rules: &Rules, schedule: Schedule) -> KResult<Expr> {
    let mut r = reducer(lp, ctx, rules, schedule);
    reduce_fixpoint(e, &mut r, 64)
}

/// Cross-derivative residual of the pair, reduced modulo both equations and
/// the parameter ODE.
pub fn compatibility_residual(lp: &LaxPair, ctx: &Context, schedule: Schedule) -> Result<Expr, LaxError> {
    let rules = solved_rules(lp)?;
    let (x, y) = (&*lp.space, &*lp.secondary);
    let red = |e: &Expr| reduce(e, lp, ctx, &rules, schedule);
    match schedule {
        Schedule::CrossRules => {
            let lhs = red(&ctx.diff(&rules.rule_xx, y)?)?;
            let step = red(&ctx.diff(&rules.rule_sec, x)?)?;
            let rhs = red(&ctx.diff(&step, x)?)?;
            Ok(lhs.sub(&rhs))
        }
        Schedule::DirectDifference => {
            let piv_xx = Atom::Jet(lp.eigen.clone(), MultiIndex::empty().with(&lp.space, 2));
            let piv_sec = Atom::Jet(lp.eigen.clone(), MultiIndex::empty().with(&lp.secondary, 1));
            let a = lp.spatial.coeff(&piv_xx, Frac::from(1));
            let b = lp.temporal.coeff(&piv_sec, Frac::from(1));
            // Both normalized equations carry the mixed jet with unit
            // coefficient, so it cancels before any elimination.
            let s = lp.spatial.div(&a)?;
            let t = lp.temporal.div(&b)?;
            let t_xx = ctx.diff(&ctx.diff(&t, x)?, x)?;
            let s_y = ctx.diff(&s, y)?;
            Ok(red(&s_y.sub(&t_xx))?)
        }
    }
}

/// Compatibility conditions of `lp`, split by surviving eigenfunction jets and
/// then by grade in the spectral parameter.
///
/// Terms carrying derivatives of the spectral parameter form one group; the
/// remaining terms are graded by the power of the parameter itself.
pub fn compatibility(lp: &LaxPair, ctx: &Context, schedule: Schedule) -> Result<Compatibility, LaxError> {
    let residual = compatibility_residual(lp, ctx, schedule)?;
    let eigen = lp.eigen.clone();
    let by_jet = residual.collect(|a| a.is_jet_of(&eigen));
    let mut allowed: Vec<MultiIndex> = vec![MultiIndex::empty(), MultiIndex::empty().with(&lp.space, 1)];
    allowed.extend(lp.others.iter().map(|v| MultiIndex::empty().with(v, 1)));
    let mut system = PdeSystem::new();
    let mut groups = Vec::new();
    let spectral = lp.spectral.atom();
    for (mono, coeff) in by_jet {
        let jet = single_jet(&mono).ok_or_else(|| LaxError::SurvivingJet(mono_text(&mono)))?;
        if !allowed.contains(&jet) {
            return Err(LaxError::SurvivingJet(mono_text(&mono)));
        }
        let jet_name = mono_text(&mono);
        // Nonzero factors common to every grade are removed before grading.
        let (numer, outer) = match Equation::normalize(&coeff.numerator(), ctx) {
            Some(n) => (n.equation.lhs, n.factor.div(&coeff.denominator())?.mul(&Expr::monomial(mono.clone(), Coeff::one()))),
            None => continue,
        };
        let deriv = numer.collect(|a| lp.spectral.is_derivative(a));
        let mut plain = Expr::zero();
        let mut with_deriv = Expr::zero();
        for (m, part) in deriv {
            let term = part.mul(&Expr::monomial(m.clone(), Coeff::one()));
            if m.is_one() {
                plain = plain.add(&term);
            } else {
                with_deriv = with_deriv.add(&term);
            }
        }
        let mut parts: Vec<(String, Expr, Expr)> = Vec::new();
        if !with_deriv.is_zero() {
            parts.push(("spectral-derivatives".into(), with_deriv, Expr::one()));
        }
        let graded: BTreeMap<Frac, crate::expr::Poly> = plain.num().split_by_atom(&spectral);
        for (e, p) in graded.into_iter().rev() {
            let weight = Expr::monomial(Monomial::power(spectral.clone(), e), Coeff::one());
            parts.push((format!("{}^{}", lp.spectral.name(), e), Expr::from_poly(p), weight));
        }
        for (grade, raw, weight) in parts {
            if let Some(n) = Equation::normalize(&raw, ctx) {
                system.push(n.equation.clone());
                groups.push(ConstraintGroup {
                    jet: jet_name.clone(),
                    grade,
                    raw,
                    factor: n.factor,
                    equation: n.equation,
                    scale: outer.mul(&weight),
                });
            }
        }
    }
    if system.is_empty() {
        return Err(LaxError::Empty);
    }
    Ok(Compatibility {
        system,
        groups,
        residual,
    })
}

fn single_jet(m: &Monomial) -> Option<MultiIndex> {
    match m.factors() {
        [(Atom::Jet(_, idx), e)] if *e == Frac::from(1) => Some(idx.clone()),
        _ => None,
    }
}

fn mono_text(m: &Monomial) -> String {
    Expr::monomial(m.clone(), Coeff::one()).to_string()
}

/// `J f = f_x - f_xxx` along `var`.
pub fn apply_j(f: &Expr, ctx: &Context, var: &str) -> KResult<Expr> {
    let f1 = ctx.diff(f, var)?;
    let f3 = ctx.diff(&ctx.diff(&f1, var)?, var)?;
    Ok(f1.sub(&f3))
}

/// `K f = (m f)_x + m f_x` along `var`.
pub fn apply_k(f: &Expr, m: &Expr, ctx: &Context, var: &str) -> KResult<Expr> {
    let mf_x = ctx.diff(&m.mul(f), var)?;
    Ok(mf_x.add(&m.mul(&ctx.diff(f, var)?)))
}

/// Operator term of a chained hierarchy statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum OpTerm {
    /// Derivative of the momentum field along a variable, e.g. `M_y`.
    Derivative(Sym, Sym),
    J(Sym),
    K(Sym),
}

/// Statement `left = right` of the chained operator form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainStatement {
    pub left: OpTerm,
    pub right: OpTerm,
}

/// Hierarchy equations together with their operator form.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub n: u32,
    pub momentum: Sym,
    pub space: Sym,
    pub equations: PdeSystem,
    pub chained: Vec<ChainStatement>,
}

impl OpTerm {
    fn expand(&self, momentum: &Sym, space: &str, ctx: &Context) -> KResult<Expr> {
        match self {
            OpTerm::Derivative(f, v) => ctx.jet(f, &MultiIndex::empty().with(v, 1)),
            OpTerm::J(f) => apply_j(&ctx.func(f)?, ctx, space),
            OpTerm::K(f) => apply_k(&ctx.func(f)?, &ctx.func(momentum)?, ctx, space),
        }
    }
}

impl Hierarchy {
    /// Hierarchy of the 2+1 problem, written out explicitly.
    pub fn ch(n: u32, ctx: &Context) -> Result<Hierarchy, LaxError> {
        if n < 1 {
            return Err(LaxError::InvalidN(n));
        }
        let mut texts = vec![
            format!("M_y - U{n}_x + U{n}_xxx"),
            "M_t - U1*M_x - 2*M*U1_x".to_string(),
        ];
        for j in 2..=n {
            texts.push(instantiate(
                "U[j]*M_x + 2*M*U[j]_x - U[j-1]_x + U[j-1]_xxx",
                &[("j", j as i64)],
            )?);
        }
        let mut equations = PdeSystem::new();
        for t in texts {
            let e = parse(&t, ctx)?;
            if let Some(eq) = Equation::from_expr(&e, ctx) {
                equations.push(eq);
            }
        }
        let u = |j: u32| sym(&format!("U{j}"));
        let mut chained = vec![
            ChainStatement {
                left: OpTerm::Derivative(sym("M"), sym("y")),
                right: OpTerm::J(u(n)),
            },
            ChainStatement {
                left: OpTerm::Derivative(sym("M"), sym("t")),
                right: OpTerm::K(u(1)),
            },
        ];
        for j in 2..=n {
            chained.push(ChainStatement {
                left: OpTerm::K(u(j)),
                right: OpTerm::J(u(j - 1)),
            });
        }
        Ok(Hierarchy {
            n,
            momentum: sym("M"),
            space: sym("x"),
            equations,
            chained,
        })
    }

    /// Equations obtained by expanding the chained operator form.
    pub fn expand_chain(&self, ctx: &Context) -> KResult<PdeSystem> {
        let mut out = PdeSystem::new();
        for s in &self.chained {
            let l = s.left.expand(&self.momentum, &self.space, ctx)?;
            let r = s.right.expand(&self.momentum, &self.space, ctx)?;
            if let Some(eq) = Equation::from_expr(&l.sub(&r), ctx) {
                out.push(eq);
            }
        }
        Ok(out)
    }
}

/// True iff the operator statements `M_y = J U_n`, `M_t = K U_1` and
/// `K U_j = J U_(j-1)` reproduce `h.equations` after normalization.
pub fn check_recursion_form(h: &Hierarchy, ctx: &Context) -> KResult<bool> {
    let u = |j: u32| ctx.func(&format!("U{j}"));
    let m = ctx.func(&h.momentum)?;
    let x = &*h.space;
    let mut expected = PdeSystem::new();
    let mut push = |e: Expr| {
        if let Some(eq) = Equation::from_expr(&e, ctx) {
            expected.push(eq);
        }
    };
    push(ctx.diff(&m, "y")?.sub(&apply_j(&u(h.n)?, ctx, x)?));
    push(ctx.diff(&m, "t")?.sub(&apply_k(&u(1)?, &m, ctx, x)?));
    for j in 2..=h.n {
        push(apply_k(&u(j)?, &m, ctx, x)?.sub(&apply_j(&u(j - 1)?, ctx, x)?));
    }
    Ok(expected.same_as(&h.equations))
}

/// Flow direction used to collapse the 2+1 hierarchy to 1+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    /// `d/dy = d/dx`, the positive flow.
    YToX,
    /// `d/dy = d/dt`, the negative flow.
    YToT,
}

/// Identifies the `y` direction with `x` or `t` in every equation.
pub fn specialize_flow(system: &PdeSystem, flow: Flow, ctx: &Context) -> KResult<PdeSystem> {
    let to = match flow {
        Flow::YToX => "x",
        Flow::YToT => "t",
    };
    let s = Substitution::new().direction("y", to);
    let mut out = PdeSystem::new();
    for eq in &system.equations {
        let e = ctx.substitute(&eq.lhs, &s)?;
        if let Some(eq) = Equation::from_expr(&e, ctx) {
            out.push(eq);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(sys: &PdeSystem) -> Vec<String> {
        let mut v: Vec<String> = sys.equations.iter().map(|e| e.lhs.to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn temporal_equation_for_n1() {
        let ctx = ch_context(1);
        let lp = build_ch_lax(1, &ctx).unwrap();
        let expected = parse("psi_y - lam*psi_t + lam*U1*psi_x - lam/2*U1_x*psi", &ctx).unwrap();
        assert_eq!(lp.temporal, expected);
    }

    #[test]
    fn a_hat_for_n2() {
        let ctx = ch_context(2);
        assert_eq!(a_hat(2, &ctx).unwrap(), parse("lam^2*U1 + lam*U2", &ctx).unwrap());
    }

    #[test]
    fn n_zero_is_rejected() {
        let ctx = ch_context(1);
        assert_eq!(build_ch_lax(0, &ctx).unwrap_err(), LaxError::InvalidN(0));
    }

    #[test]
    fn compatibility_n1() {
        let ctx = ch_context(1);
        let lp = build_ch_lax(1, &ctx).unwrap();
        let c = compatibility(&lp, &ctx, Schedule::CrossRules).unwrap();
        assert_eq!(
            texts(&c.system),
            vec!["M_t - 2*M*U1_x - M_x*U1", "M_y - U1_x + U1_xxx", "lam_y - lam*lam_t"]
        );
    }

    #[test]
    fn schedules_agree() {
        for n in 1..=2 {
            let ctx = ch_context(n);
            let lp = build_ch_lax(n, &ctx).unwrap();
            let a = compatibility(&lp, &ctx, Schedule::CrossRules).unwrap();
            let b = compatibility(&lp, &ctx, Schedule::DirectDifference).unwrap();
            assert!(a.system.same_as(&b.system));
        }
    }

    #[test]
    fn compatibility_matches_hierarchy() {
        for n in 1..=3 {
            let ctx = ch_context(n);
            let lp = build_ch_lax(n, &ctx).unwrap();
            let c = compatibility(&lp, &ctx, Schedule::CrossRules).unwrap();
            let mut expected = Hierarchy::ch(n, &ctx).unwrap().equations;
            expected.push(Equation::from_expr(&parse(&format!("lam_y - lam^{n}*lam_t"), &ctx).unwrap(), &ctx).unwrap());
            assert!(c.system.same_as(&expected), "n={n}: {:?}", c.system.difference(&expected));
        }
    }

    #[test]
    fn zero_operator_gives_isolated_constraints() {
        let ctx = ch_context(1);
        let mut lp = build_ch_lax(1, &ctx).unwrap();
        lp.temporal = parse("psi_y - lam*psi_t", &ctx).unwrap();
        let c = compatibility(&lp, &ctx, Schedule::CrossRules).unwrap();
        assert_eq!(texts(&c.system), vec!["M_t", "M_y", "lam_y - lam*lam_t"]);
    }

    #[test]
    fn operators() {
        let ctx = ch_context(1);
        let u = ctx.func("U1").unwrap();
        let m = ctx.func("M").unwrap();
        assert_eq!(apply_j(&u, &ctx, "x").unwrap(), parse("U1_x - U1_xxx", &ctx).unwrap());
        assert_eq!(apply_k(&u, &m, &ctx, "x").unwrap(), parse("U1*M_x + 2*M*U1_x", &ctx).unwrap());
        assert!(apply_j(&Expr::zero(), &ctx, "x").unwrap().is_zero());
    }

    #[test]
    fn recursion_form_and_tampering() {
        for n in 1..=3 {
            let ctx = ch_context(n);
            let h = Hierarchy::ch(n, &ctx).unwrap();
            assert!(check_recursion_form(&h, &ctx).unwrap());
            assert!(h.expand_chain(&ctx).unwrap().same_as(&h.equations));
        }
        let ctx = ch_context(1);
        let mut h = Hierarchy::ch(1, &ctx).unwrap();
        h.equations.equations[0] = Equation::from_expr(&parse("M_y - U1_x - U1_xxx", &ctx).unwrap(), &ctx).unwrap();
        assert!(!check_recursion_form(&h, &ctx).unwrap());
    }

    #[test]
    fn flows() {
        let ctx = ch_context(1);
        let h = Hierarchy::ch(1, &ctx).unwrap();
        let pos = specialize_flow(&h.equations, Flow::YToX, &ctx).unwrap();
        assert_eq!(texts(&pos), vec!["M_t - 2*M*U1_x - M_x*U1", "M_x - U1_x + U1_xxx"]);
        let neg = specialize_flow(&h.equations, Flow::YToT, &ctx).unwrap();
        assert_eq!(texts(&neg), vec!["M_t - 2*M*U1_x - M_x*U1", "M_t - U1_x + U1_xxx"]);
        assert!(specialize_flow(&PdeSystem::new(), Flow::YToX, &ctx).unwrap().is_empty());
    }
}
