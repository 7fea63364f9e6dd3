//! Similarity reductions of the 2+1 Lax pair: registered reduction maps,
//! their certification against the generating symmetry, pull-back to 1+1
//! spectral problems and the reduced hierarchies.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{
    parse, partial, reduce_fixpoint, render_latex, render_text, sym, Atom, Chain, Context, Equation, Expr, FnKind, Frac, KResult,
    KernelError, MultiIndex, PdeSystem, Substitution,
};
use crate::lax::{build_ch_lax, ch_context, compatibility, Hierarchy, LaxError, LaxPair, ParameterOde, Schedule, Spectral};
use crate::symmetry::{family_xi1, family_xi2, family_xi3, symmetry_context, SideConstraint, SymmetryCandidate};

const VARS: [&str; 3] = ["x", "y", "t"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("case {0} has a constant spectral parameter")]
    ConstantParameter(String),
    #[error("relation is not solvable for {0}")]
    Unsolvable(String),
    #[error("cofactor of the {0} equation vanishes identically")]
    ZeroCofactor(String),
    #[error("case {0} has no reduced spectral problem")]
    NoReducedPair(String),
    #[error(transparent)]
    Lax(#[from] LaxError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

type RResult<T> = Result<T, ReductionError>;

/// `name = value`, with `value` in the text grammar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedExpr {
    pub name: String,
    pub value: String,
}

fn named(name: &str, value: impl Into<String>) -> NamedExpr {
    NamedExpr {
        name: name.into(),
        value: value.into(),
    }
}

/// Symmetry family generating a reduction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Xi3,
    Xi2,
    Xi1 { sign: i64, constrained: bool },
}

/// Auxiliary given function (antiderivative) with its known first derivatives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxFunction {
    pub name: String,
    pub deps: Vec<String>,
    /// `(variable, derivative)` pairs.
    pub rules: Vec<NamedExpr>,
}

/// Definition `name := d(of)/d(var)` computed by the engine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSymbol {
    pub name: String,
    pub of: String,
    pub var: String,
}

/// How the spectral parameter is reduced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterRelation {
    /// `lam = factor * symbol` with a constant `symbol`.
    Constant { symbol: String, factor: String },
    /// `lam = factor * symbol(deps)`, optionally with `symbol_z2 = ode`.
    Field {
        symbol: String,
        deps: Vec<String>,
        factor: String,
        ode: Option<String>,
    },
}

impl ParameterRelation {
    pub fn symbol(&self) -> &str {
        match self {
            ParameterRelation::Constant { symbol, .. } | ParameterRelation::Field { symbol, .. } => symbol,
        }
    }

    pub fn factor(&self) -> &str {
        match self {
            ParameterRelation::Constant { factor, .. } | ParameterRelation::Field { factor, .. } => factor,
        }
    }

    pub fn ode(&self) -> Option<&str> {
        match self {
            ParameterRelation::Field { ode, .. } => ode.as_deref(),
            ParameterRelation::Constant { .. } => None,
        }
    }
}

/// `field = prefactor * reduced + shift`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMap {
    pub field: String,
    pub prefactor: String,
    pub reduced: String,
    pub shift: String,
}

/// Opaque function of the reduced variables standing for `value` in the
/// original variables (e.g. `E` written as a function of `z2`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedAlias {
    pub name: String,
    pub deps: Vec<String>,
    pub value: String,
}

/// Reduction of the 2+1 problem to the variables `z1, z2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionMap {
    pub id: String,
    pub n: u32,
    pub family: Family,
    /// Parameters and arbitrary functions of the family fixed by the case.
    pub specialization: Vec<NamedExpr>,
    /// Abbreviations in the original variables, overriding the defaults.
    pub definitions: Vec<NamedExpr>,
    pub derived: Vec<DerivedSymbol>,
    pub aux: Vec<AuxFunction>,
    pub z: [String; 2],
    /// `jacobian[k][i] = d z_k / d (x, y, t)[i]`.
    pub jacobian: [[String; 3]; 2],
    pub parameter: ParameterRelation,
    /// Prefactor `p` of `psi = p * Phi`.
    pub psi: String,
    pub fields: Vec<FieldMap>,
    pub aliases: Vec<ReducedAlias>,
    /// Constants of the map expressed through the original fields, used
    /// only when the invariants are formed.
    pub invariant_bindings: Vec<NamedExpr>,
    /// Parameters assumed nonzero.
    pub nonzero: Vec<String>,
    pub assumptions: Vec<String>,
}

/// Reduced spectral problem and hierarchy as registered for a case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedReduction {
    pub spatial: String,
    pub temporal: String,
    pub hierarchy: Vec<String>,
    /// Polynomial factors of the reduced problem assumed nonzero.
    pub nonzero_factors: Vec<String>,
    pub autonomous: bool,
    pub notes: Vec<String>,
}

/// Registry entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub map: ReductionMap,
    pub expected: Option<ExpectedReduction>,
}

fn is_field(ctx: &Context, f: &str) -> bool {
    ctx.function(f).map(|s| s.kind == FnKind::Field).unwrap_or(false)
}

fn reduced_field_names(n: u32) -> Vec<String> {
    let mut v = vec!["H".to_string()];
    v.extend((1..=n).map(|j| format!("V{j}")));
    v
}

impl ReductionMap {
    fn add_reduced_symbols(&self, c: &mut Context) {
        c.add_function("Phi", &["z1", "z2"], FnKind::Field);
        for f in reduced_field_names(self.n) {
            c.add_function(&f, &["z1", "z2"], FnKind::Field);
        }
        if let ParameterRelation::Field { symbol, deps, .. } = &self.parameter {
            let d: Vec<&str> = deps.iter().map(|s| s.as_str()).collect();
            c.add_function(symbol, &d, FnKind::Field);
        }
        for a in &self.aliases {
            let d: Vec<&str> = a.deps.iter().map(|s| s.as_str()).collect();
            c.add_function(&a.name, &d, FnKind::Given);
        }
        c.declare_nonzero("Phi");
        c.declare_nonzero("H");
        c.declare_nonzero(self.parameter.symbol());
        for a in &self.aliases {
            c.declare_nonzero(&a.name);
        }
        for p in &self.nonzero {
            c.declare_nonzero(p);
        }
    }

    /// Symbols of the original problem together with the reduced ones.
    pub fn old_context(&self) -> KResult<Context> {
        let mut c = symmetry_context(self.n)?;
        c.add_var("z1");
        c.add_var("z2");
        for a in &self.aux {
            let d: Vec<&str> = a.deps.iter().map(|s| s.as_str()).collect();
            c.add_function(&a.name, &d, FnKind::Given);
        }
        for d in &self.definitions {
            let e = parse(&d.value, &c)?;
            c.define(&d.name, e);
        }
        for d in &self.derived {
            let e = parse(&d.of, &c)?;
            let de = c.diff(&e, &d.var)?;
            c.define(&d.name, de);
        }
        for a in &self.aux {
            for r in &a.rules {
                let e = parse(&r.value, &c)?;
                c.add_rule(&a.name, &r.name, e)?;
            }
        }
        self.add_reduced_symbols(&mut c);
        Ok(c)
    }

    /// Symbols of the reduced problem in `z1, z2`.
    pub fn reduced_context(&self) -> Context {
        let mut c = Context::with_vars(&["z1", "z2"]);
        self.add_reduced_symbols(&mut c);
        c
    }

    pub fn chain(&self, ctx: &Context) -> KResult<Chain> {
        let mut ch = Chain::new();
        for (k, row) in self.jacobian.iter().enumerate() {
            let z = sym(&format!("z{}", k + 1));
            for (i, v) in VARS.iter().enumerate() {
                ch.set(&z, &sym(v), parse(&row[i], ctx)?);
            }
        }
        Ok(ch)
    }

    /// Generating symmetry with the case specialization applied.
    pub fn candidate(&self) -> KResult<SymmetryCandidate> {
        let base = symmetry_context(self.n)?;
        let c = match &self.family {
            Family::Xi3 => family_xi3(self.n, &base)?,
            Family::Xi2 => family_xi2(self.n, &base)?,
            Family::Xi1 { sign, constrained } => family_xi1(self.n, *sign, *constrained, &base)?,
        };
        let mut s = Substitution::new();
        for b in &self.specialization {
            let v = parse(&b.value, &base)?;
            s = if base.function(&b.name).is_some() {
                s.function(&b.name, v)
            } else {
                s.symbol(&b.name, v)
            };
        }
        let f = |e: &Expr| base.substitute(e, &s);
        Ok(SymmetryCandidate {
            name: format!("{} ({})", c.name, self.id),
            n: c.n,
            mode: c.mode,
            xi: [f(&c.xi[0])?, f(&c.xi[1])?, f(&c.xi[2])?],
            phi1: f(&c.phi1)?,
            phi2: f(&c.phi2)?,
            theta0: f(&c.theta0)?,
            theta: c.theta.iter().map(f).collect::<KResult<_>>()?,
            side: c
                .side
                .iter()
                .map(|sc| {
                    Ok(SideConstraint {
                        field: sc.field.clone(),
                        var: sc.var.clone(),
                        rhs: f(&sc.rhs)?,
                    })
                })
                .collect::<KResult<_>>()?,
            assumptions: c.assumptions.clone(),
        })
    }

    fn parameter_value(&self, ctx: &Context) -> KResult<Expr> {
        let factor = parse(self.parameter.factor(), ctx)?;
        Ok(factor.mul(&parse(self.parameter.symbol(), ctx)?))
    }

    /// Bindings `psi = p Phi`, `lam = g Lam`, `M = m H + ...` through the Jacobian.
    pub fn substitution(&self, ctx: &Context) -> KResult<Substitution> {
        let mut s = Substitution::new().with_chain(self.chain(ctx)?);
        s = s.function("psi", parse(&format!("({})*Phi", self.psi), ctx)?);
        s = s.function("lam", self.parameter_value(ctx)?);
        for f in &self.fields {
            let e = parse(&format!("({})*({}) + ({})", f.prefactor, f.reduced, f.shift), ctx)?;
            s = s.function(&f.field, e);
        }
        Ok(s)
    }

    /// Replaces `z1, z2` by their definitions and aliases by their values.
    pub fn to_original(&self, e: &Expr, ctx: &Context) -> KResult<Expr> {
        let mut s = Substitution::new();
        for (k, z) in self.z.iter().enumerate() {
            s = s.symbol(&format!("z{}", k + 1), parse(z, ctx)?);
        }
        for a in &self.aliases {
            s = s.function(&a.name, parse(&a.value, ctx)?);
        }
        ctx.substitute(e, &s)
    }

    /// Eliminates derivatives of the reduced parameter along `z2` with the ODE.
    pub fn apply_ode(&self, e: &Expr, ctx: &Context) -> KResult<Expr> {
        let Some(ode) = self.parameter.ode() else {
            return Ok(e.clone());
        };
        let rhs = parse(ode, ctx)?;
        let name = self.parameter.symbol();
        let z2 = sym("z2");
        let mut rule = |a: &Atom| -> KResult<Option<Expr>> {
            match a {
                Atom::Jet(f, idx) if &**f == name => match idx.lowered(&z2) {
                    Some(rest) => Ok(Some(ctx.diff_many(&rhs, &rest.expanded())?)),
                    None => Ok(None),
                },
                _ => Ok(None),
            }
        };
        reduce_fixpoint(e, &mut rule, 32)
    }

    fn finish(&self, e: &Expr, ctx: &Context) -> KResult<Expr> {
        let e = self.apply_ode(e, ctx)?;
        self.to_original(&e, ctx)
    }

    /// Invariants of the map in the original variables, labelled.
    pub fn invariants(&self, ctx: &Context) -> KResult<Vec<(String, Expr)>> {
        let mut s = Substitution::new();
        for (k, z) in self.z.iter().enumerate() {
            s = s.symbol(&format!("z{}", k + 1), parse(z, ctx)?);
        }
        let lam = ctx.func("lam")?;
        let factor = parse(self.parameter.factor(), ctx)?;
        let reduced_param = lam.div(&ctx.substitute(&factor, &s)?)?;
        match &self.parameter {
            ParameterRelation::Constant { symbol, .. } => s = s.symbol(symbol, reduced_param.clone()),
            ParameterRelation::Field { symbol, .. } => s = s.function(symbol, reduced_param.clone()),
        }
        for b in &self.invariant_bindings {
            s = s.symbol(&b.name, parse(&b.value, ctx)?);
        }
        let mut out = Vec::new();
        for (k, z) in self.z.iter().enumerate() {
            out.push((format!("z{}", k + 1), parse(z, ctx)?));
        }
        out.push((format!("lam/({})", self.parameter.factor()), reduced_param));
        let p = ctx.substitute(&parse(&self.psi, ctx)?, &s)?;
        out.push(("psi/p".into(), ctx.func("psi")?.div(&p)?));
        for f in &self.fields {
            let pref = ctx.substitute(&parse(&f.prefactor, ctx)?, &s)?;
            let shift = ctx.substitute(&parse(&f.shift, ctx)?, &s)?;
            out.push((format!("{} invariant", f.field), ctx.func(&f.field)?.sub(&shift).div(&pref)?));
        }
        Ok(out)
    }
}

/// Pass/fail outcome of one verification stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub passed: bool,
    /// Rendered residuals (or the error) on failure.
    pub residuals: Vec<String>,
    pub notes: Vec<String>,
    /// Wall-clock time; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl StageOutcome {
    pub fn from_residuals(stage: &str, residuals: Vec<String>) -> StageOutcome {
        StageOutcome {
            stage: stage.into(),
            passed: residuals.is_empty(),
            residuals,
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn failed(stage: &str, msg: String) -> StageOutcome {
        StageOutcome {
            stage: stage.into(),
            passed: false,
            residuals: vec![msg],
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn with_notes(mut self, notes: Vec<String>) -> StageOutcome {
        self.notes = notes;
        self
    }
}

/// Consistency of the Jacobian table with the definitions of `z1, z2` and
/// commutation of its mixed partials.
pub fn jacobian_closure(map: &ReductionMap) -> RResult<StageOutcome> {
    let ctx = map.old_context()?;
    let mut res = Vec::new();
    for (k, row) in map.jacobian.iter().enumerate() {
        let z = parse(&map.z[k], &ctx)?;
        let entries: Vec<Expr> = row.iter().map(|s| parse(s, &ctx)).collect::<KResult<_>>()?;
        for (i, v) in VARS.iter().enumerate() {
            let r = ctx.diff(&z, v)?.sub(&entries[i]);
            if !r.is_zero() {
                res.push(format!("dz{}/d{v}: {}", k + 1, render_text(&r)));
            }
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let r = ctx.diff(&entries[a], VARS[b])?.sub(&ctx.diff(&entries[b], VARS[a])?);
                if !r.is_zero() {
                    res.push(format!("z{} mixed {}{}: {}", k + 1, VARS[a], VARS[b], render_text(&r)));
                }
            }
        }
    }
    Ok(StageOutcome::from_residuals("jacobian closure", res))
}

/// Action of the vector field of `c` (without prolongation) on `e`.
pub fn apply_field(c: &SymmetryCandidate, e: &Expr, ctx: &Context) -> KResult<Expr> {
    let fields = |f: &str| is_field(ctx, f);
    let mut out = Expr::zero();
    for (k, v) in VARS.iter().enumerate() {
        if !c.xi[k].is_zero() {
            out = out.add(&c.xi[k].mul(&ctx.diff_frozen(e, v, &fields)?));
        }
    }
    for a in e.base_atoms() {
        if let Atom::Jet(f, idx) = &a {
            if idx.is_empty() {
                if let Some(q) = c.field_coefficient(f) {
                    if !q.is_zero() {
                        out = out.add(&q.mul(&partial(e, &a)?));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Every invariant of the map is annihilated by the generating symmetry.
pub fn invariance_check(map: &ReductionMap, c: &SymmetryCandidate) -> RResult<StageOutcome> {
    let ctx = map.old_context()?;
    let mut res = Vec::new();
    for (label, inv) in map.invariants(&ctx)? {
        let r = apply_field(c, &inv, &ctx)?;
        if !r.is_zero() {
            res.push(format!("X({label}) = {}", render_text(&r)));
        }
    }
    Ok(StageOutcome::from_residuals("invariance", res))
}

/// Result of pulling the Lax pair back through a reduction map.
#[derive(Clone, Debug)]
pub struct PullBack {
    /// Substituted equations in the original variables.
    pub substituted: [Expr; 2],
    /// Expected reduced equations, mapped to the original variables.
    pub expected: [Expr; 2],
    pub cofactors: [Expr; 2],
    pub residuals: [Expr; 2],
}

impl PullBack {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.is_zero())
    }
}

/// Substitutes the map into `lp` and matches each equation against the
/// expected reduced one up to a cofactor read off a pivot jet.
pub fn pull_back(map: &ReductionMap, lp: &LaxPair, expected: [&str; 2]) -> RResult<PullBack> {
    let ctx = map.old_context()?;
    let s = map.substitution(&ctx)?;
    let one = Frac::from(1);
    let pivots = [
        Atom::Jet(sym("Phi"), MultiIndex::empty().with(&sym("z1"), 2)),
        Atom::Jet(sym("Phi"), MultiIndex::empty().with(&sym("z2"), 1)),
    ];
    let names = ["spatial", "temporal"];
    let mut substituted = [Expr::zero(), Expr::zero()];
    let mut mapped = [Expr::zero(), Expr::zero()];
    let mut cofactors = [Expr::zero(), Expr::zero()];
    let mut residuals = [Expr::zero(), Expr::zero()];
    for (k, eq) in [&lp.spatial, &lp.temporal].into_iter().enumerate() {
        let sub = map.finish(&ctx.substitute(eq, &s)?, &ctx)?;
        let exp = map.finish(&parse(expected[k], &ctx)?, &ctx)?;
        let b = exp.coeff(&pivots[k], one);
        if b.is_zero() {
            return Err(ReductionError::Unsolvable(format!("{} pivot of the expected equation", names[k])));
        }
        let c = sub.coeff(&pivots[k], one).div(&b)?;
        if c.is_zero() {
            return Err(ReductionError::ZeroCofactor(names[k].into()));
        }
        residuals[k] = sub.sub(&c.mul(&exp));
        substituted[k] = sub;
        mapped[k] = exp;
        cofactors[k] = c;
    }
    Ok(PullBack {
        substituted,
        expected: mapped,
        cofactors,
        residuals,
    })
}

/// Non-isospectral condition after the parameter relation, solved for the
/// `z2`-derivative of the reduced parameter and mapped to the original
/// variables, together with the registered ODE in the same variables.
pub fn reduced_nonisospectral(map: &ReductionMap) -> RResult<(Expr, Expr)> {
    let ParameterRelation::Field { symbol, ode, .. } = &map.parameter else {
        return Err(ReductionError::ConstantParameter(map.id.clone()));
    };
    let Some(ode) = ode else {
        return Err(ReductionError::Unsolvable(format!("{symbol}_z2 (no ODE registered)")));
    };
    let ctx = map.old_context()?;
    let niso = parse(&format!("lam_y - lam^{}*lam_t", map.n), &ctx)?;
    let s = Substitution::new()
        .with_chain(map.chain(&ctx)?)
        .function("lam", map.parameter_value(&ctx)?);
    let e = ctx.substitute(&niso, &s)?;
    let pivot = Atom::Jet(sym(symbol), MultiIndex::empty().with(&sym("z2"), 1));
    let a = e.coeff(&pivot, Frac::from(1));
    let rest = e.sub(&a.mul(&Expr::atom(pivot.clone())));
    if a.is_zero() || rest.contains_atom(&|x| *x == pivot) {
        return Err(ReductionError::Unsolvable(format!("{symbol}_z2")));
    }
    let solved = map.to_original(&rest.neg().div(&a)?, &ctx)?;
    let stated = map.to_original(&parse(ode, &ctx)?, &ctx)?;
    Ok((solved, stated))
}

/// True iff the registered ODE is the one forced by the non-isospectral
/// condition.
pub fn reduced_nonisospectral_check(map: &ReductionMap) -> RResult<bool> {
    let (solved, stated) = reduced_nonisospectral(map)?;
    Ok(solved.sub(&stated).is_zero())
}

/// The non-isospectral condition after a constant parameter relation.
pub fn constant_parameter_residual(map: &ReductionMap) -> RResult<Expr> {
    let ctx = map.old_context()?;
    let niso = parse(&format!("lam_y - lam^{}*lam_t", map.n), &ctx)?;
    let s = Substitution::new()
        .with_chain(map.chain(&ctx)?)
        .function("lam", map.parameter_value(&ctx)?);
    Ok(map.to_original(&ctx.substitute(&niso, &s)?, &ctx)?)
}

/// Reduced Lax pair of a case in the variables `z1, z2`.
pub fn reduced_lax_pair(map: &ReductionMap, expected: &ExpectedReduction, ctx: &Context) -> RResult<LaxPair> {
    let spectral = match &map.parameter {
        ParameterRelation::Constant { symbol, .. } => Spectral::Constant(sym(symbol)),
        ParameterRelation::Field { symbol, .. } => Spectral::Field(sym(symbol)),
    };
    let ode = match map.parameter.ode() {
        Some(o) => Some(ParameterOde {
            function: sym(map.parameter.symbol()),
            var: sym("z2"),
            rhs: parse(o, ctx)?,
        }),
        None => None,
    };
    Ok(LaxPair {
        n: map.n,
        eigen: sym("Phi"),
        space: sym("z1"),
        secondary: sym("z2"),
        others: Vec::new(),
        fields: reduced_field_names(map.n).iter().map(|s| sym(s)).collect(),
        spectral,
        ode,
        spatial: parse(&expected.spatial, ctx)?,
        temporal: parse(&expected.temporal, ctx)?,
    })
}

fn reduced_latex(map: &ReductionMap, exp: &ExpectedReduction, sys: &PdeSystem) -> RResult<ReducedLatex> {
    let ctx = reduced_context(map, exp)?;
    let lp = reduced_lax_pair(map, exp, &ctx)?;
    let ode = match &lp.ode {
        Some(o) => {
            let lhs = ctx.jet(&o.function, &MultiIndex::empty().with(&o.var, 1))?;
            Some(format!("{} = {}", render_latex(&lhs), render_latex(&o.rhs)))
        }
        None => None,
    };
    Ok(ReducedLatex {
        spatial: format!("{} = 0", render_latex(&lp.spatial)),
        temporal: format!("{} = 0", render_latex(&lp.temporal)),
        ode,
        hierarchy: sys.as_set().iter().map(|e| e.render(crate::expr::Syntax::Latex)).collect(),
    })
}

/// Context of the reduced problem with the expected nonzero factors declared.
pub fn reduced_context(map: &ReductionMap, expected: &ExpectedReduction) -> RResult<Context> {
    let mut ctx = map.reduced_context();
    for f in &expected.nonzero_factors {
        let p = parse(f, &ctx)?;
        ctx.declare_nonzero_factor(p.num().clone());
    }
    Ok(ctx)
}

/// Compatibility conditions of the reduced pair, with the parameter ODE
/// used before grading.
pub fn reduced_compatibility(map: &ReductionMap, expected: &ExpectedReduction) -> RResult<PdeSystem> {
    let ctx = reduced_context(map, expected)?;
    let lp = reduced_lax_pair(map, expected, &ctx)?;
    Ok(compatibility(&lp, &ctx, Schedule::CrossRules)?.system)
}

/// Registered hierarchy as a normalized system.
pub fn expected_hierarchy(map: &ReductionMap, expected: &ExpectedReduction) -> RResult<PdeSystem> {
    let ctx = reduced_context(map, expected)?;
    let mut sys = PdeSystem::new();
    for h in &expected.hierarchy {
        if let Some(eq) = Equation::from_expr(&parse(h, &ctx)?, &ctx) {
            sys.push(eq);
        }
    }
    Ok(sys)
}

/// A system is autonomous when no equation contains an independent variable
/// or a given function explicitly.
pub fn is_autonomous(system: &PdeSystem, ctx: &Context) -> bool {
    !system.as_set().iter().any(|eq| {
        eq.lhs.contains_atom(&|a| match a {
            Atom::Var(_) => true,
            Atom::Jet(f, _) => ctx.function(f).map(|s| s.kind == FnKind::Given).unwrap_or(false),
            _ => false,
        })
    })
}

/// Reduced spectral problems of II.k coincide with those of I.k.
pub fn appendix_equivalence(k: u32, n: u32) -> RResult<bool> {
    Ok(appendix_pull_back(k, n, false)?.passed())
}

/// Pull-back of II.k against the registered reduced pair of I.k; `mutate`
/// drops the square-root factor from the eigenfunction prefactor.
pub fn appendix_pull_back(k: u32, n: u32, mutate: bool) -> RResult<PullBack> {
    let reference = find_case(&format!("I.{k}"), n)?;
    let mut case = find_case(&format!("II.{k}"), n)?;
    if mutate {
        case.map.psi = case.map.psi.replace("*(exp(x)*Q)^(1/2)", "");
    }
    let exp = reference.expected.ok_or_else(|| ReductionError::NoReducedPair(reference.map.id.clone()))?;
    let ctx = case.map.old_context()?;
    let lp = build_ch_lax(n, &ctx)?;
    pull_back(&case.map, &lp, [&exp.spatial, &exp.temporal])
}

/// Substitution of the stationary solution `M = H0 exp(-2x)`,
/// `U_j = exp(x) V_j(y, t)` into the hierarchy; returns the nonzero
/// residuals. With `mutate`, `H0` is replaced by a function of `t`.
pub fn section6_residuals(n: u32, mutate: bool) -> RResult<Vec<(String, Expr)>> {
    let mut ctx = ch_context(n);
    ctx.add_var("z1");
    ctx.add_var("z2");
    for j in 1..=n {
        ctx.add_function(&format!("V{j}"), &["z1", "z2"], FnKind::Field);
    }
    ctx.add_function("H0t", &["t"], FnKind::Given);
    let mut chain = Chain::new();
    for (z, v) in [("z1", "y"), ("z2", "t")] {
        for w in VARS {
            chain.set(&sym(z), &sym(w), if v == w { Expr::one() } else { Expr::zero() });
        }
    }
    let h0 = if mutate { "H0t" } else { "H0" };
    let mut s = Substitution::new()
        .with_chain(chain)
        .function("M", parse(&format!("{h0}*exp(-2*x)"), &ctx)?);
    for j in 1..=n {
        s = s.function(&format!("U{j}"), parse(&format!("exp(x)*V{j}"), &ctx)?);
    }
    let back = Substitution::new()
        .symbol("z1", Expr::var("y"))
        .symbol("z2", Expr::var("t"));
    let h = Hierarchy::ch(n, &ctx)?;
    let mut out = Vec::new();
    for eq in h.equations.as_set() {
        let r = ctx.substitute(&ctx.substitute(&eq.lhs, &s)?, &back)?;
        out.push((eq.render(crate::expr::Syntax::Text), r));
    }
    Ok(out)
}

/// Stage outcome of the stationary-solution check.
pub fn verify_section6(n: u32, mutate: bool) -> RResult<StageOutcome> {
    let res = section6_residuals(n, mutate)?
        .into_iter()
        .filter(|(_, r)| !r.is_zero())
        .map(|(eq, r)| format!("{eq}: {}", render_text(&r)))
        .collect();
    Ok(StageOutcome::from_residuals("stationary solution", res))
}

/// Residuals of the reversal `(x, y, t) -> (-x, -y, -t)` with every field
/// unchanged: the spatial equation must be invariant, while the temporal
/// equation and the non-isospectral condition must change sign. This is the
/// symmetry relating the type II and type III reductions.
pub fn reversal_residuals(n: u32) -> RResult<Vec<(String, Expr)>> {
    let mut ctx = ch_context(n);
    let new = ["X", "Y", "T"];
    for v in new {
        ctx.add_var(v);
    }
    let chain = |sign: i64| {
        let mut ch = Chain::new();
        for (k, z) in new.iter().enumerate() {
            for (i, v) in VARS.iter().enumerate() {
                ch.set(&sym(z), &sym(v), Expr::int(if i == k { sign } else { 0 }));
            }
        }
        ch
    };
    let fields: Vec<(String, Vec<&str>)> = ctx
        .functions()
        .map(|f| {
            let deps = f.deps.iter().map(|d| new[VARS.iter().position(|v| *v == &**d).unwrap_or(0)]).collect();
            (f.name.to_string(), deps)
        })
        .collect();
    let mut reversed = Substitution::new().with_chain(chain(-1));
    let mut renamed = Substitution::new().with_chain(chain(1));
    for (f, deps) in &fields {
        let r = format!("{f}R");
        ctx.add_function(&r, deps, FnKind::Field);
        let e = parse(&r, &ctx)?;
        reversed = reversed.function(f, e.clone());
        renamed = renamed.function(f, e);
    }
    let lp = build_ch_lax(n, &ctx)?;
    let niso = parse(&format!("lam_y - lam^{n}*lam_t"), &ctx)?;
    let mut out = Vec::new();
    for (name, e, sign) in [("spatial", &lp.spatial, 1), ("temporal", &lp.temporal, -1), ("non-isospectral", &niso, -1)] {
        let a = ctx.substitute(e, &reversed)?;
        let b = ctx.substitute(e, &renamed)?;
        out.push((name.to_string(), a.sub(&Expr::int(sign).mul(&b))));
    }
    Ok(out)
}

/// Stage outcome of the reversal spot check.
pub fn verify_reversal(n: u32) -> RResult<StageOutcome> {
    let res = reversal_residuals(n)?
        .into_iter()
        .filter(|(_, r)| !r.is_zero())
        .map(|(eq, r)| format!("{eq}: {}", render_text(&r)))
        .collect();
    Ok(StageOutcome::from_residuals("reversal symmetry", res))
}

/// Reduced objects reported for a case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedOutput {
    pub spatial: String,
    pub temporal: String,
    pub ode: Option<String>,
    pub hierarchy: Vec<String>,
    pub autonomous: bool,
    /// LaTeX of the spatial and temporal problems, the ODE and the hierarchy.
    pub latex: ReducedLatex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedLatex {
    pub spatial: String,
    pub temporal: String,
    pub ode: Option<String>,
    pub hierarchy: Vec<String>,
}

/// Stage-by-stage verification of one case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseReport {
    pub id: String,
    pub n: u32,
    pub passed: bool,
    pub stages: Vec<StageOutcome>,
    pub cofactors: Vec<String>,
    pub assumptions: Vec<String>,
    pub reduced: Option<ReducedOutput>,
    pub notes: Vec<String>,
}

fn run_stage(stage: &str, f: impl FnOnce() -> RResult<StageOutcome>) -> StageOutcome {
    let start = Instant::now();
    let mut out = match f() {
        Ok(s) => s,
        Err(e) => StageOutcome::failed(stage, e.to_string()),
    };
    out.elapsed = start.elapsed();
    out
}

/// Runs every applicable stage for `case`; internal errors become failed stages.
pub fn verify_case(case: &CaseSpec) -> CaseReport {
    let map = &case.map;
    let mut stages = Vec::new();
    let mut cofactors = Vec::new();
    let mut reduced = None;
    let mut notes = Vec::new();
    stages.push(run_stage("jacobian closure", || jacobian_closure(map)));
    stages.push(run_stage("invariance", || invariance_check(map, &map.candidate()?)));
    match &case.expected {
        None => {
            stages.push(run_stage("stationary solution", || verify_section6(map.n, false)));
        }
        Some(exp) => {
            notes.extend(exp.notes.iter().cloned());
            stages.push(run_stage("pull-back", || {
                let ctx = map.old_context()?;
                let lp = build_ch_lax(map.n, &ctx)?;
                let pb = pull_back(map, &lp, [&exp.spatial, &exp.temporal])?;
                cofactors = pb.cofactors.iter().map(render_text).collect();
                let res = ["spatial", "temporal"]
                    .iter()
                    .zip(pb.residuals.iter())
                    .filter(|(_, r)| !r.is_zero())
                    .map(|(k, r)| format!("{k}: {}", render_text(r)))
                    .collect();
                Ok(StageOutcome::from_residuals("pull-back", res))
            }));
            stages.push(run_stage("parameter relation", || match &map.parameter {
                ParameterRelation::Constant { .. } => {
                    let r = constant_parameter_residual(map)?;
                    let res = if r.is_zero() { vec![] } else { vec![render_text(&r)] };
                    Ok(StageOutcome::from_residuals("parameter relation", res)
                        .with_notes(vec!["constant spectral parameter".into()]))
                }
                ParameterRelation::Field { .. } => {
                    let (solved, stated) = reduced_nonisospectral(map)?;
                    let r = solved.sub(&stated);
                    let res = if r.is_zero() {
                        vec![]
                    } else {
                        vec![format!("solved {} vs stated {}", render_text(&solved), render_text(&stated))]
                    };
                    Ok(StageOutcome::from_residuals("parameter relation", res))
                }
            }));
            let mut derived = None;
            stages.push(run_stage("reduced hierarchy", || {
                let got = reduced_compatibility(map, exp)?;
                let want = expected_hierarchy(map, exp)?;
                let (extra, missing) = got.difference(&want);
                let mut res: Vec<String> = extra
                    .iter()
                    .map(|e| format!("unexpected: {}", e.render(crate::expr::Syntax::Text)))
                    .collect();
                res.extend(
                    missing
                        .iter()
                        .map(|e| format!("missing: {}", e.render(crate::expr::Syntax::Text))),
                );
                derived = Some(got);
                Ok(StageOutcome::from_residuals("reduced hierarchy", res))
            }));
            if let Some(sys) = derived {
                let ctx = map.reduced_context();
                let auto = is_autonomous(&sys, &ctx);
                let res = if auto == exp.autonomous {
                    vec![]
                } else {
                    vec![format!("classified autonomous = {auto}, registered {}", exp.autonomous)]
                };
                stages.push(
                    StageOutcome::from_residuals("autonomy", res).with_notes(vec![if auto {
                        "autonomous".into()
                    } else {
                        "non-autonomous".into()
                    }]),
                );
                reduced = Some(ReducedOutput {
                    spatial: exp.spatial.clone(),
                    temporal: exp.temporal.clone(),
                    ode: map.parameter.ode().map(str::to_string),
                    hierarchy: sys
                        .as_set()
                        .iter()
                        .map(|e| e.render(crate::expr::Syntax::Text))
                        .collect(),
                    autonomous: auto,
                    latex: reduced_latex(map, exp, &sys).unwrap_or_else(|e| ReducedLatex {
                        spatial: format!("\\text{{{e}}}"),
                        temporal: String::new(),
                        ode: None,
                        hierarchy: Vec::new(),
                    }),
                });
            }
        }
    }
    CaseReport {
        id: map.id.clone(),
        n: map.n,
        passed: stages.iter().all(|s| s.passed),
        stages,
        cofactors,
        assumptions: map.assumptions.clone(),
        reduced,
        notes,
    }
}

/// Looks up a registered case.
pub fn find_case(id: &str, n: u32) -> RResult<CaseSpec> {
    case_registry(n)
        .into_iter()
        .find(|c| c.map.id == id)
        .ok_or_else(|| ReductionError::UnknownCase(id.into()))
}

/// Verifies a registered case by id.
pub fn verify_case_id(id: &str, n: u32) -> RResult<CaseReport> {
    Ok(verify_case(&find_case(id, n)?))
}

/// JSON document of a list of cases.
pub fn export_cases(cases: &[CaseSpec]) -> String {
    serde_json::to_string_pretty(cases).expect("case specs serialize")
}

pub fn import_cases(doc: &str) -> Result<Vec<CaseSpec>, serde_json::Error> {
    serde_json::from_str(doc)
}

/// Identifiers of all registered cases, in registry order.
pub fn case_ids() -> Vec<String> {
    let mut v = Vec::new();
    for t in ["I", "II"] {
        for k in 1..=5 {
            v.push(format!("{t}.{k}"));
        }
    }
    for k in 1..=4 {
        v.push(format!("IV.{k}"));
    }
    v.push("VI".into());
    v
}

/// All registered cases instantiated for `n`.
pub fn case_registry(n: u32) -> Vec<CaseSpec> {
    let mut v = Vec::new();
    for k in 1..=5 {
        v.push(xi3_case(k, n, false));
    }
    for k in 1..=5 {
        v.push(xi3_case(k, n, true));
    }
    for k in 1..=4 {
        v.push(xi2_case(k, n));
    }
    v.push(stationary_case(n));
    v
}

fn weighted(n: u32, s: &str, f: &dyn Fn(u32) -> String) -> String {
    (1..=n)
        .map(|j| format!("{s}^{}*{}", n - j + 1, f(j)))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn field_maps(n: u32, m: &str, u: &dyn Fn(u32) -> String, shift: &str) -> Vec<FieldMap> {
    let mut v = vec![FieldMap {
        field: "M".into(),
        prefactor: m.into(),
        reduced: "H".into(),
        shift: "0".into(),
    }];
    for j in 1..=n {
        v.push(FieldMap {
            field: format!("U{j}"),
            prefactor: u(j),
            reduced: format!("V{j}"),
            shift: if j == 1 { shift.into() } else { "0".into() },
        });
    }
    v
}

/// Cases I.k (`primitive = false`) and II.k (`primitive = true`) of the
/// `xi3 = 1` family.
fn xi3_case(k: u32, n: u32, primitive: bool) -> CaseSpec {
    let s3 = if k <= 2 { "b3" } else { "S3" };
    let mut specialization = match k {
        1 => vec![named("a2", "0"), named("a3", "0"), named("b2", "0")],
        2 => vec![named("a2", "0"), named("a3", "0")],
        3 => vec![named("a2", "0"), named("b2", "0")],
        4 => vec![named("a2", "0")],
        _ => vec![],
    };
    let (aux, z1, jz1, shift) = if primitive {
        specialization.extend([named("A1", "0"), named("C1", "0")]);
        (
            AuxFunction {
                name: "Q".into(),
                deps: vec!["x".into(), "t".into()],
                rules: vec![named("x", "-exp(-x)"), named("t", format!("B1/{s3}"))],
            },
            "-log(Q)",
            [
                "exp(-x)/Q".to_string(),
                "0".into(),
                format!("-B1/({s3}*Q)"),
            ],
            format!("-B1*exp(x)/{s3}"),
        )
    } else {
        specialization.extend([named("B1", "0"), named("C1", "0")]);
        (
            AuxFunction {
                name: "P".into(),
                deps: vec!["t".into()],
                rules: vec![named("t", format!("A1/{s3}"))],
            },
            "x - P",
            ["1".to_string(), "0".into(), format!("-A1/{s3}")],
            format!("-A1/{s3}"),
        )
    };
    let (z2, jz2): (&str, [&str; 3]) = match k {
        1 => ("y", ["0", "1", "0"]),
        2 => ("y/b2 - t/b3", ["0", "1/b2", "-1/b3"]),
        3 => ("a3*y", ["0", "a3", "0"]),
        4 => ("a3*y/b2 - log(S3)", ["0", "a3/b2", "-a3/S3"]),
        _ => ("S2*S3^(-a2/a3)", ["0", "a2*S3^(-a2/a3)", "-a2*S2*S3^(-a2/a3 - 1)"]),
    };
    let parameter = match k {
        1 => ParameterRelation::Constant {
            symbol: "lam0".into(),
            factor: "1".into(),
        },
        2 => ParameterRelation::Constant {
            symbol: "lam0".into(),
            factor: format!("(b3/b2)^(1/{n})"),
        },
        _ => ParameterRelation::Field {
            symbol: "Lam".into(),
            deps: vec!["z2".into()],
            factor: match k {
                3 => format!("S3^(1/{n})"),
                4 => format!("(S3/b2)^(1/{n})"),
                _ => format!("S3^((a3 - a2)/(a3*{n}))"),
            },
            ode: Some(match k {
                3 => format!("Lam^{}/{n}", n + 1),
                4 => format!("Lam^{}/({n}*(1 + Lam^{n}))", n + 1),
                _ => format!("(a3 - a2)/a2*Lam^{}/({n}*(1 + z2*Lam^{n}))", n + 1),
            }),
        },
    };
    let lam_name = if k <= 2 { "lam0" } else { "Lam" };
    let mut psi = match k {
        1 => format!("exp(a0*t/b3)*exp(lam0^{n}*a0*z2/b3)"),
        2 => format!("exp(a0*t/b3)*exp(lam0^{n}*a0*z2/(1 + lam0^{n}))"),
        3 | 4 => format!("Lam^({n}*a0/a3)*S3^(a0/a3)"),
        _ => format!("Lam^({n}*a0/(a3 - a2))*S3^(a0/a3)"),
    };
    let mut m = match k {
        1 => "1".to_string(),
        2 => format!("(b2/b3)^(1/{n})"),
        3 => format!("S3^(-1/{n})"),
        4 => format!("(b2/S3)^(1/{n})"),
        _ => format!("S3^((a2 - a3)/(a3*{n}))"),
    };
    let u = move |j: u32| -> String {
        let base = match k {
            1 => "1".to_string(),
            2 => format!("1/b3*(b2/b3)^({}/{n})", 1 - j as i64),
            3 => format!("a3*S3^({}/{n} - 1)", j as i64 - 1),
            4 => format!("a3/S3*(S3/b2)^({}/{n})", j as i64 - 1),
            _ => format!("a2/S3*S3^((a3 - a2)*{}/(a3*{n}))", j as i64 - 1),
        };
        if primitive {
            format!("({base})*exp(x)*Q")
        } else {
            base
        }
    };
    if primitive {
        psi = format!("{psi}*(exp(x)*Q)^(1/2)");
        m = format!("({m})/(exp(x)*Q)^2");
    }
    let fac = match k {
        2 => format!("(1 + lam0^{n})"),
        4 => format!("(1 + Lam^{n})"),
        5 => format!("(1 + z2*Lam^{n})"),
        _ => "1".into(),
    };
    let b = weighted(n, lam_name, &|j| format!("V{j}"));
    let bz = weighted(n, lam_name, &|j| format!("V{j}_z1"));
    let extra = match k {
        2 => " + H_z2".to_string(),
        3 => format!(" + H/{n}"),
        4 => format!(" + H/{n} + H_z2"),
        5 => format!(" + (a3 - a2)/a2*H/{n} + z2*H_z2"),
        _ => String::new(),
    };
    let mut hierarchy = vec![
        format!("V{n}_z1z1z1 - V{n}_z1 + H_z2"),
        format!("2*H*V1_z1 + V1*H_z1{extra}"),
    ];
    for j in 1..n {
        hierarchy.push(format!(
            "2*H*V{0}_z1 + V{0}*H_z1 + V{j}_z1z1z1 - V{j}_z1",
            j + 1
        ));
    }
    let nonzero_factors = match k {
        2 => vec![format!("1 + lam0^{n}")],
        4 => vec![format!("1 + Lam^{n}")],
        5 => vec![format!("1 + z2*Lam^{n}")],
        _ => vec![],
    };
    let nonzero: Vec<String> = match k {
        1 => vec!["b3"],
        2 => vec!["b2", "b3"],
        3 => vec!["a3"],
        4 => vec!["a3", "b2"],
        _ => vec!["a2", "a3"],
    }
    .into_iter()
    .map(String::from)
    .collect();
    let tag = if primitive { "II" } else { "I" };
    let mut assumptions: Vec<String> = nonzero.iter().map(|p| format!("{p} != 0")).collect();
    if k >= 3 {
        assumptions.push("S3 > 0".into());
    }
    if k == 5 {
        assumptions.push("a3 != a2".into());
    }
    if primitive {
        assumptions.push("Q = exp(-x) + integral of B1/S3 dt is positive".into());
    }
    CaseSpec {
        map: ReductionMap {
            id: format!("{tag}.{k}"),
            n,
            family: Family::Xi3,
            specialization,
            definitions: vec![],
            derived: vec![],
            aux: vec![aux],
            z: [z1.into(), z2.into()],
            jacobian: [jz1, jz2.map(String::from)],
            parameter,
            psi,
            fields: field_maps(n, &m, &u, &shift),
            aliases: vec![],
            invariant_bindings: vec![],
            nonzero,
            assumptions,
        },
        expected: Some(ExpectedReduction {
            spatial: format!("Phi_z1z1 - (1/4 - {lam_name}/2*H)*Phi"),
            temporal: format!("{fac}*Phi_z2 + ({b})*Phi_z1 - ({bz})/2*Phi"),
            hierarchy,
            nonzero_factors,
            autonomous: k != 5,
            notes: vec![],
        }),
    }
}

/// Cases IV.k of the `xi2 = 1` family.
fn xi2_case(k: u32, n: u32) -> CaseSpec {
    let degenerate = k == 1 || k == 3;
    let static_y = k <= 2;
    let mut specialization = Vec::new();
    if static_y {
        specialization.push(named("a2", "0"));
    }
    let mut definitions = Vec::new();
    let mut derived = Vec::new();
    let mut aux = vec![AuxFunction {
        name: "W".into(),
        deps: vec!["x".into(), "t".into()],
        rules: vec![named("x", "1/S1")],
    }];
    if degenerate {
        specialization.push(named("C1", "A1^2/(4*B1)"));
        definitions.push(named("S1", "A1 + B1*exp(x) + A1^2/(4*B1)*exp(-x)"));
    } else {
        definitions.push(named("E", "(A1^2 - 4*B1*C1)^(1/2)"));
        derived.push(DerivedSymbol {
            name: "Et".into(),
            of: "E".into(),
            var: "t".into(),
        });
        aux.push(AuxFunction {
            name: "PE".into(),
            deps: vec!["t".into()],
            rules: vec![named("t", "E")],
        });
    }
    let w = if static_y { "W - y/b2" } else { "W - log(S2)/a2" };
    let wy = if static_y { "-1/b2" } else { "-1/S2" };
    let (z1, jz1) = if degenerate {
        (w.to_string(), ["1/S1".to_string(), wy.into(), "W_t".into()])
    } else {
        (
            format!("E*({w})"),
            [
                "E/S1".to_string(),
                format!("E*({wy})"),
                format!("Et*({w}) + E*W_t"),
            ],
        )
    };
    let (z2, jz2): (&str, [&str; 3]) = match k {
        1 => ("t/b2", ["0", "0", "1/b2"]),
        2 => ("PE/b2", ["0", "0", "E/b2"]),
        3 => ("t", ["0", "0", "1"]),
        _ => ("PE", ["0", "0", "E"]),
    };
    let parameter = if static_y {
        ParameterRelation::Constant {
            symbol: "lam0".into(),
            factor: "1".into(),
        }
    } else {
        ParameterRelation::Field {
            symbol: "Lam".into(),
            deps: vec!["z2".into()],
            factor: format!("S2^(-1/{n})"),
            ode: Some(if k == 3 {
                format!("-a2*Lam^(1 - {n})/{n}")
            } else {
                format!("-a2*Lam^(1 - {n})/({n}*Ez)")
            }),
        }
    };
    let lam_name = if static_y { "lam0" } else { "Lam" };
    let root = if degenerate { "S1^(1/2)" } else { "(S1/E)^(1/2)" };
    let psi = if static_y {
        format!("{root}*exp(a0*y/b2)*exp(a0*t/(b2*lam0^{n}))")
    } else {
        format!("{root}*(S2^(-1/{n})*Lam)^(-a0*{n}/a2)")
    };
    let m = match k {
        1 => "1/S1^2".to_string(),
        2 => "E^2/S1^2".into(),
        3 => format!("S2^(1/{n})/S1^2"),
        _ => format!("E^2*S2^(1/{n})/S1^2"),
    };
    let u = move |j: u32| -> String {
        if static_y {
            "S1/b2".into()
        } else {
            format!("S1*S2^({}/{n})", 1 - j as i64)
        }
    };
    let shift = if degenerate { "S1*W_t" } else { "S1*W_t + S1*Et*z1/E^2" };
    let quarter = if degenerate { "" } else { " - 1/4" };
    let b = weighted(n, lam_name, &|j| format!("V{j}"));
    let bz = weighted(n, lam_name, &|j| format!("V{j}_z1"));
    let first = match k {
        1 => format!("V{n}_z1z1z1 - H_z1"),
        2 => format!("V{n}_z1z1z1 - V{n}_z1 - H_z1"),
        3 => format!("V{n}_z1z1z1 - H_z1 + a2/{n}*H"),
        _ => format!("V{n}_z1z1z1 - V{n}_z1 - H_z1 + a2/({n}*Ez)*H"),
    };
    let mut hierarchy = vec![first, "2*H*V1_z1 + V1*H_z1 - H_z2".into()];
    for j in 1..n {
        let tail = if degenerate { String::new() } else { format!(" - V{j}_z1") };
        hierarchy.push(format!("2*H*V{0}_z1 + V{0}*H_z1 + V{j}_z1z1z1{tail}", j + 1));
    }
    let mut nonzero: Vec<String> = vec!["b2".into()];
    if degenerate {
        nonzero.push("B1".into());
    }
    if !static_y {
        nonzero = vec!["a2".into()];
        if degenerate {
            nonzero.push("B1".into());
        }
    }
    let mut assumptions: Vec<String> = nonzero.iter().map(|p| format!("{p} != 0")).collect();
    assumptions.push("S1 > 0".into());
    if !static_y {
        assumptions.push("S2 > 0".into());
    }
    if degenerate {
        assumptions.push("E = 0 through C1 = A1^2/(4*B1)".into());
    } else {
        assumptions.push("E = (A1^2 - 4*B1*C1)^(1/2) is nonzero".into());
    }
    let mut aliases = Vec::new();
    let mut notes = Vec::new();
    if k == 4 {
        aliases.push(ReducedAlias {
            name: "Ez".into(),
            deps: vec!["z2".into()],
            value: "E".into(),
        });
        assumptions.push("z2 = PE(t) is invertible and Ez(z2) = E(t)".into());
        notes.push("first hierarchy equation registered without the stray '+' printed before '= 0'".into());
    }
    CaseSpec {
        map: ReductionMap {
            id: format!("IV.{k}"),
            n,
            family: Family::Xi2,
            specialization,
            definitions,
            derived,
            aux,
            z: [z1, z2.into()],
            jacobian: [jz1, jz2.map(String::from)],
            parameter,
            psi,
            fields: field_maps(n, &m, &u, shift),
            aliases,
            invariant_bindings: vec![],
            nonzero,
            assumptions,
        },
        expected: Some(ExpectedReduction {
            spatial: format!("Phi_z1z1 + ({lam_name}/2*H{quarter})*Phi"),
            temporal: format!("{lam_name}^{n}*Phi_z2 - ({b} - 1)*Phi_z1 + ({bz})/2*Phi"),
            hierarchy,
            nonzero_factors: vec![],
            autonomous: k != 4,
            notes,
        }),
    }
}

/// Case VI of the `xi1 = 1` family with the stationary momentum.
fn stationary_case(n: u32) -> CaseSpec {
    CaseSpec {
        map: ReductionMap {
            id: "VI".into(),
            n,
            family: Family::Xi1 {
                sign: 1,
                constrained: true,
            },
            specialization: vec![],
            definitions: vec![],
            derived: vec![],
            aux: vec![],
            z: ["y".into(), "t".into()],
            jacobian: [
                ["0".into(), "1".into(), "0".into()],
                ["0".into(), "0".into(), "1".into()],
            ],
            parameter: ParameterRelation::Field {
                symbol: "Lam".into(),
                deps: vec!["z1".into(), "z2".into()],
                factor: "1".into(),
                ode: None,
            },
            psi: "exp(x/2)*exp(-(-1)^(1/2)*2^(1/2)*Lam^(1/2)*H0^(1/2)*exp(-x)/2)".into(),
            fields: field_maps(n, "exp(-2*x)", &|_| "exp(x)".into(), "0"),
            aliases: vec![],
            invariant_bindings: vec![named("H0", "M*exp(2*x)")],
            nonzero: vec!["H0".into()],
            assumptions: vec![
                "H0 is constant".into(),
                "branch of the eigenfunction exponent opposite to the sign in the symmetry".into(),
            ],
        },
        expected: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_all_cases() {
        let ids: Vec<String> = case_registry(2).into_iter().map(|c| c.map.id).collect();
        assert_eq!(ids, case_ids());
        assert_eq!(ids.len(), 15);
    }

    #[test]
    fn unknown_case_is_an_error() {
        assert!(matches!(verify_case_id("III.1", 1), Err(ReductionError::UnknownCase(_))));
    }

    #[test]
    fn reversal_flips_the_temporal_equation() {
        for n in 1..=2 {
            for (name, r) in reversal_residuals(n).unwrap() {
                assert!(r.is_zero(), "{name}: {r}");
            }
        }
    }

    #[test]
    fn constant_parameter_has_no_ode() {
        let c = find_case("I.1", 2).unwrap();
        assert!(matches!(
            reduced_nonisospectral_check(&c.map),
            Err(ReductionError::ConstantParameter(_))
        ));
    }
}
