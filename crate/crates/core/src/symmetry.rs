//! Prolongation of vector fields on the 2+1 Lax pair and verification of
//! non-classical symmetry candidates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{
    parse, partial, reduce_fixpoint, render_text, sym, Atom, Context, Equation, Expr, FnKind, Frac, KResult,
    KernelError, MultiIndex, Sym,
};
use crate::lax::{build_ch_lax, ch_context, LaxError, LaxPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymmetryError {
    #[error("classical candidates have no invariant surface conditions")]
    Classical,
    #[error("candidate does not match its mode: {0}")]
    ModeMismatch(String),
    #[error("cannot solve {0} for its principal jets")]
    Unsolvable(String),
    #[error("reduction left `{0}` above the order bound {1}")]
    OrderBound(String, u32),
    #[error(transparent)]
    Lax(#[from] LaxError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// How the candidate's invariant surface conditions are used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    Classical,
    /// `xi3 = 1`; `t`-derivatives are eliminated.
    Xi3,
    /// `xi3 = 0, xi2 = 1`; `y`-derivatives are eliminated.
    Xi2,
    /// `xi3 = xi2 = 0, xi1 = 1`; `x`-derivatives are eliminated.
    Xi1,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Classical => "classical",
            Mode::Xi3 => "nonclassical xi3=1",
            Mode::Xi2 => "nonclassical xi2=1",
            Mode::Xi1 => "nonclassical xi1=1",
        }
    }
}

/// Constraint `field_var = rhs` imposed on top of the target system.
#[derive(Clone, Debug, PartialEq)]
pub struct SideConstraint {
    pub field: Sym,
    pub var: Sym,
    pub rhs: Expr,
}

/// Infinitesimals of a vector field acting on `(x, y, t, psi, lam, M, U_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryCandidate {
    pub name: String,
    pub n: u32,
    pub mode: Mode,
    pub xi: [Expr; 3],
    pub phi1: Expr,
    pub phi2: Expr,
    pub theta0: Expr,
    /// `Theta_j` for `j = 1..n`.
    pub theta: Vec<Expr>,
    pub side: Vec<SideConstraint>,
    pub assumptions: Vec<String>,
}

const VARS: [&str; 3] = ["x", "y", "t"];

impl SymmetryCandidate {
    /// Candidate with every infinitesimal zero.
    pub fn zero(n: u32, mode: Mode) -> SymmetryCandidate {
        SymmetryCandidate {
            name: "zero".into(),
            n,
            mode,
            xi: [Expr::zero(), Expr::zero(), Expr::zero()],
            phi1: Expr::zero(),
            phi2: Expr::zero(),
            theta0: Expr::zero(),
            theta: vec![Expr::zero(); n as usize],
            side: Vec::new(),
            assumptions: Vec::new(),
        }
    }

    /// Infinitesimal of field `f` (`psi`, `lam`, `M` or `U<j>`).
    pub fn field_coefficient(&self, f: &str) -> Option<&Expr> {
        match f {
            "psi" => Some(&self.phi1),
            "lam" => Some(&self.phi2),
            "M" => Some(&self.theta0),
            _ => {
                let j: usize = f.strip_prefix('U')?.parse().ok()?;
                self.theta.get(j.checked_sub(1)?)
            }
        }
    }

    pub fn fields(&self) -> Vec<Sym> {
        let mut v = vec![sym("psi"), sym("lam"), sym("M")];
        v.extend((1..=self.n).map(|j| sym(&format!("U{j}"))));
        v
    }

    /// Checks the normalization `xi_k = 1` implied by the mode.
    pub fn check_mode(&self) -> Result<(), SymmetryError> {
        let want: Option<[i64; 3]> = match self.mode {
            Mode::Classical => None,
            Mode::Xi3 => Some([-1, -1, 1]),
            Mode::Xi2 => Some([-1, 1, 0]),
            Mode::Xi1 => Some([1, 0, 0]),
        };
        if let Some(w) = want {
            for (k, v) in w.iter().enumerate() {
                if *v >= 0 && self.xi[k] != Expr::int(*v) {
                    return Err(SymmetryError::ModeMismatch(format!(
                        "xi{} = {} in mode {}",
                        k + 1,
                        self.xi[k],
                        self.mode.label()
                    )));
                }
            }
        }
        if self.theta.len() != self.n as usize {
            return Err(SymmetryError::ModeMismatch(format!(
                "{} Theta_j given for n = {}",
                self.theta.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Adds two candidates term by term (classical mode).
    pub fn add(&self, o: &SymmetryCandidate) -> SymmetryCandidate {
        let mut c = self.clone();
        for k in 0..3 {
            c.xi[k] = self.xi[k].add(&o.xi[k]);
        }
        c.phi1 = self.phi1.add(&o.phi1);
        c.phi2 = self.phi2.add(&o.phi2);
        c.theta0 = self.theta0.add(&o.theta0);
        c.theta = self.theta.iter().zip(&o.theta).map(|(a, b)| a.add(b)).collect();
        c.name = format!("{} + {}", self.name, o.name);
        c
    }

    /// Multiplies every infinitesimal by `k`.
    pub fn scale(&self, k: &Expr) -> SymmetryCandidate {
        let mut c = self.clone();
        for x in c.xi.iter_mut() {
            *x = x.mul(k);
        }
        c.phi1 = c.phi1.mul(k);
        c.phi2 = c.phi2.mul(k);
        c.theta0 = c.theta0.mul(k);
        for t in c.theta.iter_mut() {
            *t = t.mul(k);
        }
        c
    }
}

/// Symbols of the symmetry computation: the 2+1 fields plus the arbitrary
/// functions `A1, B1, C1` of `t` and the abbreviations `S1, S2, S3`.
pub fn symmetry_context(n: u32) -> KResult<Context> {
    let mut c = ch_context(n);
    for f in ["A1", "B1", "C1"] {
        c.add_function(f, &["t"], FnKind::Given);
    }
    let s1 = parse("A1 + B1*exp(x) + C1*exp(-x)", &c)?;
    let s1x = c.diff(&s1, "x")?;
    let s1t = c.diff(&s1, "t")?;
    c.define("S1", s1);
    c.define("S1x", s1x);
    c.define("S1t", s1t);
    c.define("S2", parse("a2*y + b2", &c)?);
    c.define("S3", parse("a3*t + b3", &c)?);
    Ok(c)
}

fn candidate_from_text(
    name: &str,
    n: u32,
    mode: Mode,
    xi: [&str; 3],
    phi1: &str,
    phi2: &str,
    theta0: &str,
    theta: &dyn Fn(u32) -> String,
    ctx: &Context,
) -> KResult<SymmetryCandidate> {
    let p = |s: &str| parse(s, ctx);
    Ok(SymmetryCandidate {
        name: name.into(),
        n,
        mode,
        xi: [p(xi[0])?, p(xi[1])?, p(xi[2])?],
        phi1: p(phi1)?,
        phi2: p(phi2)?,
        theta0: p(theta0)?,
        theta: (1..=n).map(|j| p(&theta(j))).collect::<KResult<_>>()?,
        side: Vec::new(),
        assumptions: Vec::new(),
    })
}

/// Family with `xi3 = 1` built from `S1(x,t)`, `S2(y)`, `S3(t)`.
pub fn family_xi3(n: u32, ctx: &Context) -> KResult<SymmetryCandidate> {
    let mut c = candidate_from_text(
        "xi3 family",
        n,
        Mode::Xi3,
        ["S1/S3", "S2/S3", "1"],
        "(S1x/2 + a0)*psi/S3",
        &format!("(a3 - a2)/{n}*lam/S3"),
        &format!("(-2*S1x + (a2 - a3)/{n})*M/S3"),
        &|j| {
            if j == 1 {
                "(U1*(S1x - a3) - S1t)/S3".into()
            } else {
                format!("(S1x - a2*{}/{n} - a3*{}/{n})*U{j}/S3", j - 1, n - j + 1)
            }
        },
        ctx,
    )?;
    c.assumptions = vec![
        "A1, B1, C1 are arbitrary functions of t".into(),
        "a3 and b3 do not vanish together, so S3 is nonzero".into(),
    ];
    Ok(c)
}

/// Family with `xi3 = 0, xi2 = 1`.
pub fn family_xi2(n: u32, ctx: &Context) -> KResult<SymmetryCandidate> {
    let mut c = candidate_from_text(
        "xi2 family",
        n,
        Mode::Xi2,
        ["S1/S2", "1", "0"],
        "(S1x/2 + a0)*psi/S2",
        &format!("-a2/{n}*lam/S2"),
        &format!("(-2*S1x + a2/{n})*M/S2"),
        &|j| {
            if j == 1 {
                "(U1*S1x - S1t)/S2".into()
            } else {
                format!("(S1x - a2*{}/{n})*U{j}/S2", j - 1)
            }
        },
        ctx,
    )?;
    c.assumptions = vec![
        "A1, B1, C1 are arbitrary functions of t".into(),
        "a2 and b2 do not vanish together, so S2 is nonzero".into(),
    ];
    Ok(c)
}

/// Family with `xi1 = 1`; `sign` selects the branch of the square root.
/// The side constraints `M_t = M_y = 0` are attached when `constrained`.
pub fn family_xi1(n: u32, sign: i64, constrained: bool, ctx: &Context) -> KResult<SymmetryCandidate> {
    let s = if sign < 0 { "-" } else { "+" };
    let mut c = candidate_from_text(
        "xi1 family",
        n,
        Mode::Xi1,
        ["1", "0", "0"],
        &format!("(1 {s} (-1)^(1/2)*2^(1/2)*lam^(1/2)*M^(1/2))*psi/2"),
        "0",
        "-2*M",
        &|j| format!("U{j}"),
        ctx,
    )?;
    c.assumptions = vec!["principal branch of (2*lam*M)^(1/2)".into()];
    if constrained {
        for v in ["t", "y"] {
            c.side.push(SideConstraint {
                field: sym("M"),
                var: sym(v),
                rhs: Expr::zero(),
            });
        }
        c.assumptions.push("M_t = M_y = 0".into());
    }
    Ok(c)
}

/// Characteristic `phi - sum_k xi_k u_k` of field `f`.
fn characteristic(c: &SymmetryCandidate, f: &str, ctx: &Context) -> KResult<Expr> {
    let fs = ctx.function(f).ok_or_else(|| KernelError::UnknownFunction(f.into()))?;
    let mut q = c
        .field_coefficient(f)
        .cloned()
        .ok_or_else(|| KernelError::UnknownFunction(f.into()))?;
    for (k, v) in VARS.iter().enumerate() {
        if fs.depends_on(v) && !c.xi[k].is_zero() {
            q = q.sub(&c.xi[k].mul(&ctx.jet(f, &MultiIndex::empty().with(&sym(v), 1))?));
        }
    }
    Ok(q)
}

/// `sum_k xi_k u_{J,k}` over the declared directions of `f`.
fn transport(c: &SymmetryCandidate, f: &str, idx: &MultiIndex, ctx: &Context) -> KResult<Expr> {
    let fs = ctx.function(f).ok_or_else(|| KernelError::UnknownFunction(f.into()))?;
    let mut out = Expr::zero();
    if idx.iter().any(|(v, _)| !fs.depends_on(v)) {
        return Ok(out);
    }
    for (k, v) in VARS.iter().enumerate() {
        if fs.depends_on(v) && !c.xi[k].is_zero() {
            out = out.add(&c.xi[k].mul(&ctx.jet(f, &idx.with(&sym(v), 1))?));
        }
    }
    Ok(out)
}

/// Prolonged coefficient `phi^J` of field `f`, computed directly as
/// `D_J(phi - sum_k xi_k u_k) + sum_k xi_k u_{J,k}`.
pub fn prolong_direct(c: &SymmetryCandidate, f: &str, idx: &MultiIndex, ctx: &Context) -> KResult<Expr> {
    let q = characteristic(c, f, ctx)?;
    Ok(ctx.diff_many(&q, &idx.expanded())?.add(&transport(c, f, idx, ctx)?))
}

/// Prolonged coefficient `phi^J` of field `f`, computed by the recursion
/// `phi^{J,i} = D_i(phi^J - sum_k xi_k u_{J,k}) + sum_k xi_k u_{J+i,k}`.
pub fn prolong_recursive(c: &SymmetryCandidate, f: &str, idx: &MultiIndex, ctx: &Context) -> KResult<Expr> {
    let base = c
        .field_coefficient(f)
        .cloned()
        .ok_or_else(|| KernelError::UnknownFunction(f.into()))?;
    let mut cur = MultiIndex::empty();
    let mut phi = base;
    for v in idx.expanded() {
        let inner = phi.sub(&transport(c, f, &cur, ctx)?);
        let next = cur.with(&v, 1);
        phi = ctx.diff(&inner, &v)?.add(&transport(c, f, &next, ctx)?);
        cur = next;
    }
    Ok(phi)
}

/// Table of prolonged coefficients of every field jet up to `order`.
#[derive(Clone, Debug)]
pub struct Prolongation {
    pub order: u32,
    pub entries: Vec<(Sym, MultiIndex, Expr)>,
}

impl Prolongation {
    pub fn get(&self, f: &str, idx: &MultiIndex) -> Option<&Expr> {
        self.entries
            .iter()
            .find(|(g, i, _)| &**g == f && i == idx)
            .map(|(_, _, e)| e)
    }
}

fn indices_up_to(deps: &[Sym], order: u32) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::empty()];
    let mut frontier = vec![MultiIndex::empty()];
    for _ in 0..order {
        let mut next = Vec::new();
        for idx in &frontier {
            for d in deps {
                let j = idx.with(d, 1);
                if !next.contains(&j) {
                    next.push(j);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Prolongs `c` to all field jets of order `1..=order`.
pub fn prolong(c: &SymmetryCandidate, order: u32, ctx: &Context) -> KResult<Prolongation> {
    let mut entries = Vec::new();
    for f in c.fields() {
        let deps = ctx.function(&f).ok_or_else(|| KernelError::UnknownFunction(f.to_string()))?.deps.clone();
        for idx in indices_up_to(&deps, order) {
            if idx.is_empty() {
                continue;
            }
            let e = prolong_recursive(c, &f, &idx, ctx)?;
            entries.push((f.clone(), idx, e));
        }
    }
    Ok(Prolongation { order, entries })
}

/// Action of the prolonged field on an expression in the jets.
pub fn apply_prolonged(c: &SymmetryCandidate, e: &Expr, ctx: &Context) -> KResult<Expr> {
    let mut out = Expr::zero();
    for a in e.base_atoms() {
        let coeff = match &a {
            Atom::Var(v) => match VARS.iter().position(|w| **w == **v) {
                Some(k) => c.xi[k].clone(),
                None => continue,
            },
            Atom::Jet(f, idx) => match c.field_coefficient(f) {
                Some(_) => prolong_recursive(c, f, idx, ctx)?,
                None => continue,
            },
            _ => continue,
        };
        if coeff.is_zero() {
            continue;
        }
        out = out.add(&partial(e, &a)?.mul(&coeff));
    }
    Ok(out)
}

/// Equations whose symmetry is verified: the spatial and temporal equations
/// of the pair and the non-isospectral condition.
#[derive(Clone, Debug)]
pub struct SymmetryTarget {
    pub n: u32,
    pub pair: LaxPair,
    pub niso: Expr,
}

impl SymmetryTarget {
    pub fn ch(n: u32, ctx: &Context) -> Result<SymmetryTarget, SymmetryError> {
        let pair = build_ch_lax(n, ctx)?;
        let niso = parse(&format!("lam_y - lam^{n}*lam_t"), ctx)?;
        Ok(SymmetryTarget { n, pair, niso })
    }

    pub fn equations(&self) -> [(&'static str, &Expr); 3] {
        [
            ("spatial", &self.pair.spatial),
            ("temporal", &self.pair.temporal),
            ("non-isospectral", &self.niso),
        ]
    }
}

/// Solved rule `field_pivot = rhs`; applies to every jet whose index
/// contains `pivot`.
#[derive(Clone, Debug)]
pub struct JetRule {
    pub field: Sym,
    pub pivot: MultiIndex,
    pub rhs: Expr,
    pub source: String,
}

impl JetRule {
    pub fn lhs(&self) -> String {
        Expr::atom(Atom::Jet(self.field.clone(), self.pivot.clone())).to_string()
    }
}

/// Invariant surface conditions and target equations solved for the
/// principal jets of the mode, in priority order.
#[derive(Clone, Debug)]
pub struct InvariantSurfaceSet {
    pub mode: Mode,
    pub rules: Vec<JetRule>,
}

fn jet_atom(f: &str, v: &str, k: u32) -> Atom {
    Atom::Jet(sym(f), MultiIndex::empty().with(&sym(v), k))
}

/// Solves the linear equations `eqs = 0` for `unknowns` (one or two jets).
fn solve_linear(eqs: &[&Expr], unknowns: &[Atom], what: &str) -> Result<Vec<Expr>, SymmetryError> {
    let one = Frac::from(1);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for e in eqs {
        let row: Vec<Expr> = unknowns.iter().map(|u| e.coeff(u, one)).collect();
        let mut rest = (*e).clone();
        for (u, k) in unknowns.iter().zip(&row) {
            rest = rest.sub(&k.mul(&Expr::atom(u.clone())));
        }
        if rest.contains_atom(&|x| unknowns.contains(x)) {
            return Err(SymmetryError::Unsolvable(what.into()));
        }
        a.push(row);
        b.push(rest.neg());
    }
    let err = |_| SymmetryError::Unsolvable(what.into());
    match unknowns.len() {
        1 => Ok(vec![b[0].div(&a[0][0]).map_err(err)?]),
        2 => {
            let det = a[0][0].mul(&a[1][1]).sub(&a[0][1].mul(&a[1][0]));
            let u0 = b[0].mul(&a[1][1]).sub(&a[0][1].mul(&b[1])).div(&det).map_err(err)?;
            let u1 = a[0][0].mul(&b[1]).sub(&b[0].mul(&a[1][0])).div(&det).map_err(err)?;
            Ok(vec![u0, u1])
        }
        _ => Err(SymmetryError::Unsolvable(what.into())),
    }
}

/// Invariant surface equation `phi - sum_k xi_k u_k` of field `f`.
pub fn surface_equation(c: &SymmetryCandidate, f: &str, ctx: &Context) -> KResult<Expr> {
    characteristic(c, f, ctx)
}

fn push_solved(
    rules: &mut Vec<JetRule>,
    eqs: &[(&str, &Expr)],
    unknowns: &[(&str, &str, u32)],
) -> Result<(), SymmetryError> {
    let atoms: Vec<Atom> = unknowns.iter().map(|(f, v, k)| jet_atom(f, v, *k)).collect();
    let names: Vec<&str> = eqs.iter().map(|(n, _)| *n).collect();
    let source = names.join(" + ");
    let exprs: Vec<&Expr> = eqs.iter().map(|(_, e)| *e).collect();
    let sol = solve_linear(&exprs, &atoms, &source)?;
    for ((f, v, k), rhs) in unknowns.iter().zip(sol) {
        rules.push(JetRule {
            field: sym(f),
            pivot: MultiIndex::empty().with(&sym(v), *k),
            rhs,
            source: source.clone(),
        });
    }
    Ok(())
}

fn mode_rules(c: &SymmetryCandidate, target: &SymmetryTarget, ctx: &Context) -> Result<Vec<JetRule>, SymmetryError> {
    let s = &target.pair.spatial;
    let t = &target.pair.temporal;
    let niso = &target.niso;
    let mut rules = Vec::new();
    if c.mode == Mode::Classical {
        push_solved(&mut rules, &[("spatial", s)], &[("psi", "x", 2)])?;
        push_solved(&mut rules, &[("temporal", t)], &[("psi", "y", 1)])?;
        push_solved(&mut rules, &[("non-isospectral", niso)], &[("lam", "y", 1)])?;
        return Ok(rules);
    }
    let surf_psi = surface_equation(c, "psi", ctx)?;
    let surf_lam = surface_equation(c, "lam", ctx)?;
    let surf_m = surface_equation(c, "M", ctx)?;
    let surf_u: Vec<(String, Expr)> = (1..=c.n)
        .map(|j| Ok((format!("U{j}"), surface_equation(c, &format!("U{j}"), ctx)?)))
        .collect::<KResult<_>>()?;
    let v = match c.mode {
        Mode::Xi3 => "t",
        Mode::Xi2 => "y",
        _ => "x",
    };
    match c.mode {
        Mode::Xi3 => {
            push_solved(
                &mut rules,
                &[("psi surface", &surf_psi), ("temporal", t)],
                &[("psi", "t", 1), ("psi", "y", 1)],
            )?;
            push_solved(&mut rules, &[("spatial", s)], &[("psi", "x", 2)])?;
            push_solved(
                &mut rules,
                &[("lam surface", &surf_lam), ("non-isospectral", niso)],
                &[("lam", "t", 1), ("lam", "y", 1)],
            )?;
        }
        Mode::Xi2 => {
            push_solved(&mut rules, &[("psi surface", &surf_psi)], &[("psi", "y", 1)])?;
            push_solved(&mut rules, &[("temporal", t)], &[("psi", "t", 1)])?;
            push_solved(&mut rules, &[("spatial", s)], &[("psi", "x", 2)])?;
            push_solved(
                &mut rules,
                &[("lam surface", &surf_lam), ("non-isospectral", niso)],
                &[("lam", "y", 1), ("lam", "t", 1)],
            )?;
        }
        Mode::Xi1 => {
            push_solved(&mut rules, &[("psi surface", &surf_psi)], &[("psi", "x", 1)])?;
            push_solved(&mut rules, &[("temporal", t)], &[("psi", "y", 1)])?;
            push_solved(&mut rules, &[("non-isospectral", niso)], &[("lam", "y", 1)])?;
        }
        Mode::Classical => unreachable!(),
    }
    push_solved(&mut rules, &[("M surface", &surf_m)], &[("M", v, 1)])?;
    for (f, e) in &surf_u {
        let label = format!("{f} surface");
        push_solved(&mut rules, &[(label.as_str(), e)], &[(f.as_str(), v, 1)])?;
    }
    Ok(rules)
}

/// Invariant surface conditions of `c`, solved for the jets its mode
/// eliminates, together with the target equations needed to close them.
pub fn invariant_surface_conditions(
    c: &SymmetryCandidate,
    target: &SymmetryTarget,
    ctx: &Context,
) -> Result<InvariantSurfaceSet, SymmetryError> {
    if c.mode == Mode::Classical {
        return Err(SymmetryError::Classical);
    }
    c.check_mode()?;
    Ok(InvariantSurfaceSet {
        mode: c.mode,
        rules: mode_rules(c, target, ctx)?,
    })
}

/// Options of the determining-equation reduction.
#[derive(Clone, Copy, Debug)]
pub struct SymmetryOptions {
    /// Highest jet order allowed to survive the reduction.
    pub order_bound: u32,
    /// Whether the candidate's side constraints are used.
    pub use_side_constraints: bool,
}

impl Default for SymmetryOptions {
    fn default() -> Self {
        SymmetryOptions {
            order_bound: 4,
            use_side_constraints: true,
        }
    }
}

fn subtract_index(idx: &MultiIndex, pivot: &MultiIndex) -> Option<MultiIndex> {
    let mut rest = idx.clone();
    for v in pivot.expanded() {
        rest = rest.lowered(&v)?;
    }
    Some(rest)
}

/// Reduces `e` modulo `rules` and their total derivatives.
pub fn reduce_by_rules(e: &Expr, rules: &[JetRule], order_bound: u32, ctx: &Context) -> Result<Expr, SymmetryError> {
    let mut rule = |a: &Atom| -> KResult<Option<Expr>> {
        let Atom::Jet(f, idx) = a else {
            return Ok(None);
        };
        for r in rules {
            if r.field != *f {
                continue;
            }
            if let Some(rest) = subtract_index(idx, &r.pivot) {
                return Ok(Some(ctx.diff_many(&r.rhs, &rest.expanded())?));
            }
        }
        Ok(None)
    };
    let out = reduce_fixpoint(e, &mut rule, 16 * order_bound as usize)?;
    if let Some(Atom::Jet(f, idx)) = out
        .base_atoms()
        .into_iter()
        .find(|a| matches!(a, Atom::Jet(_, idx) if idx.order() > order_bound))
    {
        return Err(SymmetryError::OrderBound(
            Expr::atom(Atom::Jet(f, idx)).to_string(),
            order_bound,
        ));
    }
    Ok(out)
}

/// One determining residual, the coefficient of a monomial in the free jets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// Target equation the residual came from.
    pub equation: String,
    /// Monomial in the free jets.
    pub jets: String,
    pub residual: String,
}

/// Reduced expressions `pr X(F)` for each target equation `F`, plus the
/// target equations themselves reduced (which vanish unless a mode rule
/// replaced them).
pub fn determining_expressions(
    c: &SymmetryCandidate,
    target: &SymmetryTarget,
    opts: SymmetryOptions,
    ctx: &Context,
) -> Result<Vec<(String, Expr)>, SymmetryError> {
    c.check_mode()?;
    let mut rules = mode_rules(c, target, ctx)?;
    if opts.use_side_constraints {
        for s in &c.side {
            rules.push(JetRule {
                field: s.field.clone(),
                pivot: MultiIndex::empty().with(&s.var, 1),
                rhs: s.rhs.clone(),
                source: "side constraint".into(),
            });
        }
    }
    let mut out = Vec::new();
    for (name, eq) in target.equations() {
        let acted = apply_prolonged(c, eq, ctx)?;
        out.push((format!("{name} invariance"), reduce_by_rules(&acted, &rules, opts.order_bound, ctx)?));
        out.push((format!("{name} consistency"), reduce_by_rules(eq, &rules, opts.order_bound, ctx)?));
    }
    // lam does not depend on x, so its x-prolongation must vanish.
    let lam_x = prolong_direct(c, "lam", &MultiIndex::empty().with(&sym("x"), 1), ctx)?;
    out.push(("lam independent of x".into(), reduce_by_rules(&lam_x, &rules, opts.order_bound, ctx)?));
    Ok(out)
}

/// Determining residuals: coefficients of the free field jets in the
/// reduced expressions.
pub fn determining_residuals(
    c: &SymmetryCandidate,
    target: &SymmetryTarget,
    opts: SymmetryOptions,
    ctx: &Context,
) -> Result<Vec<(Residual, Expr)>, SymmetryError> {
    let fields = c.fields();
    let mut out = Vec::new();
    for (name, e) in determining_expressions(c, target, opts, ctx)? {
        if e.is_zero() {
            continue;
        }
        let groups = e.numerator().collect(|a| matches!(a, Atom::Jet(f, idx) if !idx.is_empty() && fields.contains(f)));
        for (m, coeff) in groups {
            let raw = coeff.div(&e.denominator())?;
            let text = match Equation::normalize(&raw, ctx) {
                Some(n) => n.equation.lhs.to_string(),
                None => continue,
            };
            out.push((
                Residual {
                    equation: name.clone(),
                    jets: Expr::monomial(m, num_traits::One::one()).to_string(),
                    residual: text,
                },
                raw,
            ));
        }
    }
    Ok(out)
}

/// Outcome of [`verify_symmetry`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub candidate: String,
    pub n: u32,
    pub mode: Mode,
    pub side_constraints: Vec<String>,
    pub passed: bool,
    pub residuals: Vec<Residual>,
    pub assumptions: Vec<String>,
}

/// Verifies that `c` is a symmetry of `target` in its mode.
pub fn verify_symmetry(
    c: &SymmetryCandidate,
    target: &SymmetryTarget,
    opts: SymmetryOptions,
    ctx: &Context,
) -> Result<SymmetryReport, SymmetryError> {
    let residuals: Vec<Residual> = determining_residuals(c, target, opts, ctx)?.into_iter().map(|(r, _)| r).collect();
    let side = if opts.use_side_constraints {
        c.side
            .iter()
            .map(|s| format!("{}_{} = {}", s.field, s.var, render_text(&s.rhs)))
            .collect()
    } else {
        Vec::new()
    };
    let mut assumptions = c.assumptions.clone();
    if !opts.use_side_constraints && !c.side.is_empty() {
        assumptions.retain(|a| !a.contains(" = 0"));
    }
    Ok(SymmetryReport {
        candidate: c.name.clone(),
        n: c.n,
        mode: c.mode,
        side_constraints: side,
        passed: residuals.is_empty(),
        residuals,
        assumptions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verify(c: &SymmetryCandidate, side: bool, ctx: &Context) -> SymmetryReport {
        let target = SymmetryTarget::ch(c.n, ctx).unwrap();
        let opts = SymmetryOptions {
            use_side_constraints: side,
            ..Default::default()
        };
        verify_symmetry(c, &target, opts, ctx).unwrap()
    }

    #[test]
    fn translation_prolongs_to_zero() {
        let ctx = symmetry_context(1).unwrap();
        let mut c = SymmetryCandidate::zero(1, Mode::Classical);
        c.xi[0] = Expr::one();
        for idx in indices_up_to(&[sym("x"), sym("y"), sym("t")], 3) {
            assert!(prolong_recursive(&c, "psi", &idx, &ctx).unwrap().is_zero());
        }
    }

    #[test]
    fn scaling_prolongs_to_jets() {
        let ctx = symmetry_context(1).unwrap();
        let mut c = SymmetryCandidate::zero(1, Mode::Classical);
        c.phi1 = ctx.func("psi").unwrap();
        let idx = MultiIndex::empty().with(&sym("x"), 2);
        assert_eq!(prolong_recursive(&c, "psi", &idx, &ctx).unwrap(), parse("psi_xx", &ctx).unwrap());
        assert!(verify(&c, true, &ctx).passed);
    }

    #[test]
    fn recursion_matches_direct_expansion() {
        let ctx = symmetry_context(1).unwrap();
        let c = family_xi3(1, &ctx).unwrap();
        for idx in indices_up_to(&[sym("x"), sym("y"), sym("t")], 2) {
            for f in ["psi", "M", "U1"] {
                assert_eq!(
                    prolong_recursive(&c, f, &idx, &ctx).unwrap(),
                    prolong_direct(&c, f, &idx, &ctx).unwrap()
                );
            }
        }
    }

    #[test]
    fn surface_rules_per_mode() {
        let ctx = symmetry_context(1).unwrap();
        let target = SymmetryTarget::ch(1, &ctx).unwrap();
        let c = family_xi2(1, &ctx).unwrap();
        let set = invariant_surface_conditions(&c, &target, &ctx).unwrap();
        let lam_y = set.rules.iter().find(|r| r.lhs() == "lam_y").unwrap();
        assert_eq!(lam_y.rhs, c.phi2);
        let c = family_xi1(1, 1, true, &ctx).unwrap();
        let set = invariant_surface_conditions(&c, &target, &ctx).unwrap();
        let m_x = set.rules.iter().find(|r| r.lhs() == "M_x").unwrap();
        assert_eq!(m_x.rhs, parse("-2*M", &ctx).unwrap());
        let zero = SymmetryCandidate::zero(1, Mode::Classical);
        assert_eq!(
            invariant_surface_conditions(&zero, &target, &ctx).unwrap_err(),
            SymmetryError::Classical
        );
    }

    #[test]
    fn zero_candidate_passes() {
        let ctx = symmetry_context(2).unwrap();
        assert!(verify(&SymmetryCandidate::zero(2, Mode::Classical), true, &ctx).passed);
    }

    #[test]
    fn mode_normalization_is_checked() {
        let ctx = symmetry_context(1).unwrap();
        let mut c = family_xi3(1, &ctx).unwrap();
        c.xi[2] = Expr::int(2);
        assert!(matches!(c.check_mode(), Err(SymmetryError::ModeMismatch(_))));
    }

    #[test]
    fn families() {
        for n in 1..=2 {
            let ctx = symmetry_context(n).unwrap();
            let r = verify(&family_xi3(n, &ctx).unwrap(), true, &ctx);
            assert!(r.passed, "xi3 n={n}: {:?}", r.residuals);
            let r = verify(&family_xi2(n, &ctx).unwrap(), true, &ctx);
            assert!(r.passed, "xi2 n={n}: {:?}", r.residuals);
            for sign in [1, -1] {
                let c = family_xi1(n, sign, true, &ctx).unwrap();
                let r = verify(&c, true, &ctx);
                assert!(r.passed, "xi1 n={n}: {:?}", r.residuals);
                assert!(!verify(&c, false, &ctx).passed);
            }
            let mut c = family_xi3(n, &ctx).unwrap();
            c.theta0 = c.theta0.neg();
            assert!(!verify(&c, true, &ctx).passed);
        }
    }
}
