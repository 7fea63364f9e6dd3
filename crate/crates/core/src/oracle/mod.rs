//! Independent numeric oracle.
//!
//! Every symbolic identity established by the engine is recomputed here on
//! plain trees built from the text form of its inputs, then both sides are
//! evaluated at seeded random rational points. Exact arithmetic is used while
//! no exponential, logarithm or fractional power intervenes.

pub mod tree;

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{numeric_eval, render_text, Assignment, Atom, Context, Expr, Frac, KernelError, Number};
use crate::lax::{build_ch_lax, ch_context, compatibility, Compatibility, Schedule};
use crate::reduction::{find_case, reduced_context, reduced_lax_pair, CaseSpec, ExpectedReduction, ParameterRelation, ReductionMap};
use crate::symmetry::{family_xi1, family_xi2, family_xi3, invariant_surface_conditions, symmetry_context, JetRule, Mode, SymmetryCandidate, SymmetryTarget};
use tree::{Node, RawChain, RawEnv, Tree};

/// Relative tolerance for comparisons in floating point.
pub const TOLERANCE: f64 = 1e-9;
const MAX_ATTEMPTS: usize = 64;

/// Sampling settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { samples: 100, seed: 0 }
    }
}

/// What a certificate asserts about its pairs of values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Both sides agree at every sample point.
    Equal,
    /// Some pair differs at one sample point at least (mutation tests).
    Differ,
}

/// Outcome of one oracle certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub expectation: Expectation,
    pub samples: usize,
    /// Samples where every value was computed exactly.
    pub exact_samples: usize,
    /// Samples with at least one differing pair.
    pub differing_samples: usize,
    /// Largest relative discrepancy seen in floating point.
    pub max_relative: f64,
    pub passed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// The point leaves the admissible domain; draw another.
    Resample,
    Failed(String),
}

impl From<KernelError> for EvalError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::DivisionByZero => EvalError::Resample,
            other => EvalError::Failed(other.to_string()),
        }
    }
}

impl From<tree::ParseError> for EvalError {
    fn from(e: tree::ParseError) -> Self {
        EvalError::Failed(format!("parse: {}", e.0))
    }
}

fn positive(v: &Number) -> bool {
    match v {
        Number::Exact(q) => q.is_positive(),
        Number::Approx(z) => z.re > 0.0 && z.im.abs() <= 1e-12 * z.norm(),
    }
}

/// Random evaluation point; leaf values are drawn on first use.
pub struct Point {
    rng: ChaCha8Rng,
    values: BTreeMap<String, Number>,
    overrides: BTreeMap<String, Number>,
}

impl Point {
    pub fn new(seed: u64) -> Point {
        Point {
            rng: ChaCha8Rng::seed_from_u64(seed),
            values: BTreeMap::new(),
            overrides: BTreeMap::new(),
        }
    }

    /// Value of a leaf; variables, parameters and undifferentiated functions
    /// are positive, derivatives carry a random sign.
    pub fn leaf(&mut self, key: &str, signed: bool) -> Number {
        if let Some(v) = self.overrides.get(key) {
            return v.clone();
        }
        if let Some(v) = self.values.get(key) {
            return v.clone();
        }
        let p: i64 = self.rng.gen_range(1..=12);
        let q: i64 = self.rng.gen_range(1..=6);
        let s = if signed && self.rng.gen_bool(0.5) { -1 } else { 1 };
        let v = Number::Exact(BigRational::new((s * p).into(), q.into()));
        self.values.insert(key.to_string(), v.clone());
        v
    }

    pub fn set_overrides(&mut self, o: BTreeMap<String, Number>) {
        self.overrides = o;
    }

    /// Evaluates a tree together with the size of its terms.
    pub fn eval(&mut self, t: &Tree) -> Result<Sampled, EvalError> {
        let mut memo = HashMap::new();
        let mut consts = HashMap::new();
        self.eval_memo(t, &mut memo, &mut consts)
    }

    fn eval_memo(
        &mut self,
        t: &Tree,
        memo: &mut HashMap<*const Node, Sampled>,
        consts: &mut HashMap<*const Node, bool>,
    ) -> Result<Sampled, EvalError> {
        let key = Rc::as_ptr(t);
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let v = match &**t {
            Node::Num(q) => Sampled::new(Number::Exact(q.clone())),
            Node::Var(s) | Node::Param(s) => Sampled::new(self.leaf(s, false)),
            Node::Jet(f, d) => Sampled::new(self.leaf(&tree::leaf_key(f, d), !d.is_empty())),
            Node::Add(v) => {
                let mut acc = Sampled::new(Number::int(0));
                for a in v {
                    let x = self.eval_memo(a, memo, consts)?;
                    acc = Sampled {
                        value: acc.value.add(&x.value),
                        scale: acc.scale + x.scale,
                    };
                }
                acc
            }
            Node::Mul(v) => {
                let mut acc = Sampled::new(Number::int(1));
                for a in v {
                    acc = acc.mul(&self.eval_memo(a, memo, consts)?);
                }
                acc
            }
            Node::Pow(b, e) => {
                let sb = self.eval_memo(b, memo, consts)?;
                let bv = sb.value;
                let ev = self.eval_memo(e, memo, consts)?.value;
                let value = match &ev {
                    Number::Exact(q) if q.is_integer() => {
                        let k = q.to_integer().to_i64().ok_or(EvalError::Failed("exponent too large".into()))?;
                        if k > 0 {
                            let k32 = i32::try_from(k).unwrap_or(i32::MAX);
                            let v = Sampled {
                                value: bv.powi(k)?,
                                scale: sb.scale.powi(k32),
                            };
                            memo.insert(key, v.clone());
                            return Ok(v);
                        }
                        bv.powi(k)?
                    }
                    _ => {
                        if !is_constant(b, consts) && !positive(&bv) {
                            return Err(EvalError::Resample);
                        }
                        match &ev {
                            Number::Exact(q) => match (q.numer().to_i64(), q.denom().to_i64()) {
                                (Some(a), Some(d)) => bv.powr(Frac::new(a, d))?,
                                _ => return Err(EvalError::Failed("exponent too large".into())),
                            },
                            Number::Approx(z) => {
                                let base = bv.to_complex();
                                if base.norm() == 0.0 {
                                    return Err(EvalError::Resample);
                                }
                                Number::Approx((base.ln() * z).exp())
                            }
                        }
                    }
                };
                Sampled::new(value)
            }
            Node::Exp(a) => {
                let z = self.eval_memo(a, memo, consts)?.value;
                if z.is_exact_zero() {
                    Sampled::new(Number::int(1))
                } else {
                    Sampled::new(Number::Approx(z.to_complex().exp()))
                }
            }
            Node::Log(a) => {
                let z = self.eval_memo(a, memo, consts)?.value;
                if !is_constant(a, consts) && !positive(&z) {
                    return Err(EvalError::Resample);
                }
                if let Number::Exact(q) = &z {
                    if q == &BigRational::from_integer(1.into()) {
                        let v = Sampled::new(Number::int(0));
                        memo.insert(key, v.clone());
                        return Ok(v);
                    }
                }
                let c = z.to_complex();
                if c.norm() == 0.0 {
                    return Err(EvalError::Resample);
                }
                Sampled::new(Number::Approx(c.ln()))
            }
        };
        // Overflow leaves the range where floating point means anything.
        if !v.scale.is_finite() || !v.value.abs().is_finite() {
            return Err(EvalError::Resample);
        }
        memo.insert(key, v.clone());
        Ok(v)
    }

    /// Evaluates a canonical expression of the engine at the same point.
    pub fn eval_expr(&mut self, e: &Expr) -> Result<Sampled, EvalError> {
        let mut asg = Assignment::new();
        for a in e.base_atoms() {
            let v = match &a {
                Atom::Var(s) | Atom::Param(s) => self.leaf(s, false),
                Atom::Jet(f, idx) => {
                    let mut d: Vec<String> = idx.expanded().iter().map(|s| s.to_string()).collect();
                    d.sort();
                    self.leaf(&tree::leaf_key(f, &d), !d.is_empty())
                }
                _ => continue,
            };
            asg.insert(a, v);
        }
        Ok(Sampled::new(numeric_eval(e, &asg)?))
    }
}

fn is_constant(t: &Tree, memo: &mut HashMap<*const Node, bool>) -> bool {
    let key = Rc::as_ptr(t);
    if let Some(c) = memo.get(&key) {
        return *c;
    }
    let c = match &**t {
        Node::Num(_) => true,
        Node::Var(_) | Node::Param(_) | Node::Jet(..) => false,
        Node::Add(v) | Node::Mul(v) => v.iter().all(|a| is_constant(a, memo)),
        Node::Pow(a, b) => is_constant(a, memo) && is_constant(b, memo),
        Node::Exp(a) | Node::Log(a) => is_constant(a, memo),
    };
    memo.insert(key, c);
    c
}

/// A sampled value with the magnitude of the terms that produced it. Sums
/// add the magnitudes of their terms, so cancellation in floating point is
/// measured against the size of what cancelled.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub value: Number,
    pub scale: f64,
}

impl Sampled {
    pub fn new(value: Number) -> Sampled {
        let scale = value.abs();
        Sampled { value, scale }
    }

    pub fn zero() -> Sampled {
        Sampled::new(Number::int(0))
    }

    pub fn mul(&self, o: &Sampled) -> Sampled {
        Sampled {
            value: self.value.mul(&o.value),
            scale: self.scale * o.scale,
        }
    }

    pub fn add(&self, o: &Sampled) -> Sampled {
        Sampled {
            value: self.value.add(&o.value),
            scale: self.scale + o.scale,
        }
    }
}

/// Compares two values: exact equality, or agreement in floating point
/// relative to the larger term magnitude.
pub fn compare(a: &Sampled, b: &Sampled) -> (bool, f64) {
    match (&a.value, &b.value) {
        (Number::Exact(x), Number::Exact(y)) => (x == y, if x == y { 0.0 } else { f64::INFINITY }),
        (x, y) => {
            let d = (x.to_complex() - y.to_complex()).norm();
            let scale = a.scale.max(b.scale).max(f64::MIN_POSITIVE);
            let rel = d / scale;
            (rel <= TOLERANCE, rel)
        }
    }
}

fn mix(seed: u64, name: &str, sample: usize, attempt: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in name.bytes().chain(sample.to_le_bytes()).chain(attempt.to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Pairs of values that must agree at a point.
pub type Pairs = Vec<(Sampled, Sampled)>;

/// Runs `f` at `cfg.samples` admissible points.
pub fn certify(
    name: &str,
    expectation: Expectation,
    cfg: OracleConfig,
    f: &mut dyn FnMut(&mut Point) -> Result<Pairs, EvalError>,
) -> Certificate {
    let mut cert = Certificate {
        name: name.into(),
        expectation,
        samples: 0,
        exact_samples: 0,
        differing_samples: 0,
        max_relative: 0.0,
        passed: false,
        failure: None,
    };
    for i in 0..cfg.samples {
        let mut pairs = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut p = Point::new(mix(cfg.seed, name, i, attempt));
            match f(&mut p) {
                Ok(v) => {
                    pairs = Some(v);
                    break;
                }
                Err(EvalError::Resample) => continue,
                Err(EvalError::Failed(m)) => {
                    cert.failure = Some(m);
                    return cert;
                }
            }
        }
        let Some(pairs) = pairs else {
            cert.failure = Some(format!("no admissible point for sample {i}"));
            return cert;
        };
        cert.samples += 1;
        let mut exact = true;
        let mut differs = false;
        for (a, b) in &pairs {
            exact &= matches!((&a.value, &b.value), (Number::Exact(_), Number::Exact(_)));
            let (ok, rel) = compare(a, b);
            if rel.is_finite() {
                cert.max_relative = cert.max_relative.max(rel);
            }
            differs |= !ok;
        }
        if exact {
            cert.exact_samples += 1;
        }
        if differs {
            cert.differing_samples += 1;
            if expectation == Expectation::Equal {
                cert.failure = Some(format!("values differ at sample {i}"));
                return cert;
            }
            // One differing point settles a mutation test.
            break;
        }
    }
    cert.passed = match expectation {
        Expectation::Equal => cert.samples == cfg.samples,
        Expectation::Differ => cert.differing_samples > 0,
    };
    if !cert.passed && cert.failure.is_none() {
        cert.failure = Some("no sample point separates the two sides".into());
    }
    cert
}

fn failed(name: &str, expectation: Expectation, msg: String) -> Certificate {
    Certificate {
        name: name.into(),
        expectation,
        samples: 0,
        exact_samples: 0,
        differing_samples: 0,
        max_relative: 0.0,
        passed: false,
        failure: Some(msg),
    }
}

fn zero_pairs(p: &mut Point, trees: &[Tree]) -> Result<Pairs, EvalError> {
    trees.iter().map(|t| Ok((p.eval(t)?, Sampled::zero()))).collect()
}

/// Jet rewriting `field_{pivot + rest} -> D_rest(rhs)` in priority order.
pub struct RawRule {
    pub field: String,
    pub pivot: Vec<String>,
    pub rhs: Tree,
}

fn subtract(dirs: &[String], pivot: &[String]) -> Option<Vec<String>> {
    let mut rest = dirs.to_vec();
    for v in pivot {
        let i = rest.iter().position(|d| d == v)?;
        rest.remove(i);
    }
    Some(rest)
}

/// Reduction of trees modulo rules and all their derivatives.
pub struct Reducer<'a> {
    env: &'a RawEnv,
    rules: Vec<RawRule>,
    jets: HashMap<String, Option<Tree>>,
    memo: HashMap<*const Node, (Tree, Tree)>,
}

impl<'a> Reducer<'a> {
    pub fn new(env: &'a RawEnv, rules: Vec<RawRule>) -> Reducer<'a> {
        Reducer {
            env,
            rules,
            jets: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn replacement(&mut self, f: &str, dirs: &[String]) -> Option<Tree> {
        let key = tree::leaf_key(f, dirs);
        if let Some(r) = self.jets.get(&key) {
            return r.clone();
        }
        let mut found = None;
        for r in &self.rules {
            if r.field != f {
                continue;
            }
            if let Some(rest) = subtract(dirs, &r.pivot) {
                found = Some(self.env.diff_many(&r.rhs, &rest, None));
                break;
            }
        }
        let out = found.map(|t| self.reduce(&t));
        self.jets.insert(key, out.clone());
        out
    }

    pub fn reduce(&mut self, t: &Tree) -> Tree {
        let key = Rc::as_ptr(t);
        if let Some((_, r)) = self.memo.get(&key) {
            return r.clone();
        }
        let r = match &**t {
            Node::Jet(f, d) => self.replacement(f, d).unwrap_or_else(|| t.clone()),
            Node::Num(_) | Node::Var(_) | Node::Param(_) => t.clone(),
            Node::Add(v) => tree::add(v.iter().map(|a| self.reduce(a)).collect()),
            Node::Mul(v) => tree::mul(v.iter().map(|a| self.reduce(a)).collect()),
            Node::Pow(b, e) => tree::pow(self.reduce(b), self.reduce(e)),
            Node::Exp(a) => tree::exp(self.reduce(a)),
            Node::Log(a) => tree::log(self.reduce(a)),
        };
        // The input is kept alive so its address cannot be reused.
        self.memo.insert(key, (t.clone(), r.clone()));
        r
    }
}

/// Partial derivative with respect to the leaf with evaluation key `key`.
pub fn partial_leaf(t: &Tree, key: &str) -> Tree {
    let mut base = |leaf: &Tree| -> Tree {
        let k = match &**leaf {
            Node::Var(s) | Node::Param(s) => s.clone(),
            Node::Jet(f, d) => tree::leaf_key(f, d),
            _ => String::new(),
        };
        tree::num(if k == key { 1 } else { 0 })
    };
    tree::derive(t, &mut base)
}

/// Substitutes functions by trees; jets become derivatives through `chain`.
pub fn substitute_functions(env: &RawEnv, t: &Tree, bindings: &BTreeMap<String, Tree>, chain: Option<&RawChain>) -> Tree {
    let mut f = |leaf: &Tree| -> Option<Tree> {
        match &**leaf {
            Node::Jet(g, d) => bindings.get(g).map(|r| env.diff_many(r, d, chain)),
            _ => None,
        }
    };
    tree::substitute(t, &mut f)
}

/// Substitutes variables and parameters by trees.
pub fn substitute_symbols(t: &Tree, bindings: &BTreeMap<String, Tree>) -> Tree {
    let mut f = |leaf: &Tree| -> Option<Tree> {
        match &**leaf {
            Node::Var(s) | Node::Param(s) => bindings.get(s).cloned(),
            _ => None,
        }
    };
    tree::substitute(t, &mut f)
}

fn expr_tree(env: &RawEnv, e: &Expr) -> Result<Tree, EvalError> {
    Ok(env.parse(&render_text(e))?)
}

// ---------------------------------------------------------------------------
// Lax pairs and compatibility

/// Symbols of the 2+1 problem.
pub fn ch_env(n: u32) -> RawEnv {
    let mut env = RawEnv::new(&["x", "y", "t"]);
    env.add_function("psi", &["x", "y", "t"], true);
    env.add_function("lam", &["y", "t"], true);
    env.add_function("M", &["x", "y", "t"], true);
    for j in 1..=n {
        env.add_function(&format!("U{j}"), &["x", "y", "t"], true);
    }
    env
}

/// Text of the 2+1 Lax pair.
pub fn ch_pair_text(n: u32) -> (String, String) {
    let a: Vec<String> = (1..=n).map(|j| format!("lam^{}*U{j}", n - j + 1)).collect();
    let ax: Vec<String> = (1..=n).map(|j| format!("lam^{}*U{j}_x", n - j + 1)).collect();
    (
        "psi_xx - (1/4 - lam*M/2)*psi".into(),
        format!(
            "psi_y - lam^{n}*psi_t + ({})*psi_x - ({})/2*psi",
            a.join(" + "),
            ax.join(" + ")
        ),
    )
}

/// Text of the 2+1 hierarchy.
pub fn ch_hierarchy_text(n: u32) -> Vec<String> {
    let mut v = vec![
        format!("M_y - U{n}_x + U{n}_xxx"),
        "M_t - U1*M_x - 2*M*U1_x".to_string(),
    ];
    for j in 2..=n {
        v.push(format!("U{j}*M_x + 2*M*U{j}_x - U{0}_x + U{0}_xxx", j - 1));
    }
    v
}

/// Lax pair as trees.
pub struct RawPair {
    pub eigen: String,
    pub space: String,
    pub secondary: String,
    /// Parameter function, its variable and the ODE right-hand side.
    pub ode: Option<(String, String, Tree)>,
    pub spatial: Tree,
    pub temporal: Tree,
}

/// Cross-derivative residual, eliminating secondary derivatives first.
pub fn raw_cross_residual(pair: &RawPair, env: &RawEnv) -> Tree {
    let piv_xx = tree::leaf_key(&pair.eigen, &[pair.space.clone(), pair.space.clone()]);
    let piv_sec = tree::leaf_key(&pair.eigen, std::slice::from_ref(&pair.secondary));
    // The equations are linear in the pivots.
    let solve = |eq: &Tree, key: &str| {
        let a = partial_leaf(eq, key);
        let mut drop = |leaf: &Tree| match &**leaf {
            Node::Jet(f, d) if tree::leaf_key(f, d) == key => Some(tree::num(0)),
            _ => None,
        };
        tree::neg(tree::div(tree::substitute(eq, &mut drop), a))
    };
    let rule_xx = solve(&pair.spatial, &piv_xx);
    let rule_sec = solve(&pair.temporal, &piv_sec);
    let mut rules = Vec::new();
    if let Some((f, v, rhs)) = &pair.ode {
        rules.push(RawRule {
            field: f.clone(),
            pivot: vec![v.clone()],
            rhs: rhs.clone(),
        });
    }
    rules.push(RawRule {
        field: pair.eigen.clone(),
        pivot: vec![pair.secondary.clone()],
        rhs: rule_sec.clone(),
    });
    rules.push(RawRule {
        field: pair.eigen.clone(),
        pivot: vec![pair.space.clone(), pair.space.clone()],
        rhs: rule_xx.clone(),
    });
    let mut red = Reducer::new(env, rules);
    let lhs = red.reduce(&env.diff(&rule_xx, &pair.secondary, None));
    let step = red.reduce(&env.diff(&rule_sec, &pair.space, None));
    let rhs = red.reduce(&env.diff(&step, &pair.space, None));
    tree::sub(lhs, rhs)
}

fn compatibility_certificate(name: &str, raw: Tree, comp: &Compatibility, cfg: OracleConfig) -> Certificate {
    let groups: Vec<Expr> = comp
        .groups
        .iter()
        .map(|g| g.scale.mul(&g.factor).mul(&g.equation.lhs))
        .collect();
    certify(name, Expectation::Equal, cfg, &mut |p| {
        let kernel = p.eval_expr(&comp.residual)?;
        let mut sum = Sampled::zero();
        for g in &groups {
            sum = sum.add(&p.eval_expr(g)?);
        }
        Ok(vec![(p.eval(&raw)?, kernel.clone()), (kernel, sum)])
    })
}

/// The cross-derivative residual of the 2+1 pair recomputed on trees agrees
/// with the engine's, and the engine's residual is the sum of its graded
/// constraint groups.
pub fn certify_compatibility(n: u32, cfg: OracleConfig) -> Certificate {
    let name = format!("compatibility n={n}");
    let ctx = ch_context(n);
    let comp = match build_ch_lax(n, &ctx).and_then(|lp| compatibility(&lp, &ctx, Schedule::CrossRules)) {
        Ok(c) => c,
        Err(e) => return failed(&name, Expectation::Equal, e.to_string()),
    };
    let env = ch_env(n);
    let (s, t) = ch_pair_text(n);
    let pair = RawPair {
        eigen: "psi".into(),
        space: "x".into(),
        secondary: "y".into(),
        ode: None,
        spatial: env.parse(&s).expect("pair parses"),
        temporal: env.parse(&t).expect("pair parses"),
    };
    compatibility_certificate(&name, raw_cross_residual(&pair, &env), &comp, cfg)
}

// ---------------------------------------------------------------------------
// Symmetries

fn symmetry_env(n: u32) -> RawEnv {
    let mut env = ch_env(n);
    for f in ["A1", "B1", "C1"] {
        env.add_function(f, &["t"], false);
    }
    env
}

const VARS: [&str; 3] = ["x", "y", "t"];

struct RawCandidate {
    xi: [Tree; 3],
    coefficients: BTreeMap<String, Tree>,
}

fn raw_candidate(c: &SymmetryCandidate, env: &RawEnv) -> Result<RawCandidate, EvalError> {
    let mut coefficients = BTreeMap::new();
    coefficients.insert("psi".to_string(), expr_tree(env, &c.phi1)?);
    coefficients.insert("lam".to_string(), expr_tree(env, &c.phi2)?);
    coefficients.insert("M".to_string(), expr_tree(env, &c.theta0)?);
    for (j, th) in c.theta.iter().enumerate() {
        coefficients.insert(format!("U{}", j + 1), expr_tree(env, th)?);
    }
    Ok(RawCandidate {
        xi: [expr_tree(env, &c.xi[0])?, expr_tree(env, &c.xi[1])?, expr_tree(env, &c.xi[2])?],
        coefficients,
    })
}

impl RawCandidate {
    fn characteristic(&self, f: &str, env: &RawEnv) -> Tree {
        let deps = &env.funcs[f].deps;
        let mut terms = vec![self.coefficients[f].clone()];
        for (k, v) in VARS.iter().enumerate() {
            if deps.iter().any(|d| d == v) {
                terms.push(tree::neg(tree::mul(vec![self.xi[k].clone(), env.jet(f, &[v.to_string()])])));
            }
        }
        tree::add(terms)
    }

    /// `D_J(Q) + sum_k xi_k f_{J,k}`.
    fn prolonged(&self, f: &str, dirs: &[String], env: &RawEnv) -> Tree {
        let deps = &env.funcs[f].deps;
        let mut terms = vec![env.diff_many(&self.characteristic(f, env), dirs, None)];
        for (k, v) in VARS.iter().enumerate() {
            if deps.iter().any(|d| d == v) {
                let mut d = dirs.to_vec();
                d.push(v.to_string());
                terms.push(tree::mul(vec![self.xi[k].clone(), env.jet(f, &d)]));
            }
        }
        tree::add(terms)
    }

    fn act(&self, e: &Tree, env: &RawEnv) -> Tree {
        let mut terms = Vec::new();
        for (k, v) in VARS.iter().enumerate() {
            let d = partial_leaf(e, v);
            if !tree::is_zero(&d) {
                terms.push(tree::mul(vec![self.xi[k].clone(), d]));
            }
        }
        let mut jets = Vec::new();
        let mut stack = vec![e.clone()];
        let mut seen = std::collections::HashSet::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(Rc::as_ptr(&n)) {
                continue;
            }
            match &*n {
                Node::Jet(f, d) if self.coefficients.contains_key(f) => jets.push((f.clone(), d.clone())),
                Node::Add(v) | Node::Mul(v) => stack.extend(v.iter().cloned()),
                Node::Pow(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
                Node::Exp(a) | Node::Log(a) => stack.push(a.clone()),
                _ => {}
            }
        }
        jets.sort();
        jets.dedup();
        for (f, d) in jets {
            let coeff = self.prolonged(&f, &d, env);
            terms.push(tree::mul(vec![coeff, partial_leaf(e, &tree::leaf_key(&f, &d))]));
        }
        tree::add(terms)
    }
}

fn raw_rules(rules: &[JetRule], env: &RawEnv) -> Result<Vec<RawRule>, EvalError> {
    rules
        .iter()
        .map(|r| {
            Ok(RawRule {
                field: r.field.to_string(),
                pivot: r.pivot.expanded().iter().map(|s| s.to_string()).collect(),
                rhs: expr_tree(env, &r.rhs)?,
            })
        })
        .collect()
}

fn symmetry_trees(c: &SymmetryCandidate, use_side: bool) -> Result<(RawEnv, Vec<Tree>), EvalError> {
    let ctx = symmetry_context(c.n)?;
    let target = SymmetryTarget::ch(c.n, &ctx).map_err(|e| EvalError::Failed(e.to_string()))?;
    let mut rules = if c.mode == Mode::Classical {
        Vec::new()
    } else {
        invariant_surface_conditions(c, &target, &ctx)
            .map_err(|e| EvalError::Failed(e.to_string()))?
            .rules
    };
    if use_side {
        for s in &c.side {
            rules.push(JetRule {
                field: s.field.clone(),
                pivot: crate::expr::MultiIndex::empty().with(&s.var, 1),
                rhs: s.rhs.clone(),
                source: "side constraint".into(),
            });
        }
    }
    let env = symmetry_env(c.n);
    let raw = raw_candidate(c, &env)?;
    let raw_rules = raw_rules(&rules, &env)?;
    let mut red = Reducer::new(&env, raw_rules);
    let (s, t) = ch_pair_text(c.n);
    let niso = format!("lam_y - lam^{}*lam_t", c.n);
    let mut out = Vec::new();
    for text in [s, t, niso] {
        let eq = env.parse(&text)?;
        let acted = raw.act(&eq, &env);
        out.push(red.reduce(&acted));
        out.push(red.reduce(&eq));
    }
    out.push(red.reduce(&raw.prolonged("lam", &["x".to_string()], &env)));
    if c.mode != Mode::Classical {
        let fields: Vec<String> = raw.coefficients.keys().cloned().collect();
        for f in fields {
            out.push(red.reduce(&raw.characteristic(&f, &env)));
        }
    }
    Ok((env, out))
}

/// Reduced `pr X(F)` for the spatial, temporal and non-isospectral
/// equations, the equations themselves and the invariant surface conditions,
/// all reduced modulo the mode's solved jets and recomputed on trees.
pub fn certify_symmetry(name: &str, c: &SymmetryCandidate, use_side: bool, expectation: Expectation, cfg: OracleConfig) -> Certificate {
    let trees = match symmetry_trees(c, use_side) {
        Ok((_, t)) => t,
        Err(EvalError::Failed(m)) => return failed(name, expectation, m),
        Err(EvalError::Resample) => return failed(name, expectation, "unexpected resample".into()),
    };
    certify(name, expectation, cfg, &mut |p| zero_pairs(p, &trees))
}

// ---------------------------------------------------------------------------
// Reductions

/// Tree environment of a reduction map in the original variables.
pub struct RawMap {
    pub env: RawEnv,
    pub chain: RawChain,
    pub z: [Tree; 2],
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(|s| s.as_str()).collect()
}

impl RawMap {
    pub fn new(map: &ReductionMap) -> Result<RawMap, EvalError> {
        let n = map.n;
        let mut env = symmetry_env(n);
        env.add_var("z1");
        env.add_var("z2");
        for s in &map.specialization {
            let v = env.parse(&s.value)?;
            env.defs.insert(s.name.clone(), v);
        }
        for (name, text) in [
            ("S1", "A1 + B1*exp(x) + C1*exp(-x)"),
            ("S2", "a2*y + b2"),
            ("S3", "a3*t + b3"),
        ] {
            let v = env.parse(text)?;
            env.defs.insert(name.into(), v);
        }
        for a in &map.aux {
            env.add_function(&a.name, &strs(&a.deps), false);
        }
        for d in &map.definitions {
            let v = env.parse(&d.value)?;
            env.defs.insert(d.name.clone(), v);
        }
        for d in &map.derived {
            let of = env.parse(&d.of)?;
            let v = env.diff(&of, &d.var, None);
            env.defs.insert(d.name.clone(), v);
        }
        for a in &map.aux {
            for r in &a.rules {
                let v = env.parse(&r.value)?;
                env.funcs.get_mut(&a.name).expect("aux declared").rules.insert(r.name.clone(), v);
            }
        }
        env.add_function("Phi", &["z1", "z2"], true);
        env.add_function("H", &["z1", "z2"], true);
        for j in 1..=n {
            env.add_function(&format!("V{j}"), &["z1", "z2"], true);
        }
        if let ParameterRelation::Field { symbol, deps, .. } = &map.parameter {
            env.add_function(symbol, &strs(deps), true);
        }
        for a in &map.aliases {
            env.add_function(&a.name, &strs(&a.deps), false);
        }
        let mut chain = RawChain::new();
        for (k, row) in map.jacobian.iter().enumerate() {
            for (i, v) in VARS.iter().enumerate() {
                chain.insert((format!("z{}", k + 1), v.to_string()), env.parse(&row[i])?);
            }
        }
        let z = [env.parse(&map.z[0])?, env.parse(&map.z[1])?];
        Ok(RawMap { env, chain, z })
    }

    fn parameter(&self, map: &ReductionMap) -> Result<Tree, EvalError> {
        Ok(self
            .env
            .parse(&format!("({})*{}", map.parameter.factor(), map.parameter.symbol()))?)
    }

    fn bindings(&self, map: &ReductionMap) -> Result<BTreeMap<String, Tree>, EvalError> {
        let mut b = BTreeMap::new();
        b.insert("psi".to_string(), self.env.parse(&format!("({})*Phi", map.psi))?);
        b.insert("lam".to_string(), self.parameter(map)?);
        for f in &map.fields {
            b.insert(
                f.field.clone(),
                self.env
                    .parse(&format!("({})*({}) + ({})", f.prefactor, f.reduced, f.shift))?,
            );
        }
        Ok(b)
    }

    fn ode_reduce(&self, map: &ReductionMap, t: &Tree) -> Result<Tree, EvalError> {
        let Some(ode) = map.parameter.ode() else {
            return Ok(t.clone());
        };
        let rule = RawRule {
            field: map.parameter.symbol().into(),
            pivot: vec!["z2".into()],
            rhs: self.env.parse(ode)?,
        };
        Ok(Reducer::new(&self.env, vec![rule]).reduce(t))
    }

    fn to_original(&self, map: &ReductionMap, t: &Tree) -> Result<Tree, EvalError> {
        let mut sym = BTreeMap::new();
        sym.insert("z1".to_string(), self.z[0].clone());
        sym.insert("z2".to_string(), self.z[1].clone());
        let mut aliases = BTreeMap::new();
        for a in &map.aliases {
            aliases.insert(a.name.clone(), self.env.parse(&a.value)?);
        }
        let t = substitute_symbols(t, &sym);
        Ok(substitute_functions(&self.env, &t, &aliases, None))
    }

    fn finish(&self, map: &ReductionMap, t: &Tree) -> Result<Tree, EvalError> {
        let t = self.ode_reduce(map, t)?;
        self.to_original(map, &t)
    }
}

fn map_certificate(
    name: &str,
    expectation: Expectation,
    cfg: OracleConfig,
    build: impl FnOnce() -> Result<Vec<Tree>, EvalError>,
) -> Certificate {
    match build() {
        Ok(trees) => certify(name, expectation, cfg, &mut |p| zero_pairs(p, &trees)),
        Err(EvalError::Failed(m)) => failed(name, expectation, m),
        Err(EvalError::Resample) => failed(name, expectation, "unexpected resample".into()),
    }
}

/// Jacobian entries are the derivatives of `z1, z2` and their mixed partials commute.
pub fn certify_jacobian(map: &ReductionMap, cfg: OracleConfig) -> Certificate {
    let name = format!("{} n={} jacobian", map.id, map.n);
    map_certificate(&name, Expectation::Equal, cfg, || {
        let raw = RawMap::new(map)?;
        let mut out = Vec::new();
        for k in 0..2 {
            let z = format!("z{}", k + 1);
            let entries: Vec<Tree> = VARS.iter().map(|v| raw.chain[&(z.clone(), v.to_string())].clone()).collect();
            for (i, v) in VARS.iter().enumerate() {
                out.push(tree::sub(raw.env.diff(&raw.z[k], v, None), entries[i].clone()));
            }
            for a in 0..3 {
                for b in a + 1..3 {
                    out.push(tree::sub(
                        raw.env.diff(&entries[a], VARS[b], None),
                        raw.env.diff(&entries[b], VARS[a], None),
                    ));
                }
            }
        }
        Ok(out)
    })
}

/// The generating symmetry annihilates every invariant of the map.
pub fn certify_invariance(map: &ReductionMap, cfg: OracleConfig) -> Certificate {
    let name = format!("{} n={} invariance", map.id, map.n);
    map_certificate(&name, Expectation::Equal, cfg, || {
        let raw = RawMap::new(map)?;
        let c = map.candidate()?;
        let cand = raw_candidate(&c, &raw.env)?;
        let env = &raw.env;
        let mut sym = BTreeMap::new();
        sym.insert("z1".to_string(), raw.z[0].clone());
        sym.insert("z2".to_string(), raw.z[1].clone());
        let factor = substitute_symbols(&env.parse(map.parameter.factor())?, &sym);
        let reduced_param = tree::div(env.parse("lam")?, factor);
        let mut funcs = BTreeMap::new();
        match &map.parameter {
            ParameterRelation::Constant { symbol, .. } => {
                sym.insert(symbol.clone(), reduced_param.clone());
            }
            ParameterRelation::Field { symbol, .. } => {
                funcs.insert(symbol.clone(), reduced_param.clone());
            }
        }
        for b in &map.invariant_bindings {
            sym.insert(b.name.clone(), env.parse(&b.value)?);
        }
        let prep = |text: &str| -> Result<Tree, EvalError> {
            let t = substitute_symbols(&env.parse(text)?, &sym);
            Ok(substitute_functions(env, &t, &funcs, None))
        };
        let mut invariants = vec![raw.z[0].clone(), raw.z[1].clone(), reduced_param.clone()];
        invariants.push(tree::div(env.parse("psi")?, prep(&map.psi)?));
        for f in &map.fields {
            invariants.push(tree::div(
                tree::sub(env.parse(&f.field)?, prep(&f.shift)?),
                prep(&f.prefactor)?,
            ));
        }
        let mut out = Vec::new();
        for inv in invariants {
            let mut terms = Vec::new();
            for (k, v) in VARS.iter().enumerate() {
                terms.push(tree::mul(vec![cand.xi[k].clone(), env.diff_frozen(&inv, v)]));
            }
            for (f, q) in &cand.coefficients {
                terms.push(tree::mul(vec![q.clone(), partial_leaf(&inv, f)]));
            }
            out.push(tree::add(terms));
        }
        Ok(out)
    })
}

fn pull_back_trees(map: &ReductionMap, expected: [&str; 2]) -> Result<Vec<(Tree, Tree, String)>, EvalError> {
    let raw = RawMap::new(map)?;
    let b = raw.bindings(map)?;
    let (s, t) = ch_pair_text(map.n);
    let pivots = ["Phi_z1,z1", "Phi_z2"];
    let mut out = Vec::new();
    for (k, text) in [s, t].iter().enumerate() {
        let eq = raw.env.parse(text)?;
        let sub = substitute_functions(&raw.env, &eq, &b, Some(&raw.chain));
        let l = raw.finish(map, &sub)?;
        let r = raw.finish(map, &raw.env.parse(expected[k])?)?;
        out.push((l, r, pivots[k].to_string()));
    }
    Ok(out)
}

fn pull_back_pairs(p: &mut Point, trees: &[(Tree, Tree, String)]) -> Result<Pairs, EvalError> {
    let mut pairs = Vec::new();
    for (l, r, pivot) in trees {
        let is_phi = |n: &Node| matches!(n, Node::Jet(f, _) if f == "Phi");
        let mut keys = tree::leaves(l, &is_phi);
        keys.extend(tree::leaves(r, &is_phi));
        keys.sort();
        keys.dedup();
        let at = |p: &mut Point, key: &str| -> Result<(Sampled, Sampled), EvalError> {
            let o = keys
                .iter()
                .map(|k| (k.clone(), Number::int(if k == key { 1 } else { 0 })))
                .collect();
            p.set_overrides(o);
            let v = (p.eval(l)?, p.eval(r)?);
            p.set_overrides(BTreeMap::new());
            Ok(v)
        };
        let (lp, rp) = at(p, pivot)?;
        // A cofactor vanishing at the point says nothing; an identically
        // vanishing one exhausts the attempts and fails the certificate.
        if compare(&lp, &Sampled::zero()).0 {
            return Err(EvalError::Resample);
        }
        for k in &keys {
            let (lk, rk) = at(p, k)?;
            pairs.push((lk.mul(&rp), lp.mul(&rk)));
        }
    }
    Ok(pairs)
}

/// The substituted pair is proportional to the expected reduced pair: every
/// eigenfunction-jet coefficient of `substituted` is `c` times that of
/// `expected`, with `c` read off the pivot and nonzero at every point.
pub fn certify_pull_back(
    name: &str,
    map: &ReductionMap,
    expected: [&str; 2],
    expectation: Expectation,
    cfg: OracleConfig,
) -> Certificate {
    let trees = match pull_back_trees(map, expected) {
        Ok(t) => t,
        Err(EvalError::Failed(m)) => return failed(name, expectation, m),
        Err(EvalError::Resample) => return failed(name, expectation, "unexpected resample".into()),
    };
    certify(name, expectation, cfg, &mut |p| pull_back_pairs(p, &trees))
}

/// The non-isospectral condition vanishes after the parameter relation and,
/// for a parameter field, its ODE.
pub fn certify_parameter(map: &ReductionMap, cfg: OracleConfig) -> Certificate {
    let name = format!("{} n={} parameter relation", map.id, map.n);
    map_certificate(&name, Expectation::Equal, cfg, || {
        let raw = RawMap::new(map)?;
        let niso = raw.env.parse(&format!("lam_y - lam^{}*lam_t", map.n))?;
        let mut b = BTreeMap::new();
        b.insert("lam".to_string(), raw.parameter(map)?);
        let sub = substitute_functions(&raw.env, &niso, &b, Some(&raw.chain));
        Ok(vec![raw.finish(map, &sub)?])
    })
}

/// Cross-derivative residual of the reduced pair recomputed on trees.
pub fn certify_reduced_compatibility(map: &ReductionMap, expected: &ExpectedReduction, cfg: OracleConfig) -> Certificate {
    let name = format!("{} n={} reduced compatibility", map.id, map.n);
    let kernel = (|| -> Result<Compatibility, String> {
        let ctx: Context = reduced_context(map, expected).map_err(|e| e.to_string())?;
        let lp = reduced_lax_pair(map, expected, &ctx).map_err(|e| e.to_string())?;
        compatibility(&lp, &ctx, Schedule::CrossRules).map_err(|e| e.to_string())
    })();
    let comp = match kernel {
        Ok(c) => c,
        Err(m) => return failed(&name, Expectation::Equal, m),
    };
    let raw = (|| -> Result<Tree, EvalError> {
        let mut env = RawEnv::new(&["z1", "z2"]);
        env.add_function("Phi", &["z1", "z2"], true);
        env.add_function("H", &["z1", "z2"], true);
        for j in 1..=map.n {
            env.add_function(&format!("V{j}"), &["z1", "z2"], true);
        }
        if let ParameterRelation::Field { symbol, deps, .. } = &map.parameter {
            env.add_function(symbol, &strs(deps), true);
        }
        for a in &map.aliases {
            env.add_function(&a.name, &strs(&a.deps), false);
        }
        let ode = match map.parameter.ode() {
            Some(o) => Some((map.parameter.symbol().to_string(), "z2".to_string(), env.parse(o)?)),
            None => None,
        };
        let pair = RawPair {
            eigen: "Phi".into(),
            space: "z1".into(),
            secondary: "z2".into(),
            ode,
            spatial: env.parse(&expected.spatial)?,
            temporal: env.parse(&expected.temporal)?,
        };
        Ok(raw_cross_residual(&pair, &env))
    })();
    match raw {
        Ok(t) => compatibility_certificate(&name, t, &comp, cfg),
        Err(EvalError::Failed(m)) => failed(&name, Expectation::Equal, m),
        Err(EvalError::Resample) => failed(&name, Expectation::Equal, "unexpected resample".into()),
    }
}

/// The stationary solution satisfies the hierarchy (or, with `mutate`, a
/// time-dependent amplitude breaks it).
pub fn certify_section6(n: u32, mutate: bool, cfg: OracleConfig) -> Certificate {
    let (name, expectation) = if mutate {
        (format!("stationary solution n={n} with H0(t)"), Expectation::Differ)
    } else {
        (format!("stationary solution n={n}"), Expectation::Equal)
    };
    map_certificate(&name, expectation, cfg, || {
        let mut env = ch_env(n);
        env.add_var("z1");
        env.add_var("z2");
        for j in 1..=n {
            env.add_function(&format!("V{j}"), &["z1", "z2"], true);
        }
        env.add_function("H0t", &["t"], false);
        let mut chain = RawChain::new();
        for (z, v) in [("z1", "y"), ("z2", "t")] {
            for w in VARS {
                chain.insert((z.to_string(), w.to_string()), tree::num(if v == w { 1 } else { 0 }));
            }
        }
        let h0 = if mutate { "H0t" } else { "H0" };
        let mut b = BTreeMap::new();
        b.insert("M".to_string(), env.parse(&format!("{h0}*exp(-2*x)"))?);
        for j in 1..=n {
            b.insert(format!("U{j}"), env.parse(&format!("exp(x)*V{j}"))?);
        }
        let mut back = BTreeMap::new();
        back.insert("z1".to_string(), env.parse("y")?);
        back.insert("z2".to_string(), env.parse("t")?);
        let mut out = Vec::new();
        for text in ch_hierarchy_text(n) {
            let eq = env.parse(&text)?;
            let sub = substitute_functions(&env, &eq, &b, Some(&chain));
            out.push(substitute_symbols(&sub, &back));
        }
        Ok(out)
    })
}

/// Certificates of one reduction case: Jacobian, invariance, pull-back,
/// parameter relation and reduced compatibility.
pub fn certify_case(spec: &CaseSpec, cfg: OracleConfig) -> Vec<Certificate> {
    let map = &spec.map;
    let mut out = vec![certify_jacobian(map, cfg), certify_invariance(map, cfg)];
    if let Some(exp) = &spec.expected {
        let name = format!("{} n={} pull-back", map.id, map.n);
        out.push(certify_pull_back(&name, map, [&exp.spatial, &exp.temporal], Expectation::Equal, cfg));
        out.push(certify_parameter(map, cfg));
        out.push(certify_reduced_compatibility(map, exp, cfg));
    }
    out
}

/// Pull-back with the eigenfunction prefactor multiplied by `1 + x`; the
/// oracle must separate it from the registered reduced pair.
pub fn certify_case_mutation(spec: &CaseSpec, cfg: OracleConfig) -> Certificate {
    let mut map = spec.map.clone();
    map.psi = format!("({})*(1 + x)", map.psi);
    let name = format!("{} n={} mutated prefactor", map.id, map.n);
    match &spec.expected {
        Some(exp) => certify_pull_back(&name, &map, [&exp.spatial, &exp.temporal], Expectation::Differ, cfg),
        None => failed(&name, Expectation::Differ, "no reduced pair".into()),
    }
}

/// Pull-back of the second-kind map `II.k` against the reduced pair of `I.k`.
pub fn certify_appendix(k: u32, n: u32, mutate: bool, cfg: OracleConfig) -> Certificate {
    let expectation = if mutate { Expectation::Differ } else { Expectation::Equal };
    let name = format!("II.{k} n={n} equivalent to I.{k}{}", if mutate { " (mutated)" } else { "" });
    let pair = find_case(&format!("I.{k}"), n).and_then(|r| Ok((r, find_case(&format!("II.{k}"), n)?)));
    let (reference, mut case) = match pair {
        Ok(p) => p,
        Err(e) => return failed(&name, expectation, e.to_string()),
    };
    if mutate {
        case.map.psi = case.map.psi.replace("*(exp(x)*Q)^(1/2)", "");
    }
    match &reference.expected {
        Some(exp) => certify_pull_back(&name, &case.map, [&exp.spatial, &exp.temporal], expectation, cfg),
        None => failed(&name, expectation, "no reduced pair".into()),
    }
}

/// The three symmetry families and their mutations: `xi1` without side
/// constraints and `xi3` with the sign of `theta0` flipped must both fail.
pub fn certify_symmetries(n: u32, cfg: OracleConfig) -> Vec<Certificate> {
    let ctx = match symmetry_context(n) {
        Ok(c) => c,
        Err(e) => return vec![failed(&format!("symmetry context n={n}"), Expectation::Equal, e.to_string())],
    };
    let mut out = Vec::new();
    let mut push = |name: String, c: Result<SymmetryCandidate, KernelError>, side: bool, ex: Expectation| {
        out.push(match c {
            Ok(c) => certify_symmetry(&name, &c, side, ex, cfg),
            Err(e) => failed(&name, ex, e.to_string()),
        })
    };
    push(format!("xi3 family n={n}"), family_xi3(n, &ctx), false, Expectation::Equal);
    push(format!("xi2 family n={n}"), family_xi2(n, &ctx), false, Expectation::Equal);
    for sign in [1, -1] {
        push(
            format!("xi1 family ({sign:+}) n={n} with side constraints"),
            family_xi1(n, sign, true, &ctx),
            true,
            Expectation::Equal,
        );
        push(
            format!("xi1 family ({sign:+}) n={n} without side constraints"),
            family_xi1(n, sign, false, &ctx),
            false,
            Expectation::Differ,
        );
    }
    let flipped = family_xi3(n, &ctx).map(|mut c| {
        c.theta0 = c.theta0.neg();
        c
    });
    push(format!("xi3 family n={n} with theta0 negated"), flipped, false, Expectation::Differ);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OracleConfig {
        OracleConfig { samples: 10, seed: 7 }
    }

    #[test]
    fn identical_trees_agree_exactly() {
        let env = RawEnv::new(&["x"]);
        let a = env.parse("(x + 1)^2").unwrap();
        let b = env.parse("x^2 + 2*x + 1").unwrap();
        let c = certify("square", Expectation::Equal, cfg(), &mut |p| Ok(vec![(p.eval(&a)?, p.eval(&b)?)]));
        assert!(c.passed);
        assert_eq!(c.exact_samples, 10);
    }

    #[test]
    fn different_trees_are_separated() {
        let env = RawEnv::new(&["x"]);
        let a = env.parse("(x + 1)^2").unwrap();
        let b = env.parse("x^2 + 1").unwrap();
        let c = certify("square", Expectation::Differ, cfg(), &mut |p| Ok(vec![(p.eval(&a)?, p.eval(&b)?)]));
        assert!(c.passed);
    }

    #[test]
    fn compatibility_n1() {
        assert!(certify_compatibility(1, cfg()).passed);
    }
}
