//! Algebraic invariants of the kernel, the operators and the symmetry engine
//! on randomly generated inputs.

use chlax_core::expr::{
    numeric_eval, parse, render_text, Assignment, Context, Equation, Expr, FnKind, MultiIndex, Number, Substitution,
    sym,
};
use chlax_core::lax::{apply_j, apply_k};
use chlax_core::reduction::find_case;
use chlax_core::symmetry::{
    determining_expressions, prolong_direct, prolong_recursive, symmetry_context, verify_symmetry, Mode,
    SymmetryCandidate, SymmetryOptions, SymmetryTarget,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ctx() -> Context {
    let mut c = Context::with_vars(&["x", "y", "t"]);
    for f in ["M", "U1", "psi"] {
        c.add_function(f, &["x", "y", "t"], FnKind::Field);
    }
    c
}

const LEAVES: &[&str] = &[
    "x", "y", "t", "a", "M", "M_x", "M_y", "M_t", "U1", "U1_x", "U1_xx", "psi", "psi_x", "psi_t", "2", "3", "1/2",
];

const EXP_LEAVES: &[&str] = &["exp(x)", "exp(-t)", "exp(2*y)", "exp(a*x)"];

/// Random expression text over [`LEAVES`], optionally with exponentials.
fn expr_text(with_exp: bool) -> impl Strategy<Value = String> {
    let mut leaves: Vec<&'static str> = LEAVES.to_vec();
    if with_exp {
        leaves.extend_from_slice(EXP_LEAVES);
    }
    let leaf = proptest::sample::select(leaves).prop_map(String::from);
    let simple = leaf.clone();
    leaf.prop_recursive(3, 8, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), simple.clone()).prop_map(|(a, b)| format!("({a})/(1 + ({b})^2)")),
            inner.prop_map(|a| format!("({a})^2")),
        ]
    })
}

fn p(s: &str, c: &Context) -> Expr {
    parse(s, c).unwrap_or_else(|e| panic!("`{s}`: {e}"))
}

fn random_point(es: &[&Expr], seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut asg = Assignment::new();
    for a in es.iter().flat_map(|e| e.base_atoms()) {
        let num: i64 = rng.gen_range(-20..=20);
        let den: i64 = rng.gen_range(1..=7);
        asg.insert(a, Number::Exact(BigRational::new(BigInt::from(num), BigInt::from(den))));
    }
    asg
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn normal_forms_are_fixed_points(s in expr_text(true)) {
        let c = ctx();
        let e = p(&s, &c);
        prop_assert_eq!(p(&render_text(&e), &c), e.clone());
        if let Some(n) = Equation::normalize(&e, &c) {
            let again = Equation::normalize(&n.equation.lhs, &c).unwrap();
            prop_assert_eq!(again.equation, n.equation);
        }
    }

    #[test]
    fn total_derivatives_commute(s in expr_text(true), u in 0usize..3, v in 0usize..3) {
        let c = ctx();
        let e = p(&s, &c);
        let vars = ["x", "y", "t"];
        let uv = c.diff(&c.diff(&e, vars[u]).unwrap(), vars[v]).unwrap();
        let vu = c.diff(&c.diff(&e, vars[v]).unwrap(), vars[u]).unwrap();
        prop_assert_eq!(uv, vu);
    }

    #[test]
    fn derivative_is_linear(s1 in expr_text(true), s2 in expr_text(true), a in -5i64..5, b in 1i64..5) {
        let c = ctx();
        let (e1, e2) = (p(&s1, &c), p(&s2, &c));
        let (ka, kb) = (Expr::int(a), Expr::frac(1, b));
        let lhs = c.diff(&ka.mul(&e1).add(&kb.mul(&e2)), "x").unwrap();
        let rhs = ka.mul(&c.diff(&e1, "x").unwrap()).add(&kb.mul(&c.diff(&e2, "x").unwrap()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn recursion_operators_are_linear(s1 in expr_text(false), s2 in expr_text(false), a in -4i64..4, b in 1i64..4) {
        let c = ctx();
        let (f1, f2) = (p(&s1, &c), p(&s2, &c));
        let m = p("M", &c);
        let (ka, kb) = (Expr::int(a), Expr::frac(1, b));
        let combo = ka.mul(&f1).add(&kb.mul(&f2));
        let j = |f: &Expr| apply_j(f, &c, "x").unwrap();
        let k = |f: &Expr| apply_k(f, &m, &c, "x").unwrap();
        prop_assert_eq!(j(&combo), ka.mul(&j(&f1)).add(&kb.mul(&j(&f2))));
        prop_assert_eq!(k(&combo), ka.mul(&k(&f1)).add(&kb.mul(&k(&f2))));
    }

    #[test]
    fn symbolic_zeros_evaluate_to_zero(s1 in expr_text(false), s2 in expr_text(false), seed in any::<u64>()) {
        let c = ctx();
        let (e1, e2) = (p(&s1, &c), p(&s2, &c));
        let sum = e1.add(&e2);
        let z = sum.mul(&sum).sub(&e1.mul(&e1)).sub(&Expr::int(2).mul(&e1).mul(&e2)).sub(&e2.mul(&e2));
        prop_assert!(z.is_zero());
        // Evaluate the unexpanded pieces separately so the check is not circular.
        let mut evaluated = 0;
        for k in 0..100u64 {
            let asg = random_point(&[&e1, &e2], seed ^ k);
            let v = |e: &Expr| numeric_eval(e, &asg);
            let (Ok(a), Ok(b), Ok(s)) = (v(&e1), v(&e2), v(&sum)) else { continue };
            let lhs = s.mul(&s);
            let rhs = a.mul(&a).add(&Number::int(2).mul(&a).mul(&b)).add(&b.mul(&b));
            prop_assert!(lhs.sub(&rhs).is_exact_zero());
            evaluated += 1;
        }
        prop_assert!(evaluated > 0);
    }

    #[test]
    fn nonzero_expressions_are_seen_by_the_oracle(s in expr_text(false), seed in any::<u64>()) {
        let c = ctx();
        let e = p(&s, &c);
        prop_assume!(!e.is_zero());
        let hit = (0..100u64).any(|k| {
            numeric_eval(&e, &random_point(&[&e], seed ^ k)).map(|v| !v.is_exact_zero()).unwrap_or(false)
        });
        if !hit {
            eprintln!("no nonzero sample found for {}", render_text(&e));
        }
    }

    #[test]
    fn radical_powers_are_order_independent(k1 in 1i64..4, k2 in 1i64..4, k3 in 1i64..4) {
        let c = symmetry_context(1).unwrap();
        let e = p("(A1^2 - 4*B1*C1)^(1/2)", &c);
        let pw = |k: i64| e.pow_int(k).unwrap();
        let left = pw(k1).mul(&pw(k2)).mul(&pw(k3));
        let right = pw(k3).mul(&pw(k1).mul(&pw(k2)));
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(left, pw(k1 + k2 + k3));
    }
}

proptest! {
    #![proptest_config(config(50))]

    /// For the I.1 map, differentiating after substitution agrees with
    /// substituting the derivative.
    #[test]
    fn substitution_commutes_with_time_derivative(s in jet_text()) {
        let case = find_case("I.1", 1).unwrap();
        let c = case.map.old_context().unwrap();
        let sub = case.map.substitution(&c).unwrap();
        let chain = case.map.chain(&c).unwrap();
        let e = p(&s, &c);
        let lhs = c.diff_chain(&c.substitute(&e, &sub).unwrap(), "t", Some(&chain)).unwrap();
        let rhs = c.substitute(&c.diff(&e, "t").unwrap(), &sub).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

/// Polynomials in the jets of `psi`, `M` and `U1`.
fn jet_text() -> impl Strategy<Value = String> {
    let leaf = proptest::sample::select(vec!["psi", "psi_x", "psi_xx", "M", "M_x", "M_y", "U1", "U1_x", "x", "2"])
        .prop_map(String::from);
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a})*({b})")),
        ]
    })
}

/// Classical candidates with polynomial infinitesimals.
fn candidate(n: u32, texts: &[String; 6], c: &Context) -> SymmetryCandidate {
    let mut cand = SymmetryCandidate::zero(n, Mode::Classical);
    cand.xi = [p(&texts[0], c), p(&texts[1], c), p(&texts[2], c)];
    cand.phi1 = p(&format!("({})*psi", texts[3]), c);
    cand.theta0 = p(&texts[4], c);
    cand.theta = vec![p(&texts[5], c); n as usize];
    cand
}

fn poly_text() -> impl Strategy<Value = String> {
    let leaf = proptest::sample::select(vec!["x", "y", "t", "M", "U1", "1", "2", "-1"]).prop_map(String::from);
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a})*({b})")),
        ]
    })
}

fn six() -> impl Strategy<Value = [String; 6]> {
    [poly_text(), poly_text(), poly_text(), poly_text(), poly_text(), poly_text()]
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn classical_residuals_are_linear(a in six(), b in six()) {
        let c = symmetry_context(1).unwrap();
        let target = SymmetryTarget::ch(1, &c).unwrap();
        let opts = SymmetryOptions::default();
        let (ca, cb) = (candidate(1, &a, &c), candidate(1, &b, &c));
        let ra = determining_expressions(&ca, &target, opts, &c).unwrap();
        let rb = determining_expressions(&cb, &target, opts, &c).unwrap();
        let rs = determining_expressions(&ca.add(&cb), &target, opts, &c).unwrap();
        for ((x, y), s) in ra.iter().zip(&rb).zip(&rs) {
            if x.0.ends_with("consistency") {
                continue;
            }
            prop_assert_eq!(&s.1, &x.1.add(&y.1), "{}", s.0);
        }
    }

    #[test]
    fn prolongation_recursion_matches_direct_expansion(a in six()) {
        let c = symmetry_context(1).unwrap();
        let cand = candidate(1, &a, &c);
        let x = sym("x");
        let t = sym("t");
        for idx in [MultiIndex::empty().with(&x, 1), MultiIndex::empty().with(&x, 2), MultiIndex::empty().with(&x, 1).with(&t, 1)] {
            for f in ["psi", "M", "U1"] {
                prop_assert_eq!(
                    prolong_recursive(&cand, f, &idx, &c).unwrap(),
                    prolong_direct(&cand, f, &idx, &c).unwrap()
                );
            }
        }
    }
}

#[test]
fn rescaled_symmetry_still_passes() {
    let c = symmetry_context(1).unwrap();
    let target = SymmetryTarget::ch(1, &c).unwrap();
    let mut cand = SymmetryCandidate::zero(1, Mode::Classical);
    cand.phi1 = p("psi", &c);
    for k in [Expr::int(1), Expr::frac(-3, 2), Expr::int(7)] {
        let r = verify_symmetry(&cand.scale(&k), &target, SymmetryOptions::default(), &c).unwrap();
        assert!(r.passed, "{:?}", r.residuals);
    }
}

#[test]
fn rendering_is_stable() {
    let c = ctx();
    let e = p("(M_x + exp(x)*U1)^2/(1 + psi^2) - a*t", &c);
    let first = render_text(&e);
    for _ in 0..100 {
        assert_eq!(render_text(&p(&first, &c)), first);
    }
}

#[test]
fn radical_relation_rewrites_squares() {
    let c = symmetry_context(1).unwrap();
    let e = p("(A1^2 - 4*B1*C1)^(1/2)", &c);
    assert_eq!(e.pow_int(2).unwrap(), p("A1^2 - 4*B1*C1", &c));
    let s = Substitution::new();
    assert_eq!(c.substitute(&e, &s).unwrap(), e);
}
