//! Worked examples for the kernel, the Lax model and the reduction engine.

use chlax_core::expr::{numeric_eval, parse, Assignment, Atom, Context, Expr, FnKind, MultiIndex, Number, sym};
use chlax_core::lax::{build_ch_lax, ch_context};
use chlax_core::reduction::{
    appendix_pull_back, export_cases, find_case, import_cases, pull_back, reduced_nonisospectral_check,
    verify_case, verify_section6, FieldMap, ParameterRelation, ReductionError,
};
use num_bigint::BigInt;
use num_rational::BigRational;

fn q(n: i64, d: i64) -> Number {
    Number::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
}

#[test]
fn evaluation_by_hand() {
    let c = ch_context(2);
    let e = parse("lam_y - lam^2*lam_t", &c).unwrap();
    let jet = |d: &str| Atom::Jet(sym("lam"), MultiIndex::empty().with(&sym(d), 1));
    let mut asg = Assignment::new();
    asg.insert(jet("y"), q(6, 1));
    asg.insert(Atom::Jet(sym("lam"), MultiIndex::empty()), q(1, 2));
    asg.insert(jet("t"), q(8, 1));
    assert_eq!(numeric_eval(&e, &asg).unwrap(), q(4, 1));
}

#[test]
fn antiderivative_rule_after_commuting_partials() {
    let mut c = Context::with_vars(&["x", "y", "t"]);
    c.add_function("S1", &["t"], FnKind::Given);
    c.add_function("W", &["x", "t"], FnKind::Given);
    let rule = parse("1/S1", &c).unwrap();
    c.add_rule("W", "x", rule).unwrap();
    let wt = parse("W_t", &c).unwrap();
    assert_eq!(c.diff(&wt, "x").unwrap(), parse("-S1_t/S1^2", &c).unwrap());
}

#[test]
fn nonisospectral_odes() {
    for id in ["I.3", "I.5"] {
        let case = find_case(id, 2).unwrap();
        assert!(reduced_nonisospectral_check(&case.map).unwrap(), "{id}");
    }
    let case = find_case("I.1", 1).unwrap();
    assert!(matches!(
        reduced_nonisospectral_check(&case.map),
        Err(ReductionError::ConstantParameter(_))
    ));
}

#[test]
fn identity_map_returns_the_pair() {
    let mut case = find_case("I.1", 1).unwrap();
    let m = &mut case.map;
    m.z = ["x".into(), "y".into()];
    m.jacobian = [["1".into(), "0".into(), "0".into()], ["0".into(), "1".into(), "0".into()]];
    m.parameter = ParameterRelation::Constant {
        symbol: "lam0".into(),
        factor: "1".into(),
    };
    m.psi = "1".into();
    m.fields = vec![
        FieldMap {
            field: "M".into(),
            prefactor: "1".into(),
            reduced: "H".into(),
            shift: "0".into(),
        },
        FieldMap {
            field: "U1".into(),
            prefactor: "1".into(),
            reduced: "V1".into(),
            shift: "0".into(),
        },
    ];
    m.aliases.clear();
    let lp = build_ch_lax(1, &ch_context(1)).unwrap();
    let pb = pull_back(
        m,
        &lp,
        ["Phi_z1z1 - (1/4 - lam0/2*H)*Phi", "Phi_z2 + lam0*V1*Phi_z1 - lam0/2*V1_z1*Phi"],
    )
    .unwrap();
    assert!(pb.passed());
    assert_eq!(pb.cofactors, [Expr::one(), Expr::one()]);
}

#[test]
fn first_reduction_at_n1() {
    let r = verify_case(&find_case("I.1", 1).unwrap());
    assert!(r.passed, "{:?}", r.stages);
    let red = r.reduced.unwrap();
    let c = find_case("I.1", 1).unwrap().map.reduced_context();
    assert_eq!(
        parse(&red.spatial, &c).unwrap(),
        parse("Phi_z1z1 - (1/4 - lam0/2*H)*Phi", &c).unwrap()
    );
    assert!(red.autonomous);
}

#[test]
fn autonomy_labels_at_n1() {
    for (id, autonomous) in [("I.4", true), ("I.5", false)] {
        let r = verify_case(&find_case(id, 1).unwrap());
        assert!(r.passed, "{id}: {:?}", r.stages);
        assert_eq!(r.reduced.unwrap().autonomous, autonomous, "{id}");
    }
}

#[test]
fn type_iv_spatial_problem_has_no_constant_term() {
    let r = verify_case(&find_case("IV.1", 1).unwrap());
    assert!(r.passed, "{:?}", r.stages);
    assert!(!r.reduced.unwrap().spatial.contains("1/4"));
}

#[test]
fn appendix_mutation_is_detected() {
    assert!(appendix_pull_back(3, 1, false).unwrap().passed());
    assert!(!appendix_pull_back(3, 1, true).unwrap().passed());
}

#[test]
fn stationary_solution() {
    assert!(verify_section6(3, false).unwrap().passed);
    assert!(!verify_section6(1, true).unwrap().passed);
}

#[test]
fn registry_round_trips_through_json() {
    let cases = vec![find_case("I.2", 2).unwrap(), find_case("IV.3", 1).unwrap()];
    let doc = export_cases(&cases);
    assert_eq!(import_cases(&doc).unwrap(), cases);
}

#[test]
fn growing_parameter_factor_on_the_time_derivative() {
    let case = find_case("I.4", 2).unwrap();
    let r = verify_case(&case);
    assert!(r.passed, "{:?}", r.stages);
    let c = case.map.reduced_context();
    let temporal = parse(&r.reduced.unwrap().temporal, &c).unwrap();
    let pivot = Atom::Jet(sym("Phi"), MultiIndex::empty().with(&sym("z2"), 1));
    assert_eq!(temporal.coeff(&pivot, 1.into()), parse("1 + Lam^2", &c).unwrap());
}
