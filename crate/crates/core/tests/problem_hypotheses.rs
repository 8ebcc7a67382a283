mod common;

use common::{bound_demo, manufactured, manufactured_limits, parse, power_nonlinearity, XT};
use proptest::prelude::*;
use robin_heat::expr::{Expr, Var};
use robin_heat::problem::{
    growth_audit, potential, validate_hypotheses, BoundaryData, CoefficientField, GrowthBounds,
    HypothesisFamily, ProblemSpec, ScalarNonlinearity, Verdict,
};

/// `∫_0^z |y|^{1/2} y dy = (2/5)|z|^{5/2}`.
fn power_potential(z: f64) -> f64 {
    0.4 * z.abs().powf(2.5)
}

fn nonlinearity(src: &str, c1: f64, p: f64) -> ScalarNonlinearity {
    let g = GrowthBounds {
        c1,
        c1_prime: 0.0,
        c2: 1.0,
        p,
        delta: 1e-6,
    };
    ScalarNonlinearity::new(parse(src, &[Var::U]), g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn potential_is_additive(z1 in -20.0f64..20.0, z2 in -20.0f64..20.0) {
        let f = power_nonlinearity();
        let got = potential(&f, z2).unwrap() - potential(&f, z1).unwrap();
        let exact = power_potential(z2) - power_potential(z1);
        prop_assert!((got - exact).abs() <= 1e-8 * exact.abs().max(1.0), "{} vs {}", got, exact);
    }

    #[test]
    fn potential_is_sandwiched(z in -50.0f64..50.0) {
        let f = power_nonlinearity();
        let g = f.growth();
        let v = potential(&f, z).unwrap();
        prop_assert!(v >= -f.m0() - 1e-8);
        prop_assert!(v <= g.c2 * (z.abs() + z.abs().powf(g.p) / g.p) + 1e-8);
    }
}

#[test]
fn potential_values() {
    let f = power_nonlinearity();
    assert_eq!(potential(&f, 0.0).unwrap(), 0.0);
    assert!((potential(&f, 1.0).unwrap() - 0.4).abs() < 1e-10);
    assert!((potential(&f, -1.0).unwrap() - 0.4).abs() < 1e-10);
    assert_eq!(f.lambda0(), 0.0);
    assert_eq!(f.m0(), 0.0);
}

#[test]
fn growth_audits() {
    assert!(growth_audit(&power_nonlinearity()).unwrap().pass);
    assert!(growth_audit(&nonlinearity("u", 1.0, 2.0)).unwrap().pass);
    let bad = growth_audit(&nonlinearity("-u^3", 1.0, 4.0)).unwrap();
    assert!(!bad.pass);
    assert!(bad.worst_margin < 0.0);
    assert!(bad.worst.is_some());
}

#[test]
fn manufactured_problem_meets_existence_hypotheses() {
    let r = validate_hypotheses(&manufactured(3.0), None, HypothesisFamily::Existence);
    assert!(r.all_satisfied(), "{r:#?}");
    assert_eq!(r.verdict("H1"), Some(&Verdict::Satisfied));
}

#[test]
fn manufactured_problem_breaks_sign_condition_on_forcing() {
    let r = validate_hypotheses(&manufactured(3.0), None, HypothesisFamily::Boundedness);
    let ids: Vec<_> = r.violated().map(|c| c.id).collect();
    assert_eq!(ids, vec!["H5'"]);
    match r.verdict("H5'") {
        Some(Verdict::Violated { witness }) => {
            let (x, t) = (witness.x.unwrap(), witness.t.unwrap());
            let f1 = manufactured(3.0).f1(x, t).unwrap();
            assert!(f1 > 0.0);
        }
        other => panic!("{other:?}"),
    }
    // the limit of f1 at x = 1
    let e = std::f64::consts::E;
    assert!((-e + e.powf(1.5) - 1.763).abs() < 1e-3);
}

#[test]
fn bound_demo_meets_boundedness_hypotheses() {
    let r = validate_hypotheses(&bound_demo(3.0), None, HypothesisFamily::Boundedness);
    assert!(r.all_satisfied(), "{r:#?}");
}

#[test]
fn manufactured_problem_meets_asymptotic_hypotheses() {
    let limits = manufactured_limits();
    let r = validate_hypotheses(&manufactured(3.0), Some(&limits), HypothesisFamily::Asymptotic);
    assert!(r.all_satisfied(), "{r:#?}");
}

#[test]
fn asymptotic_family_needs_limits() {
    let r = validate_hypotheses(&manufactured(3.0), None, HypothesisFamily::Asymptotic);
    assert!(!r.all_satisfied());
    assert!(r.violated().next().is_none());
}

#[test]
fn vanishing_robin_coefficients_violate_h1() {
    let mu = CoefficientField::new(Expr::constant(1.0), None, 1.0).unwrap();
    let boundary = BoundaryData::new(0.0, 0.0, Expr::constant(0.0), Expr::constant(0.0)).unwrap();
    let spec = ProblemSpec::new(
        mu,
        power_nonlinearity(),
        parse("x*t", XT),
        boundary,
        Expr::constant(0.0),
        1.0,
    )
    .unwrap();
    let r = validate_hypotheses(&spec, None, HypothesisFamily::Existence);
    assert!(matches!(r.verdict("H1"), Some(Verdict::Violated { .. })));
}

#[test]
fn nonpositive_diffusion_is_rejected() {
    assert!(CoefficientField::new(parse("x - 0.5", XT), None, 1.0).is_err());
    assert!(BoundaryData::new(-1.0, 1.0, Expr::constant(0.0), Expr::constant(0.0)).is_err());
}
