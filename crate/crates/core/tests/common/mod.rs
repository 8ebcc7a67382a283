#![allow(dead_code)]

use robin_heat::expr::{Expr, Var};
use robin_heat::problem::{
    AsymptoticLimits, BoundaryData, CoefficientField, GrowthBounds, ProblemSpec,
    ScalarNonlinearity,
};
use robin_heat::stationary::StationaryProblem;

pub const XT: &[Var] = &[Var::X, Var::T];

pub fn parse(src: &str, vars: &[Var]) -> Expr {
    Expr::parse(src, vars).unwrap()
}

pub fn power_nonlinearity() -> ScalarNonlinearity {
    let g = GrowthBounds {
        c1: 1.0,
        c1_prime: 0.0,
        c2: 1.0,
        p: 2.5,
        delta: 1e-6,
    };
    ScalarNonlinearity::new(parse("abs(u)^0.5*u", &[Var::U]), g).unwrap()
}

/// The manufactured problem with exact solution `(1 + e^{-t}) e^x`.
pub fn manufactured(horizon: f64) -> ProblemSpec {
    let mu = CoefficientField::new(Expr::constant(1.0), None, horizon).unwrap();
    let f1 = parse("-exp(x)*(1+2*exp(-t)) + (1+exp(-t))^1.5*exp(1.5*x)", XT);
    let boundary = BoundaryData::new(
        2.0,
        1.0,
        parse("-1-exp(-t)", &[Var::T]),
        parse("-2*exp(1)*(1+exp(-t))", &[Var::T]),
    )
    .unwrap();
    ProblemSpec::new(mu, power_nonlinearity(), f1, boundary, parse("2*exp(x)", &[Var::X]), horizon)
        .unwrap()
}

pub fn exact() -> Expr {
    parse("(1+exp(-t))*exp(x)", XT)
}

pub fn manufactured_limits() -> AsymptoticLimits {
    AsymptoticLimits::new(
        Expr::constant(1.0),
        parse("-exp(x)+exp(1.5*x)", &[Var::X]),
        -1.0,
        -2.0 * std::f64::consts::E,
        1.0,
        6.0,
    )
    .unwrap()
}

pub fn manufactured_steady() -> StationaryProblem {
    StationaryProblem::new(manufactured_limits(), power_nonlinearity(), 2.0, 1.0).unwrap()
}

/// A problem meeting the boundedness hypotheses with bound 1.
pub fn bound_demo(horizon: f64) -> ProblemSpec {
    let mu = CoefficientField::new(Expr::constant(1.0), None, horizon).unwrap();
    let boundary =
        BoundaryData::new(1.0, 1.0, Expr::constant(-1.0), Expr::constant(-1.0)).unwrap();
    ProblemSpec::new(
        mu,
        power_nonlinearity(),
        Expr::constant(-1.0),
        boundary,
        parse("sin(3.141592653589793*x)", &[Var::X]),
        horizon,
    )
    .unwrap()
}

pub fn zero_problem(horizon: f64) -> ProblemSpec {
    let mu = CoefficientField::new(Expr::constant(1.0), None, horizon).unwrap();
    let boundary = BoundaryData::new(1.0, 1.0, Expr::constant(0.0), Expr::constant(0.0)).unwrap();
    ProblemSpec::new(
        mu,
        power_nonlinearity(),
        Expr::constant(0.0),
        boundary,
        Expr::constant(0.0),
        horizon,
    )
    .unwrap()
}
