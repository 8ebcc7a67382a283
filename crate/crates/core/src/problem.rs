//! Problem definitions and the sample-based hypothesis audits.
//!
//! A [`ProblemSpec`] holds the data of
//!
//! ```text
//! u_t - (mu(x,t) u_x)_x + f(u) = f1(x,t)     0 < x < 1, 0 < t < T
//! u_x(0,t) = h0 u(0,t) + g0(t),   -u_x(1,t) = h1 u(1,t) + g1(t)
//! u(x,0) = u0(x)
//! ```
//!
//! Hypotheses are stated over all of `R` or `[0,1] x [0,T]`; here they are
//! checked on deterministic sample sets only (see [`crate::sampling`]), so a
//! "satisfied" verdict is evidence, not proof.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr, Var};
use crate::forms::coercivity_constant;
use crate::quadrature::{adaptive_simpson, trapezoid, QuadratureError};
use crate::sampling::{t_lattice, u_samples, x_lattice};

/// Absolute tolerance requested from the potential quadrature.
pub const POTENTIAL_TOL: f64 = 1e-10;

/// Default monotonicity shift for nondecreasing nonlinearities.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// Additive slack on the potential sandwich.
const SANDWICH_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("failed to evaluate {what}: {source}")]
    Eval {
        what: &'static str,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

impl ProblemError {
    pub(crate) fn eval(what: &'static str) -> impl FnOnce(EvalError) -> ProblemError {
        move |source| ProblemError::Eval { what, source }
    }

    fn invalid(name: &'static str, reason: impl Into<String>) -> ProblemError {
        ProblemError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Diffusion coefficient `mu(x, t)` with its positive lower bound `mu0`.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    expr: Expr,
    mu0: f64,
}

impl CoefficientField {
    /// Uses the supplied `mu0`, or estimates it as the minimum over the
    /// `(x, t)` audit lattice on `[0,1] x [0,horizon]`.
    pub fn new(expr: Expr, mu0: Option<f64>, horizon: f64) -> Result<Self, ProblemError> {
        let mu0 = match mu0 {
            Some(m) => m,
            None => {
                let mut min = f64::INFINITY;
                for &t in &t_lattice(horizon) {
                    for &x in &x_lattice() {
                        let v = expr
                            .eval(&Bindings::xt(x, t))
                            .map_err(ProblemError::eval("mu"))?;
                        min = min.min(v);
                    }
                }
                min
            }
        };
        if !(mu0 > 0.0 && mu0.is_finite()) {
            return Err(ProblemError::invalid(
                "mu0",
                format!("the diffusion coefficient needs a positive lower bound, got {mu0}"),
            ));
        }
        Ok(Self { expr, mu0 })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.expr.eval(&Bindings::xt(x, t))
    }

    pub fn dt(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.expr.numeric_partial(Var::T, &Bindings::xt(x, t), None)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.expr.depends_on(Var::T)
    }
}

/// Constants of the growth and monotonicity conditions on `f`:
///
/// * `u f(u) >= C1 |u|^p - C1'`
/// * `|f(u)| <= C2 (1 + |u|^(p-1))`
/// * `(y - z)(f(y) - f(z)) >= -delta |y - z|^2`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthBounds {
    pub c1: f64,
    pub c1_prime: f64,
    pub c2: f64,
    pub p: f64,
    pub delta: f64,
}

impl GrowthBounds {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ProblemError::invalid(name, format!("must be positive, got {v}")))
            }
        };
        positive("C1", self.c1)?;
        positive("C2", self.c2)?;
        positive("delta", self.delta)?;
        if !(self.c1_prime >= 0.0 && self.c1_prime.is_finite()) {
            return Err(ProblemError::invalid(
                "C1prime",
                format!("must be non-negative, got {}", self.c1_prime),
            ));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(ProblemError::invalid("p", format!("must exceed 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// The reaction term `f(u)` together with its audited growth constants.
#[derive(Debug, Clone)]
pub struct ScalarNonlinearity {
    expr: Expr,
    growth: GrowthBounds,
    lambda0: f64,
    m0: f64,
}

impl ScalarNonlinearity {
    pub fn new(expr: Expr, growth: GrowthBounds) -> Result<Self, ProblemError> {
        growth.validate()?;
        let lambda0 = (growth.c1_prime / growth.c1).powf(1.0 / growth.p);
        let mut err = None;
        let m0 = adaptive_simpson(
            |y| match expr.eval(&Bindings::new().u(y)) {
                Ok(v) => v.abs(),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            -lambda0,
            lambda0,
            POTENTIAL_TOL,
        )?;
        if let Some(e) = err {
            return Err(ProblemError::Eval { what: "f", source: e });
        }
        Ok(Self {
            expr,
            growth,
            lambda0,
            m0,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn growth(&self) -> &GrowthBounds {
        &self.growth
    }

    /// `(C1'/C1)^(1/p)`.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// `∫_{-λ0}^{λ0} |f(y)| dy`, the lower bound magnitude of the potential.
    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn eval(&self, u: f64) -> Result<f64, EvalError> {
        self.expr.eval(&Bindings::new().u(u))
    }

    /// Central-difference `f'(u)` with step `1e-6 (1 + |u|)`.
    pub fn derivative(&self, u: f64) -> Result<f64, EvalError> {
        self.expr
            .numeric_partial(Var::U, &Bindings::new().u(u), Some(1e-6 * (1.0 + u.abs())))
    }

    /// True when `f` does not depend on `u`, so lagging it is exact.
    pub fn is_state_independent(&self) -> bool {
        !self.expr.depends_on(Var::U)
    }
}

/// Robin coefficients and boundary data.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub h0: f64,
    pub h1: f64,
    pub g0: Expr,
    pub g1: Expr,
}

impl BoundaryData {
    /// `h0 + h1 > 0` is not enforced here; it is hypothesis (H1) and is
    /// reported by [`validate_hypotheses`].
    pub fn new(h0: f64, h1: f64, g0: Expr, g1: Expr) -> Result<Self, ProblemError> {
        for (name, h) in [("h0", h0), ("h1", h1)] {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(ProblemError::invalid(name, format!("must be non-negative, got {h}")));
            }
        }
        Ok(Self { h0, h1, g0, g1 })
    }

    pub fn g0(&self, t: f64) -> Result<f64, EvalError> {
        self.g0.eval(&Bindings::new().t(t))
    }

    pub fn g1(&self, t: f64) -> Result<f64, EvalError> {
        self.g1.eval(&Bindings::new().t(t))
    }
}

/// The full time-dependent problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub mu: CoefficientField,
    pub f: ScalarNonlinearity,
    pub f1: Expr,
    pub boundary: BoundaryData,
    pub u0: Expr,
    pub horizon: f64,
}

impl ProblemSpec {
    pub fn new(
        mu: CoefficientField,
        f: ScalarNonlinearity,
        f1: Expr,
        boundary: BoundaryData,
        u0: Expr,
        horizon: f64,
    ) -> Result<Self, ProblemError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ProblemError::invalid("T", format!("must be positive, got {horizon}")));
        }
        for &x in &x_lattice() {
            u0.eval(&Bindings::new().x(x))
                .map_err(ProblemError::eval("u0"))?;
        }
        Ok(Self {
            mu,
            f,
            f1,
            boundary,
            u0,
            horizon,
        })
    }

    pub fn f1(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        self.f1.eval(&Bindings::xt(x, t))
    }

    pub fn u0(&self, x: f64) -> Result<f64, EvalError> {
        self.u0.eval(&Bindings::new().x(x))
    }

    /// Whether any coefficient of the linear part changes with time.
    pub fn has_time_dependent_operator(&self) -> bool {
        self.mu.is_time_dependent()
    }

    pub fn coercivity_constant(&self) -> f64 {
        coercivity_constant(self.mu.mu0(), self.boundary.h0, self.boundary.h1)
    }
}

/// Limits of the data as `t -> infinity` and the envelope constants of
/// their exponential approach.
#[derive(Debug, Clone)]
pub struct AsymptoticLimits {
    pub mu_inf: Expr,
    pub f1_inf: Expr,
    pub g0_inf: f64,
    pub g1_inf: f64,
    pub gamma1: f64,
    /// Envelope constant in `|g0(t) - g0_inf| <= Cexp e^{-gamma1 t}` and
    /// its siblings.
    pub c_exp: f64,
}

impl AsymptoticLimits {
    pub fn new(
        mu_inf: Expr,
        f1_inf: Expr,
        g0_inf: f64,
        g1_inf: f64,
        gamma1: f64,
        c_exp: f64,
    ) -> Result<Self, ProblemError> {
        if !(gamma1 > 0.0 && gamma1.is_finite()) {
            return Err(ProblemError::invalid("gamma1", format!("must be positive, got {gamma1}")));
        }
        if !(c_exp > 0.0 && c_exp.is_finite()) {
            return Err(ProblemError::invalid("Cexp", format!("must be positive, got {c_exp}")));
        }
        for (name, v) in [("g0_inf", g0_inf), ("g1_inf", g1_inf)] {
            if !v.is_finite() {
                return Err(ProblemError::invalid(name, "must be finite"));
            }
        }
        let mut min = f64::INFINITY;
        for &x in &x_lattice() {
            let m = mu_inf
                .eval(&Bindings::new().x(x))
                .map_err(ProblemError::eval("mu_inf"))?;
            min = min.min(m);
            f1_inf
                .eval(&Bindings::new().x(x))
                .map_err(ProblemError::eval("f1_inf"))?;
        }
        if !(min > 0.0) {
            return Err(ProblemError::invalid(
                "mu_inf",
                format!("must stay positive on [0,1], minimum sample is {min}"),
            ));
        }
        Ok(Self {
            mu_inf,
            f1_inf,
            g0_inf,
            g1_inf,
            gamma1,
            c_exp,
        })
    }

    pub fn mu_inf(&self, x: f64) -> Result<f64, EvalError> {
        self.mu_inf.eval(&Bindings::new().x(x))
    }

    pub fn f1_inf(&self, x: f64) -> Result<f64, EvalError> {
        self.f1_inf.eval(&Bindings::new().x(x))
    }

    /// Minimum of `mu_inf` over the `x` lattice.
    pub fn mu_inf_min(&self) -> Result<f64, EvalError> {
        let mut min = f64::INFINITY;
        for &x in &x_lattice() {
            min = min.min(self.mu_inf(x)?);
        }
        Ok(min)
    }
}

// ---------------------------------------------------------------------------
// Hypothesis audit

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisFamily {
    /// (H1)-(H7): existence and uniqueness of the weak solution.
    Existence,
    /// (H1'), (H2'), (H3), (H4), (H5'), (H6'): the L-infinity bound.
    Boundedness,
    /// (H1), (H2), (H6), (H3'')-(H7''): exponential approach to the steady state.
    Asymptotic,
}

/// A sample point where a hypothesis fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    pub message: String,
}

impl Witness {
    fn msg(message: impl Into<String>) -> Self {
        Witness {
            x: None,
            t: None,
            u: None,
            message: message.into(),
        }
    }

    fn at_xt(x: f64, t: f64, message: impl Into<String>) -> Self {
        Witness {
            x: Some(x),
            t: Some(t),
            u: None,
            message: message.into(),
        }
    }

    fn at_u(u: f64, message: impl Into<String>) -> Self {
        Witness {
            x: None,
            t: None,
            u: Some(u),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated { witness: Witness },
    NotCheckable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// Label such as `H5'`.
    pub id: &'static str,
    pub statement: &'static str,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub family: HypothesisFamily,
    pub checks: Vec<HypothesisCheck>,
    pub note: &'static str,
}

impl HypothesisReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Satisfied)
    }

    pub fn violated(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks
            .iter()
            .filter(|c| matches!(c.verdict, Verdict::Violated { .. }))
    }

    pub fn verdict(&self, id: &str) -> Option<&Verdict> {
        self.checks.iter().find(|c| c.id == id).map(|c| &c.verdict)
    }
}

type Check = Result<(), Witness>;

fn to_verdict(c: Check) -> Verdict {
    match c {
        Ok(()) => Verdict::Satisfied,
        Err(witness) => Verdict::Violated { witness },
    }
}

/// Checks every hypothesis of `family` on the audit sample sets.
///
/// Evaluation failures at a sample point are reported as violations at
/// that point rather than as errors.
pub fn validate_hypotheses(
    spec: &ProblemSpec,
    limits: Option<&AsymptoticLimits>,
    family: HypothesisFamily,
) -> HypothesisReport {
    let mut checks = Vec::new();
    let mut push = |id, statement, verdict| {
        checks.push(HypothesisCheck {
            id,
            statement,
            verdict,
        })
    };
    match family {
        HypothesisFamily::Existence => {
            push("H1", "h0 >= 0, h1 >= 0, h0 + h1 > 0", to_verdict(check_h1(spec)));
            push("H2", "u0 in L2", to_verdict(check_u0_finite(spec).map(|_| ())));
            push("H3", "g0, g1 in W^{1,1}(0,T)", to_verdict(check_h3(spec)));
            push("H4", "mu in C1, mu >= mu0 > 0", to_verdict(check_h4(spec)));
            push("H5", "f1 in L1(0,T;L2)", to_verdict(check_f1_finite(spec)));
            push("H6", "growth conditions (i), (ii) on f", to_verdict(check_h6(&spec.f)));
            push("H7", "(y-z)(f(y)-f(z)) >= -delta |y-z|^2", to_verdict(check_h7(&spec.f)));
        }
        HypothesisFamily::Boundedness => {
            push("H1'", "h0 > 0 and h1 > 0", to_verdict(check_h1_prime(spec)));
            let u0_sup = check_u0_finite(spec);
            push("H2'", "u0 in L-infinity", to_verdict(u0_sup.clone().map(|_| ())));
            push("H3", "g0, g1 in W^{1,1}(0,T)", to_verdict(check_h3(spec)));
            push("H4", "mu in C1, mu >= mu0 > 0", to_verdict(check_h4(spec)));
            push("H5'", "f1 in L2(Q_T), f1 <= 0", to_verdict(check_h5_prime(spec)));
            let h6p = match u0_sup {
                Ok(sup) => to_verdict(check_h6_prime(&spec.f, sup)),
                Err(_) => Verdict::NotCheckable {
                    reason: "sup of u0 is unavailable".into(),
                },
            };
            push("H6'", "(H6), (H7) and u f(u) >= 0 for |u| >= sup|u0|", h6p);
        }
        HypothesisFamily::Asymptotic => {
            push("H1", "h0 >= 0, h1 >= 0, h0 + h1 > 0", to_verdict(check_h1(spec)));
            push("H2", "u0 in L2", to_verdict(check_u0_finite(spec).map(|_| ())));
            push("H6", "growth conditions (i), (ii) on f", to_verdict(check_h6(&spec.f)));
            push("H3''", "g0, g1 in W^{1,1}(R+)", to_verdict(check_h3(spec)));
            push("H4''", "mu in C1, mu >= mu0 > 0 for all t >= 0", to_verdict(check_h4(spec)));
            push("H5''", "f1 in L-infinity(0,inf;L2)", to_verdict(check_f1_finite(spec)));
            match limits {
                Some(lim) => {
                    push(
                        "H6''",
                        "data approach their limits at rate e^{-gamma1 t}",
                        to_verdict(check_h6_double_prime(spec, lim)),
                    );
                    push(
                        "H7''",
                        "f(u) + delta u nondecreasing with 0 < delta < a0",
                        to_verdict(check_h7_double_prime(spec, Some(lim))),
                    );
                }
                None => {
                    push(
                        "H6''",
                        "data approach their limits at rate e^{-gamma1 t}",
                        Verdict::NotCheckable {
                            reason: "no asymptotic limits supplied".into(),
                        },
                    );
                    push(
                        "H7''",
                        "f(u) + delta u nondecreasing with 0 < delta < a0",
                        to_verdict(check_h7_double_prime(spec, None)),
                    );
                }
            }
        }
    }
    HypothesisReport {
        family,
        checks,
        note: "verdicts are sample-based: u over 1001 symmetric log-spaced points in [-1e3, 1e3], (x, t) over a 101 x 101 lattice of [0,1] x [0,T]",
    }
}

fn check_h1(spec: &ProblemSpec) -> Check {
    let (h0, h1) = (spec.boundary.h0, spec.boundary.h1);
    if h0 >= 0.0 && h1 >= 0.0 && h0 + h1 > 0.0 {
        Ok(())
    } else {
        Err(Witness::msg(format!("h0 = {h0}, h1 = {h1}: h0 + h1 = {} is not positive", h0 + h1)))
    }
}

fn check_h1_prime(spec: &ProblemSpec) -> Check {
    let (h0, h1) = (spec.boundary.h0, spec.boundary.h1);
    if h0 > 0.0 && h1 > 0.0 {
        Ok(())
    } else {
        Err(Witness::msg(format!("h0 = {h0}, h1 = {h1}: both must be positive")))
    }
}

/// Returns the sampled sup of |u0| when every sample is finite.
fn check_u0_finite(spec: &ProblemSpec) -> Result<f64, Witness> {
    let mut sup = 0.0f64;
    for &x in &x_lattice() {
        match spec.u0(x) {
            Ok(v) if v.is_finite() => sup = sup.max(v.abs()),
            Ok(v) => return Err(Witness { x: Some(x), t: None, u: None, message: format!("u0 = {v}") }),
            Err(e) => return Err(Witness { x: Some(x), t: None, u: None, message: e.to_string() }),
        }
    }
    Ok(sup)
}

fn check_h3(spec: &ProblemSpec) -> Check {
    for &t in &t_lattice(spec.horizon) {
        for (name, g) in [("g0", &spec.boundary.g0), ("g1", &spec.boundary.g1)] {
            let b = Bindings::new().t(t);
            let v = g.eval(&b);
            let d = g.numeric_partial(Var::T, &b, None);
            match (v, d) {
                (Ok(v), Ok(d)) if v.is_finite() && d.is_finite() => {}
                (Err(e), _) | (_, Err(e)) => {
                    return Err(Witness { x: None, t: Some(t), u: None, message: format!("{name}: {e}") })
                }
                (Ok(v), Ok(d)) => {
                    return Err(Witness {
                        x: None,
                        t: Some(t),
                        u: None,
                        message: format!("{name} = {v}, {name}' = {d}"),
                    })
                }
            }
        }
    }
    Ok(())
}

fn check_h4(spec: &ProblemSpec) -> Check {
    let mu0 = spec.mu.mu0();
    for &t in &t_lattice(spec.horizon) {
        for &x in &x_lattice() {
            let b = Bindings::xt(x, t);
            let v = spec.mu.expr().eval(&b).map_err(|e| Witness::at_xt(x, t, e.to_string()))?;
            if !(v >= mu0) || !v.is_finite() {
                return Err(Witness::at_xt(x, t, format!("mu = {v} is below mu0 = {mu0}")));
            }
            for var in [Var::X, Var::T] {
                let d = spec
                    .mu
                    .expr()
                    .numeric_partial(var, &b, None)
                    .map_err(|e| Witness::at_xt(x, t, e.to_string()))?;
                if !d.is_finite() {
                    return Err(Witness::at_xt(x, t, format!("d mu / d{} is not finite", var.name())));
                }
            }
        }
    }
    Ok(())
}

fn check_f1_finite(spec: &ProblemSpec) -> Check {
    for &t in &t_lattice(spec.horizon) {
        for &x in &x_lattice() {
            match spec.f1(x, t) {
                Ok(v) if v.is_finite() => {}
                Ok(v) => return Err(Witness::at_xt(x, t, format!("f1 = {v}"))),
                Err(e) => return Err(Witness::at_xt(x, t, e.to_string())),
            }
        }
    }
    Ok(())
}

fn check_h5_prime(spec: &ProblemSpec) -> Check {
    // report the largest positive value as the witness
    let mut worst: Option<(f64, f64, f64)> = None;
    for &t in &t_lattice(spec.horizon) {
        for &x in &x_lattice() {
            let v = spec.f1(x, t).map_err(|e| Witness::at_xt(x, t, e.to_string()))?;
            if !v.is_finite() {
                return Err(Witness::at_xt(x, t, format!("f1 = {v}")));
            }
            if v > 0.0 && worst.map_or(true, |(_, _, w)| v > w) {
                worst = Some((x, t, v));
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((x, t, v)) => Err(Witness::at_xt(x, t, format!("f1({x}, {t}) = {v} > 0"))),
    }
}

/// Raw margins of the two growth conditions at `u`; both are `>= 0` when
/// the conditions hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthMargins {
    /// `u f(u) - (C1 |u|^p - C1')`
    pub coercive: f64,
    /// `C2 (1 + |u|^(p-1)) - |f(u)|`
    pub bounded: f64,
}

pub fn growth_margins(f: &ScalarNonlinearity, u: f64) -> Result<GrowthMargins, EvalError> {
    let g = f.growth();
    let fu = f.eval(u)?;
    let a = u.abs();
    Ok(GrowthMargins {
        coercive: u * fu - (g.c1 * a.powf(g.p) - g.c1_prime),
        bounded: g.c2 * (1.0 + a.powf(g.p - 1.0)) - fu.abs(),
    })
}

/// Relative tolerance on normalized margins.
const MARGIN_TOL: f64 = 1e-12;

fn check_h6(f: &ScalarNonlinearity) -> Check {
    let g = f.growth();
    for &u in &u_samples() {
        let m = growth_margins(f, u).map_err(|e| Witness::at_u(u, e.to_string()))?;
        let a = u.abs();
        if m.coercive < -MARGIN_TOL * (1.0 + a.powf(g.p)) || m.coercive.is_nan() {
            return Err(Witness::at_u(
                u,
                format!("u f(u) - (C1|u|^p - C1') = {} < 0", m.coercive),
            ));
        }
        if m.bounded < -MARGIN_TOL * (1.0 + a.powf(g.p - 1.0)) || m.bounded.is_nan() {
            return Err(Witness::at_u(
                u,
                format!("C2(1 + |u|^(p-1)) - |f(u)| = {} < 0", m.bounded),
            ));
        }
    }
    Ok(())
}

fn sampled_f(f: &ScalarNonlinearity) -> Result<(Vec<f64>, Vec<f64>), Witness> {
    let us = u_samples();
    let fs = us
        .iter()
        .map(|&u| f.eval(u).map_err(|e| Witness::at_u(u, e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((us, fs))
}

fn check_h7(f: &ScalarNonlinearity) -> Check {
    let delta = f.growth().delta;
    let (us, fs) = sampled_f(f)?;
    for i in 0..us.len() {
        for j in (i + 1)..us.len() {
            let dy = us[j] - us[i];
            let lhs = dy * (fs[j] - fs[i]);
            let rhs = -delta * dy * dy;
            let slack = MARGIN_TOL * dy.abs() * (fs[i].abs() + fs[j].abs() + 1.0);
            if lhs < rhs - slack {
                return Err(Witness {
                    x: None,
                    t: None,
                    u: Some(us[i]),
                    message: format!(
                        "y = {}, z = {}: (y-z)(f(y)-f(z)) = {lhs} < -delta|y-z|^2 = {rhs}",
                        us[j], us[i]
                    ),
                });
            }
        }
    }
    Ok(())
}

fn check_h6_prime(f: &ScalarNonlinearity, u0_sup: f64) -> Check {
    check_h6(f)?;
    check_h7(f)?;
    for &u in &u_samples() {
        if u.abs() >= u0_sup {
            let fu = f.eval(u).map_err(|e| Witness::at_u(u, e.to_string()))?;
            if u * fu < 0.0 {
                return Err(Witness::at_u(u, format!("u f(u) = {} < 0 with |u| >= {u0_sup}", u * fu)));
            }
        }
    }
    Ok(())
}

fn check_h6_double_prime(spec: &ProblemSpec, lim: &AsymptoticLimits) -> Check {
    let xs = x_lattice();
    let envelope = |t: f64| lim.c_exp * (-lim.gamma1 * t).exp();
    let exceeds = |v: f64, bound: f64| v > bound * (1.0 + 1e-12) + 1e-14;
    for &x in &xs {
        let m = lim.mu_inf(x).map_err(|e| Witness { x: Some(x), t: None, u: None, message: e.to_string() })?;
        if !(m >= spec.mu.mu0()) {
            return Err(Witness {
                x: Some(x),
                t: None,
                u: None,
                message: format!("mu_inf = {m} is below mu0 = {}", spec.mu.mu0()),
            });
        }
    }
    for &t in &t_lattice(spec.horizon) {
        let bound = envelope(t);
        let err = |e: EvalError| Witness::at_xt(f64::NAN, t, e.to_string());
        let d0 = (spec.boundary.g0(t).map_err(|e| Witness { x: None, t: Some(t), u: None, message: e.to_string() })? - lim.g0_inf).abs();
        if exceeds(d0, bound) {
            return Err(Witness { x: None, t: Some(t), u: None, message: format!("(i) |g0 - g0_inf| = {d0} > {bound}") });
        }
        let d1 = (spec.boundary.g1(t).map_err(|e| Witness { x: None, t: Some(t), u: None, message: e.to_string() })? - lim.g1_inf).abs();
        if exceeds(d1, bound) {
            return Err(Witness { x: None, t: Some(t), u: None, message: format!("(ii) |g1 - g1_inf| = {d1} > {bound}") });
        }
        let mut mu_sup = 0.0f64;
        let mut f1_sq = Vec::with_capacity(xs.len());
        for &x in &xs {
            let dm = spec.mu.eval(x, t).map_err(err)? - lim.mu_inf(x).map_err(err)?;
            mu_sup = mu_sup.max(dm.abs());
            let df = spec.f1(x, t).map_err(err)? - lim.f1_inf(x).map_err(err)?;
            f1_sq.push(df * df);
        }
        if exceeds(mu_sup, bound) {
            return Err(Witness { x: None, t: Some(t), u: None, message: format!("(iii) sup|mu - mu_inf| = {mu_sup} > {bound}") });
        }
        let f1_l2 = trapezoid(&xs, &f1_sq).sqrt();
        if exceeds(f1_l2, bound) {
            return Err(Witness { x: None, t: Some(t), u: None, message: format!("(iv) ||f1 - f1_inf|| = {f1_l2} > {bound}") });
        }
    }
    Ok(())
}

fn check_h7_double_prime(spec: &ProblemSpec, lim: Option<&AsymptoticLimits>) -> Check {
    let delta = spec.f.growth().delta;
    let mut mu0 = spec.mu.mu0();
    if let Some(lim) = lim {
        let m = lim.mu_inf_min().map_err(|e| Witness::msg(e.to_string()))?;
        mu0 = mu0.min(m);
    }
    let a0 = coercivity_constant(mu0, spec.boundary.h0, spec.boundary.h1);
    if !(delta > 0.0 && delta < a0) {
        return Err(Witness::msg(format!("delta = {delta} is not in (0, a0 = {a0})")));
    }
    let (us, fs) = sampled_f(&spec.f)?;
    for i in 1..us.len() {
        let lo = fs[i - 1] + delta * us[i - 1];
        let hi = fs[i] + delta * us[i];
        if hi < lo - MARGIN_TOL * (lo.abs() + hi.abs()) {
            return Err(Witness::at_u(
                us[i],
                format!("f(u) + delta u decreases between u = {} and u = {}", us[i - 1], us[i]),
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Potential and growth audit

/// `∫_0^z f(y) dy` by adaptive quadrature.
pub fn potential(f: &ScalarNonlinearity, z: f64) -> Result<f64, ProblemError> {
    if !z.is_finite() {
        return Err(ProblemError::invalid("z", "must be finite"));
    }
    let mut err = None;
    let v = adaptive_simpson(
        |y| match f.eval(y) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        0.0,
        z,
        POTENTIAL_TOL,
    )?;
    match err {
        Some(e) => Err(ProblemError::Eval { what: "f", source: e }),
        None => Ok(v),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub pass: bool,
    /// Smallest normalized margin over all audited conditions and points.
    pub worst_margin: f64,
    pub worst: Option<Witness>,
    pub points_checked: usize,
}

/// Audits both growth conditions and the potential sandwich
/// `-m0 <= F(z) <= C2(|z| + |z|^p / p)` on the `u` sample set.
///
/// Margins are normalized by `1 + |u|^p` (or `1 + |u|^(p-1)`) so the
/// worst witness is comparable across scales.
pub fn growth_audit(f: &ScalarNonlinearity) -> Result<AuditResult, ProblemError> {
    let g = *f.growth();
    let mut worst_margin = f64::INFINITY;
    let mut worst = None;
    let mut points = 0;
    let mut consider = |margin: f64, w: Witness| {
        if margin < worst_margin || margin.is_nan() {
            worst_margin = margin;
            worst = Some(w);
        }
    };
    for &u in &u_samples() {
        let m = growth_margins(f, u).map_err(ProblemError::eval("f"))?;
        let a = u.abs();
        consider(
            m.coercive / (1.0 + a.powf(g.p)),
            Witness::at_u(u, format!("u f(u) - (C1|u|^p - C1') = {}", m.coercive)),
        );
        consider(
            m.bounded / (1.0 + a.powf(g.p - 1.0)),
            Witness::at_u(u, format!("C2(1 + |u|^(p-1)) - |f(u)| = {}", m.bounded)),
        );
        let fbar = potential(f, u)?;
        let scale = 1.0 + a.powf(g.p);
        consider(
            (fbar + f.m0() + SANDWICH_SLACK) / scale,
            Witness::at_u(u, format!("F(z) + m0 = {}", fbar + f.m0())),
        );
        let upper = g.c2 * (a + a.powf(g.p) / g.p);
        consider(
            (upper + SANDWICH_SLACK - fbar) / scale,
            Witness::at_u(u, format!("C2(|z| + |z|^p/p) - F(z) = {}", upper - fbar)),
        );
        points += 1;
    }
    Ok(AuditResult {
        pass: worst_margin >= -MARGIN_TOL,
        worst_margin,
        worst,
        points_checked: points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn nonlinearity(src: &str, c1: f64, c1p: f64, c2: f64, p: f64) -> ScalarNonlinearity {
        let g = GrowthBounds {
            c1,
            c1_prime: c1p,
            c2,
            p,
            delta: DEFAULT_DELTA,
        };
        ScalarNonlinearity::new(Expr::parse(src, &[Var::U]).unwrap(), g).unwrap()
    }

    #[test]
    fn potential_values() {
        let f = nonlinearity("abs(u)^0.5*u", 1.0, 0.0, 1.0, 2.5);
        assert_eq!(potential(&f, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(potential(&f, 1.0).unwrap(), 0.4, epsilon = 1e-10);
        assert_abs_diff_eq!(potential(&f, -1.0).unwrap(), 0.4, epsilon = 1e-10);
    }

    #[test]
    fn lambda0_and_m0() {
        let f = nonlinearity("u^3 - u", 1.0, 1.0, 2.0, 4.0);
        assert_abs_diff_eq!(f.lambda0(), 1.0, epsilon = 1e-15);
        // ∫_{-1}^{1} |y^3 - y| dy = 2 * 1/4
        assert_abs_diff_eq!(f.m0(), 0.5, epsilon = 1e-10);
        assert_eq!(nonlinearity("u", 1.0, 0.0, 1.0, 2.0).m0(), 0.0);
    }

    #[test]
    fn growth_audit_passes_for_power_nonlinearity() {
        let f = nonlinearity("abs(u)^0.5*u", 1.0, 0.0, 1.0, 2.5);
        let r = growth_audit(&f).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.points_checked, 1001);
        assert!(growth_audit(&nonlinearity("u", 1.0, 0.0, 1.0, 2.0)).unwrap().pass);
    }

    #[test]
    fn growth_audit_fails_for_focusing_cubic() {
        let f = nonlinearity("-u^3", 1.0, 0.0, 1.0, 4.0);
        let r = growth_audit(&f).unwrap();
        assert!(!r.pass);
        assert!(r.worst.is_some());
        let m = growth_margins(&f, 1.0).unwrap();
        // u f(u) = -1 against C1 |u|^p = 1
        assert_eq!(m.coercive, -2.0);
    }

    #[test]
    fn growth_bounds_validation() {
        let mut g = GrowthBounds {
            c1: 1.0,
            c1_prime: 0.0,
            c2: 1.0,
            p: 2.5,
            delta: 1e-6,
        };
        assert!(g.validate().is_ok());
        g.p = 1.0;
        assert!(g.validate().is_err());
        g.p = 2.0;
        g.c1 = 0.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn mu0_is_estimated_by_sampling() {
        let e = Expr::parse("2 + x*t", &[Var::X, Var::T]).unwrap();
        let mu = CoefficientField::new(e, None, 3.0).unwrap();
        assert_eq!(mu.mu0(), 2.0);
        assert!(mu.is_time_dependent());
        let bad = Expr::parse("x - 0.5", &[Var::X, Var::T]).unwrap();
        assert!(CoefficientField::new(bad, None, 1.0).is_err());
    }
}
