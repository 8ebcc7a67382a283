//! The `verify` command: independent audits of one configured run.

use std::fmt;
use std::str::FromStr;
use std::thread;

use serde::Serialize;
use serde_json::{json, Value};

use robin_heat::analysis::{
    admissible_gamma_bound, contraction_audit, fit_decay, manufactured_error, max_bound_audit,
    observed_order, AnalysisError, BoundVerdict,
};
use robin_heat::forms::form_constants;
use robin_heat::galerkin::{self, energy_traces};
use robin_heat::problem::{validate_hypotheses, HypothesisFamily, HypothesisReport, Verdict};
use robin_heat::stepping::{Method, SolveError, StepperConfig, Trajectory};

use crate::commands::{require_limits, steady_state, trajectory, CliError};
use crate::config::{ConfigError, Path, RunConfig};

/// Smallest observed order accepted by the `error` check.
pub const MIN_ORDER: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Error,
    Decay,
    Bound,
    Contraction,
    Energy,
    Hypotheses,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Error,
        Check::Decay,
        Check::Bound,
        Check::Contraction,
        Check::Energy,
        Check::Hypotheses,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Error => "error",
            Check::Decay => "decay",
            Check::Bound => "bound",
            Check::Contraction => "contraction",
            Check::Energy => "energy",
            Check::Hypotheses => "hypotheses",
        }
    }

    /// Checks that `cfg` has the data for, in canonical order.
    pub fn feasible(cfg: &RunConfig) -> Vec<Check> {
        Check::ALL
            .into_iter()
            .filter(|c| match c {
                Check::Error => cfg.exact.is_some(),
                Check::Decay => cfg.limits.is_some(),
                _ => true,
            })
            .collect()
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The audited statement does not apply; reported, not failed.
    HypothesesNotSatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub status: CheckStatus,
    /// Hypotheses whose failure made the check inapplicable.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub unsatisfied: Vec<&'static str>,
    pub details: Value,
}

impl CheckResult {
    fn new(check: Check, pass: bool, details: Value) -> Self {
        CheckResult {
            check,
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            unsatisfied: Vec::new(),
            details,
        }
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub method: Method,
    pub nx: usize,
    pub dt: f64,
    pub checks: Vec<CheckResult>,
    /// No requested check failed.
    pub passed: bool,
}

/// Runs `checks` against `cfg`. The configured trajectory is computed once
/// and shared; the checks then run on separate threads.
pub fn cmd_verify(cfg: &RunConfig, checks: &[Check]) -> Result<VerifyReport, CliError> {
    for &c in checks {
        match c {
            Check::Error if cfg.exact.is_none() => {
                return Err(ConfigError::new(&Path::root().key("exact"), "required by the error check").into())
            }
            Check::Decay => {
                require_limits(cfg, "the decay check")?;
            }
            _ => {}
        }
    }
    let base = trajectory(cfg)?;
    let results: Vec<Result<CheckResult, CliError>> = thread::scope(|s| {
        let handles: Vec<_> = checks
            .iter()
            .map(|&c| {
                let base = &base;
                s.spawn(move || run_check(c, cfg, base))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("check thread panicked"))
            .collect()
    });
    let checks = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(VerifyReport {
        command: "verify",
        method: cfg.method,
        nx: cfg.nx,
        dt: cfg.dt(),
        passed: !checks.iter().any(CheckResult::failed),
        checks,
    })
}

fn run_check(check: Check, cfg: &RunConfig, base: &Trajectory) -> Result<CheckResult, CliError> {
    match check {
        Check::Error => check_error(cfg, base),
        Check::Decay => check_decay(cfg, base),
        Check::Bound => check_bound(cfg, base),
        Check::Contraction => check_contraction(cfg),
        Check::Energy => check_energy(cfg, base),
        Check::Hypotheses => Ok(check_hypotheses(cfg)),
    }
}

/// Error against the exact solution at the configured resolution and at
/// `(2 nx, dt/4)`. Passes when the error falls at least first-order and,
/// if `error_tol` is set, the worst error is within it.
fn check_error(cfg: &RunConfig, base: &Trajectory) -> Result<CheckResult, CliError> {
    let exact = cfg.exact.as_ref().expect("checked by cmd_verify");
    let refined_stepper = StepperConfig {
        dt: cfg.dt() / 4.0,
        ..cfg.stepper
    };
    refined_stepper.validate()?;
    let refined = robin_heat::stepping::solve(&cfg.problem, cfg.method, 2 * cfg.nx, &refined_stepper)?;
    let coarse = manufactured_error(base, exact)?;
    let fine = manufactured_error(&refined, exact)?;
    let (ec, ef) = (coarse.worst_max_node(), fine.worst_max_node());
    let order = if ec == 0.0 && ef == 0.0 {
        None
    } else {
        Some(observed_order(&coarse, &fine)?)
    };
    let order_ok = order.map_or(true, |p| p >= MIN_ORDER);
    let tol_ok = cfg.error_tol.map_or(true, |tol| ec <= tol);
    Ok(CheckResult::new(
        Check::Error,
        order_ok && tol_ok,
        json!({
            "worst_max_node": ec,
            "final_max_node": coarse.final_max_node(),
            "refined_worst_max_node": ef,
            "observed_order": order,
            "min_order": MIN_ORDER,
            "error_tol": cfg.error_tol,
        }),
    ))
}

fn unsatisfied(report: &HypothesisReport) -> Vec<&'static str> {
    report
        .checks
        .iter()
        .filter(|c| c.verdict != Verdict::Satisfied)
        .map(|c| c.id)
        .collect()
}

fn check_decay(cfg: &RunConfig, base: &Trajectory) -> Result<CheckResult, CliError> {
    let limits = require_limits(cfg, "the decay check")?;
    let hyps = validate_hypotheses(&cfg.problem, Some(&limits), HypothesisFamily::Asymptotic);
    let (u_inf, steady) = steady_state(cfg)?;
    let a0 = form_constants(&cfg.problem)
        .map_err(|source| SolveError::Eval { what: "mu", t: 0.0, source })?
        .a0;
    let delta = cfg.problem.f.growth().delta;
    let gamma = admissible_gamma_bound(limits.gamma1, a0, delta, None);
    let mut result = match fit_decay(base, &u_inf, cfg.decay_window) {
        Ok(fit) => CheckResult::new(
            Check::Decay,
            fit.consistent_with(gamma),
            json!({
                "gamma_hat": fit.gamma_hat,
                "c_hat": fit.c_hat,
                "window": [fit.window.0, fit.window.1],
                "goodness": fit.goodness,
                "plateau": fit.plateau,
                "admissible_gamma": gamma,
                "steady_residual": steady.residual_sup,
            }),
        ),
        Err(AnalysisError::Converged { t }) => CheckResult::new(
            Check::Decay,
            true,
            json!({ "converged_at": t, "admissible_gamma": gamma }),
        ),
        Err(e) => return Err(e.into()),
    };
    let missing = unsatisfied(&hyps);
    if !missing.is_empty() && result.status == CheckStatus::Fail {
        result.status = CheckStatus::HypothesesNotSatisfied;
        result.unsatisfied = missing;
    }
    Ok(result)
}

fn check_bound(cfg: &RunConfig, base: &Trajectory) -> Result<CheckResult, CliError> {
    let audit = max_bound_audit(base, &cfg.problem)?;
    let details = json!({
        "bound": audit.bound,
        "max_observed": audit.max_observed,
    });
    Ok(match audit.verdict {
        BoundVerdict::HypothesesNotSatisfied => CheckResult {
            check: Check::Bound,
            status: CheckStatus::HypothesesNotSatisfied,
            unsatisfied: audit.failed_hypotheses(),
            details,
        },
        _ => CheckResult::new(Check::Bound, audit.pass(), details),
    })
}

fn check_contraction(cfg: &RunConfig) -> Result<CheckResult, CliError> {
    let audit = contraction_audit(&cfg.problem, &cfg.perturbation, cfg.method, cfg.nx, &cfg.stepper)?;
    Ok(CheckResult::new(
        Check::Contraction,
        audit.pass(),
        json!({
            "initial_norm": audit.initial_norm,
            "final_norm": audit.diff_norms.last(),
            "delta": audit.delta,
            "max_ratio": audit.max_ratio,
            "bound_holds": audit.bound_holds,
            "nonincreasing": audit.nonincreasing,
        }),
    ))
}

fn ratio_max(values: &[f64], bounds: &[f64]) -> f64 {
    values
        .iter()
        .zip(bounds)
        .filter(|(_, b)| **b > 0.0)
        .map(|(v, b)| v / b)
        .fold(0.0, f64::max)
}

/// Energy estimates of the Galerkin semi-discretization, whatever the
/// configured method.
fn check_energy(cfg: &RunConfig, base: &Trajectory) -> Result<CheckResult, CliError> {
    let own;
    let traj = match cfg.method {
        Method::Galerkin => base,
        Method::Fdm => {
            own = galerkin::solve(&cfg.problem, cfg.nx, &cfg.stepper)?;
            &own
        }
    };
    let e = energy_traces(traj, &cfg.problem)?;
    Ok(CheckResult::new(
        Check::Energy,
        e.s_holds && e.x_holds,
        json!({
            "s_holds": e.s_holds,
            "x_holds": e.x_holds,
            "max_s_ratio": ratio_max(&e.s, &e.s_bound),
            "max_x_ratio": ratio_max(&e.x, &e.x_bound),
            "x_slack": e.x_slack,
            "a0": e.a0,
        }),
    ))
}

fn check_hypotheses(cfg: &RunConfig) -> CheckResult {
    let report = validate_hypotheses(&cfg.problem, cfg.limits.as_ref(), HypothesisFamily::Existence);
    let details = serde_json::to_value(&report).expect("hypothesis report serializes");
    CheckResult::new(Check::Hypotheses, report.all_satisfied(), details)
}
