//! Verification tools: errors against a known solution, convergence
//! orders, decay-rate fits, the maximum bound audit and the contraction
//! audit for two nearby initial conditions.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{BinOp, Bindings, EvalError, Expr};
use crate::forms::{h1_norm, l2_norm};
use crate::grid::{GridError, GridFunction};
use crate::problem::{validate_hypotheses, HypothesisFamily, HypothesisReport, ProblemSpec, Verdict};
use crate::sampling::{t_lattice, x_lattice};
use crate::stepping::{solve, Method, SolveError, StepperConfig, Trajectory};

/// Additive tolerance of the maximum bound comparison.
pub const BOUND_TOL: f64 = 1e-9;
/// Relative slack of the contraction comparison.
pub const CONTRACTION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("failed to evaluate {what} at x = {x}, t = {t}: {source}")]
    Eval {
        what: &'static str,
        x: f64,
        t: f64,
        #[source]
        source: EvalError,
    },
    #[error("final times differ: {coarse} and {fine}")]
    MismatchedTimes { coarse: f64, fine: f64 },
    #[error("the fit window [{from}, {to}] holds {points} snapshots, at least 3 are needed")]
    DegenerateWindow { from: f64, to: f64, points: usize },
    #[error("the difference from the steady state vanishes at t = {t}")]
    Converged { t: f64 },
    #[error("fine grid has {fine} cells, expected twice the coarse {coarse}")]
    NotNested { coarse: usize, fine: usize },
}

// ---------------------------------------------------------------------------
// Errors against an exact solution

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub times: Vec<f64>,
    pub max_node: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
}

impl ErrorReport {
    pub fn worst_max_node(&self) -> f64 {
        self.max_node.iter().copied().fold(0.0, f64::max)
    }

    pub fn final_max_node(&self) -> f64 {
        *self.max_node.last().expect("non-empty report")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty report")
    }
}

/// Samples `exact(x, t)` at the nodes of an `n`-cell grid.
pub fn sample_exact(exact: &Expr, n: usize, t: f64) -> Result<GridFunction, AnalysisError> {
    let values = (0..=n)
        .map(|k| {
            let x = k as f64 / n as f64;
            exact.eval(&Bindings::xt(x, t)).map_err(|source| AnalysisError::Eval {
                what: "exact solution",
                x,
                t,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridFunction::new(values)?)
}

/// Errors over all nodes, boundary nodes included, at every snapshot.
pub fn manufactured_error(traj: &Trajectory, exact: &Expr) -> Result<ErrorReport, AnalysisError> {
    let n = traj.n_cells();
    let mut report = ErrorReport {
        times: traj.times.clone(),
        max_node: Vec::with_capacity(traj.len()),
        l2: Vec::with_capacity(traj.len()),
        h1: Vec::with_capacity(traj.len()),
    };
    for (&t, state) in traj.times.iter().zip(&traj.states) {
        let e = state.difference(&sample_exact(exact, n, t)?)?;
        report.max_node.push(e.max_abs());
        report.l2.push(l2_norm(&e));
        report.h1.push(h1_norm(&e));
    }
    Ok(report)
}

/// `log2(e_coarse / e_fine)` of the final max-node errors of two runs
/// whose resolutions differ by a factor of two.
pub fn observed_order(coarse: &ErrorReport, fine: &ErrorReport) -> Result<f64, AnalysisError> {
    let (tc, tf) = (coarse.final_time(), fine.final_time());
    if (tc - tf).abs() > 1e-12 * tc.abs().max(1.0) {
        return Err(AnalysisError::MismatchedTimes { coarse: tc, fine: tf });
    }
    Ok((coarse.final_max_node() / fine.final_max_node()).log2())
}

/// Orders between consecutive entries of a sequence of errors on grids
/// refined by two.
pub fn successive_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Error estimate for `coarse` from a run with half the spacing:
/// `max_k |u_h(x_k) - u_{h/2}(x_k)| 2^p / (2^p - 1)` for a method of
/// order `p`.
pub fn refinement_error_estimate(
    coarse: &GridFunction,
    fine: &GridFunction,
    order: f64,
) -> Result<f64, AnalysisError> {
    let n = coarse.n_cells();
    if fine.n_cells() != 2 * n {
        return Err(AnalysisError::NotNested {
            coarse: n,
            fine: fine.n_cells(),
        });
    }
    let diff = coarse
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| (v - fine.values()[2 * k]).abs())
        .fold(0.0, f64::max);
    let r = 2f64.powf(order);
    Ok(diff * r / (r - 1.0))
}

// ---------------------------------------------------------------------------
// Decay to the steady state

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted rate of `‖u(t) - u_inf‖`.
    pub gamma_hat: f64,
    pub c_hat: f64,
    pub window: (f64, f64),
    /// Coefficient of determination of the log-linear fit, clamped to
    /// `[0, 1]`.
    pub goodness: f64,
    pub points: usize,
    /// Set when the last quarter of the window decays at less than half
    /// the fitted rate, a sign that the discretization floor was reached.
    pub plateau: bool,
}

impl DecayFit {
    pub fn consistent_with(&self, gamma: f64) -> bool {
        self.gamma_hat >= gamma
    }
}

/// `min{gamma1, a0 - delta - 4 eps}`, the supremum of admissible decay
/// rates. `eps` defaults to `(a0 - delta)/8`.
pub fn admissible_gamma_bound(gamma1: f64, a0: f64, delta: f64, eps: Option<f64>) -> f64 {
    let eps = eps.unwrap_or((a0 - delta) / 8.0);
    gamma1.min(a0 - delta - 4.0 * eps)
}

fn least_squares(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(ys) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let ss_res: f64 = ts
        .iter()
        .zip(ys)
        .map(|(t, y)| {
            let r = y - (intercept + slope * t);
            r * r
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    (slope, intercept, r2.clamp(0.0, 1.0))
}

/// Least-squares line through `(t, log‖u(t) - u_inf‖_{L²})` over the
/// snapshots in `window` (default: the latter half of the trajectory).
pub fn fit_decay(
    traj: &Trajectory,
    u_inf: &GridFunction,
    window: Option<(f64, f64)>,
) -> Result<DecayFit, AnalysisError> {
    let (from, to) = window.unwrap_or((0.5 * traj.final_time(), traj.final_time()));
    let eps = 1e-12 * to.abs().max(1.0);
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        if t >= from - eps && t <= to + eps {
            let d = l2_norm(&s.difference(u_inf)?);
            if d == 0.0 {
                return Err(AnalysisError::Converged { t });
            }
            ts.push(t);
            ys.push(d.ln());
        }
    }
    if ts.len() < 3 {
        return Err(AnalysisError::DegenerateWindow {
            from,
            to,
            points: ts.len(),
        });
    }
    let (slope, intercept, goodness) = least_squares(&ts, &ys);
    let q = ts.len() - ts.len() / 4;
    let plateau = if ts.len() - q >= 3 {
        let (tail, _, _) = least_squares(&ts[q..], &ys[q..]);
        slope < 0.0 && tail > 0.5 * slope
    } else {
        false
    };
    Ok(DecayFit {
        gamma_hat: -slope,
        c_hat: intercept.exp(),
        window: (from, to),
        goodness,
        points: ts.len(),
        plateau,
    })
}

// ---------------------------------------------------------------------------
// Maximum bound

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVerdict {
    Pass,
    Fail,
    HypothesesNotSatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundAudit {
    /// `max{‖u0‖_∞, ‖g0‖_∞/h0, ‖g1‖_∞/h1}`; absent when the hypotheses fail.
    pub bound: Option<f64>,
    pub max_observed: f64,
    pub hypotheses: HypothesisReport,
    pub verdict: BoundVerdict,
}

impl BoundAudit {
    pub fn pass(&self) -> bool {
        self.verdict == BoundVerdict::Pass
    }

    /// Labels of the hypotheses that are not satisfied.
    pub fn failed_hypotheses(&self) -> Vec<&'static str> {
        self.hypotheses
            .checks
            .iter()
            .filter(|c| c.verdict != Verdict::Satisfied)
            .map(|c| c.id)
            .collect()
    }
}

/// Checks the trajectory against the maximum bound when the boundedness
/// hypotheses hold on the samples.
pub fn max_bound_audit(traj: &Trajectory, spec: &ProblemSpec) -> Result<BoundAudit, AnalysisError> {
    let hypotheses = validate_hypotheses(spec, None, HypothesisFamily::Boundedness);
    let max_observed = traj.states.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
    if !hypotheses.all_satisfied() {
        return Ok(BoundAudit {
            bound: None,
            max_observed,
            hypotheses,
            verdict: BoundVerdict::HypothesesNotSatisfied,
        });
    }
    let eval_err = |what, x, t| move |source| AnalysisError::Eval { what, x, t, source };
    let mut u0_sup = 0.0f64;
    for &x in &x_lattice() {
        u0_sup = u0_sup.max(spec.u0(x).map_err(eval_err("u0", x, 0.0))?.abs());
    }
    let (mut g0_sup, mut g1_sup) = (0.0f64, 0.0f64);
    let bd = &spec.boundary;
    for &t in &t_lattice(spec.horizon) {
        g0_sup = g0_sup.max(bd.g0(t).map_err(eval_err("g0", 0.0, t))?.abs());
        g1_sup = g1_sup.max(bd.g1(t).map_err(eval_err("g1", 1.0, t))?.abs());
    }
    let bound = u0_sup.max(g0_sup / bd.h0).max(g1_sup / bd.h1);
    let verdict = if max_observed <= bound + BOUND_TOL {
        BoundVerdict::Pass
    } else {
        BoundVerdict::Fail
    };
    Ok(BoundAudit {
        bound: Some(bound),
        max_observed,
        hypotheses,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Contraction

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionAudit {
    pub times: Vec<f64>,
    /// `‖u1(t) - u2(t)‖_{L²}` at every snapshot.
    pub diff_norms: Vec<f64>,
    pub initial_norm: f64,
    pub delta: f64,
    /// `‖diff(t)‖ <= ‖diff(0)‖ e^{delta t} (1 + 1e-6)` at every snapshot.
    pub bound_holds: bool,
    /// Largest `‖diff(t)‖ / ‖diff(0)‖`; 0 when the perturbation vanishes.
    pub max_ratio: f64,
    pub nonincreasing: bool,
}

impl ContractionAudit {
    pub fn pass(&self) -> bool {
        self.bound_holds
    }
}

/// Solves from `u0` and from `u0 + perturbation` and compares the two
/// solutions in `L²` at every snapshot.
pub fn contraction_audit(
    spec: &ProblemSpec,
    perturbation: &Expr,
    method: Method,
    n: usize,
    cfg: &StepperConfig,
) -> Result<ContractionAudit, SolveError> {
    let mut perturbed = spec.clone();
    perturbed.u0 = Expr::binary(BinOp::Add, spec.u0.clone(), perturbation.clone());
    let (a, b) = std::thread::scope(|s| {
        let ha = s.spawn(|| solve(spec, method, n, cfg));
        let hb = s.spawn(|| solve(&perturbed, method, n, cfg));
        (
            ha.join().expect("solver thread panicked"),
            hb.join().expect("solver thread panicked"),
        )
    });
    let (a, b) = (a?, b?);
    let diff_norms = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| Ok(l2_norm(&x.difference(y)?)))
        .collect::<Result<Vec<_>, SolveError>>()?;
    let delta = spec.f.growth().delta;
    let initial_norm = diff_norms[0];
    let bound_holds = a
        .times
        .iter()
        .zip(&diff_norms)
        .all(|(t, d)| *d <= initial_norm * (delta * t).exp() * (1.0 + CONTRACTION_SLACK));
    let max_ratio = if initial_norm == 0.0 {
        0.0
    } else {
        diff_norms.iter().map(|d| d / initial_norm).fold(0.0, f64::max)
    };
    let nonincreasing = diff_norms.windows(2).all(|w| w[1] <= w[0]);
    Ok(ContractionAudit {
        times: a.times,
        diff_norms,
        initial_norm,
        delta,
        bound_holds,
        max_ratio,
        nonincreasing,
    })
}
