//! Galerkin solver for the limit problem
//!
//! ```text
//! -(mu_inf u_x)_x + f(u) = f1_inf,  u_x(0) = h0 u(0) + g0_inf,  -u_x(1) = h1 u(1) + g1_inf
//! ```
//!
//! on the same P1 basis as [`crate::galerkin`].

use serde::Serialize;

use crate::expr::EvalError;
use crate::forms::coercivity_constant;
use crate::galerkin::{load_with, stiffness_with, FemBasis};
use crate::grid::GridFunction;
use crate::linalg::TriDiag;
use crate::newton::{damped_newton, sup_norm, NewtonConfig};
use crate::problem::{AsymptoticLimits, ProblemError, ScalarNonlinearity};
use crate::quadrature::GAUSS2_REF;
use crate::sampling::u_samples;
use crate::stepping::SolveError;

const PICARD_MAX_ITERS: usize = 500;

#[derive(Debug, Clone)]
pub struct StationaryProblem {
    pub limits: AsymptoticLimits,
    pub f: ScalarNonlinearity,
    pub h0: f64,
    pub h1: f64,
}

impl StationaryProblem {
    pub fn new(
        limits: AsymptoticLimits,
        f: ScalarNonlinearity,
        h0: f64,
        h1: f64,
    ) -> Result<Self, ProblemError> {
        if !(h0 >= 0.0 && h1 >= 0.0 && h0 + h1 > 0.0) {
            return Err(ProblemError::InvalidParameter {
                name: "h0",
                reason: format!("need h0, h1 >= 0 with h0 + h1 > 0, got h0 = {h0}, h1 = {h1}"),
            });
        }
        Ok(Self { limits, f, h0, h1 })
    }

    /// Coercivity constant of the limit form, from the sampled minimum
    /// of `mu_inf`.
    pub fn coercivity_constant(&self) -> Result<f64, EvalError> {
        Ok(coercivity_constant(self.limits.mu_inf_min()?, self.h0, self.h1))
    }

    /// Whether `delta < a0` and `f(u) + delta u` is nondecreasing on the
    /// `u` samples, which makes the solution unique.
    pub fn uniqueness_guaranteed(&self) -> Result<bool, EvalError> {
        let delta = self.f.growth().delta;
        if !(delta < self.coercivity_constant()?) {
            return Ok(false);
        }
        let mut prev = f64::NEG_INFINITY;
        for u in u_samples() {
            let v = self.f.eval(u)? + delta * u;
            if v < prev - 1e-12 * (v.abs() + prev.abs()) {
                return Ok(false);
            }
            prev = v;
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarySolution {
    pub values: GridFunction,
    pub residual_sup: f64,
    pub newton_iters: usize,
    /// Set when Newton stagnated and the lagged fixed-point iteration
    /// produced the solution instead.
    pub picard_fallback: bool,
    pub uniqueness_guaranteed: bool,
}

fn eval_err(what: &'static str) -> impl Fn(EvalError) -> SolveError {
    SolveError::eval(what, f64::INFINITY)
}

/// Stiffness of the limit form `a_inf`.
pub fn assemble_a_inf(basis: &FemBasis, prob: &StationaryProblem) -> Result<TriDiag, SolveError> {
    stiffness_with(basis, prob.h0, prob.h1, |x| prob.limits.mu_inf(x)).map_err(eval_err("mu_inf"))
}

struct Discrete<'a> {
    prob: &'a StationaryProblem,
    basis: FemBasis,
    a: TriDiag,
    boundary: (f64, f64),
}

impl<'a> Discrete<'a> {
    fn new(prob: &'a StationaryProblem, basis: &FemBasis) -> Result<Self, SolveError> {
        let lim = &prob.limits;
        let b0 = lim.mu_inf(0.0).map_err(eval_err("mu_inf"))? * lim.g0_inf;
        let b1 = lim.mu_inf(1.0).map_err(eval_err("mu_inf"))? * lim.g1_inf;
        Ok(Self {
            prob,
            basis: *basis,
            a: assemble_a_inf(basis, prob)?,
            boundary: (b0, b1),
        })
    }

    /// `A c + F(c) - L`.
    fn residual(&self, c: &[f64]) -> Result<Vec<f64>, SolveError> {
        let ac = self.a.mul_vec(c)?;
        let load = load_with(&self.basis, &self.prob.f, c, |x| self.prob.limits.f1_inf(x))
            .map_err(eval_err("f1_inf or f"))?;
        let mut r: Vec<f64> = ac.iter().zip(&load).map(|(a, l)| a - l).collect();
        let n = r.len();
        r[0] += self.boundary.0;
        r[n - 1] += self.boundary.1;
        Ok(r)
    }

    /// `A + ∫ f'(u) w_i w_j`.
    fn jacobian(&self, c: &[f64]) -> Result<TriDiag, SolveError> {
        let h = self.basis.h();
        let n = c.len();
        let mut diag = self.a.diag().to_vec();
        let mut off = self.a.sup().to_vec();
        for e in 0..self.basis.elements() {
            for s in GAUSS2_REF {
                let (wl, wr) = (1.0 - s, s);
                let u = wl * c[e] + wr * c[e + 1];
                let d = 0.5 * h * self.prob.f.derivative(u).map_err(eval_err("f'"))?;
                diag[e] += d * wl * wl;
                diag[e + 1] += d * wr * wr;
                off[e] += d * wl * wr;
            }
        }
        debug_assert_eq!(diag.len(), n);
        Ok(TriDiag::new(off.clone(), diag, off)?)
    }

    /// `c <- A^{-1}(L - F(c))` until the residual meets `tol`.
    fn picard(&self, mut c: Vec<f64>, tol: f64) -> Result<(Vec<f64>, f64, usize), SolveError> {
        let mut norm = f64::INFINITY;
        for it in 1..=PICARD_MAX_ITERS {
            let r = self.residual(&c)?;
            norm = sup_norm(&r);
            if norm <= tol {
                return Ok((c, norm, it));
            }
            // A c_new = A c - r
            let ac = self.a.mul_vec(&c)?;
            let rhs: Vec<f64> = ac.iter().zip(&r).map(|(a, b)| a - b).collect();
            c = self.a.solve(&rhs)?;
        }
        Err(SolveError::NewtonStagnated {
            iterations: PICARD_MAX_ITERS,
            residual: norm,
        })
    }
}

/// Solves from `c = 0`.
pub fn solve_stationary(
    prob: &StationaryProblem,
    basis: &FemBasis,
    cfg: &NewtonConfig,
) -> Result<StationarySolution, SolveError> {
    solve_stationary_from(prob, basis, cfg, vec![0.0; basis.n_nodes()])
}

/// Damped Newton from the given nodal initial guess, falling back to the
/// lagged fixed-point iteration if Newton stagnates.
pub fn solve_stationary_from(
    prob: &StationaryProblem,
    basis: &FemBasis,
    cfg: &NewtonConfig,
    initial: Vec<f64>,
) -> Result<StationarySolution, SolveError> {
    if initial.len() != basis.n_nodes() {
        return Err(SolveError::Config("initial guess does not match the basis".into()));
    }
    let disc = Discrete::new(prob, basis)?;
    let uniqueness_guaranteed = prob.uniqueness_guaranteed().map_err(eval_err("f"))?;
    let newton = damped_newton(initial.clone(), cfg, |c| disc.residual(c), |c| disc.jacobian(c));
    let (c, residual_sup, newton_iters, picard_fallback) = match newton {
        Ok(out) => (out.x, out.residual_sup, out.iterations, false),
        Err(SolveError::NewtonStagnated { iterations, .. }) => {
            let (c, r, _) = disc.picard(initial, cfg.tol)?;
            (c, r, iterations, true)
        }
        Err(e) => return Err(e),
    };
    Ok(StationarySolution {
        values: GridFunction::new(c)?,
        residual_sup,
        newton_iters,
        picard_fallback,
        uniqueness_guaranteed,
    })
}

/// Sup over basis functions of the defect of the discrete weak equation.
pub fn residual(prob: &StationaryProblem, c: &GridFunction, basis: &FemBasis) -> Result<f64, SolveError> {
    if c.n_cells() != basis.elements() {
        return Err(SolveError::Config("coefficients do not match the basis".into()));
    }
    Ok(sup_norm(&Discrete::new(prob, basis)?.residual(c.values())?))
}
