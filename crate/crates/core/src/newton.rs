//! Damped Newton iteration for systems with tridiagonal Jacobians.

use crate::linalg::TriDiag;
use crate::stepping::SolveError;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Initial step length, usually 1.
    pub damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual_sup: f64,
    /// Number of iterations at which the residual was examined; a
    /// starting point that already satisfies the tolerance counts as 1.
    pub iterations: usize,
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `R(x) = 0` from `x0`, halving the step until the sup-norm
/// residual decreases.
pub(crate) fn damped_newton(
    x0: Vec<f64>,
    cfg: &NewtonConfig,
    mut residual: impl FnMut(&[f64]) -> Result<Vec<f64>, SolveError>,
    mut jacobian: impl FnMut(&[f64]) -> Result<TriDiag, SolveError>,
) -> Result<NewtonOutcome, SolveError> {
    let mut x = x0;
    let mut r = residual(&x)?;
    let mut norm = sup_norm(&r);
    for iter in 1..=cfg.max_iters {
        if norm <= cfg.tol {
            return Ok(NewtonOutcome {
                x,
                residual_sup: norm,
                iterations: iter,
            });
        }
        let j = jacobian(&x)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = j.solve(&neg)?;
        let mut lambda = cfg.damping;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            let rt = residual(&trial)?;
            let nt = sup_norm(&rt);
            if nt < norm {
                accepted = Some((trial, rt, nt));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, rt, nt)) => {
                x = xt;
                r = rt;
                norm = nt;
            }
            None => {
                return Err(SolveError::NewtonStagnated {
                    iterations: iter,
                    residual: norm,
                })
            }
        }
    }
    if norm <= cfg.tol {
        return Ok(NewtonOutcome {
            x,
            residual_sup: norm,
            iterations: cfg.max_iters,
        });
    }
    Err(SolveError::NewtonMaxIterations {
        iterations: cfg.max_iters,
        residual: norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_scalar_cubic() {
        // x^3 + x - 2 = 0 has the root 1
        let out = damped_newton(
            vec![0.0],
            &NewtonConfig::default(),
            |x| Ok(vec![x[0].powi(3) + x[0] - 2.0]),
            |x| Ok(TriDiag::new(vec![], vec![3.0 * x[0] * x[0] + 1.0], vec![]).unwrap()),
        )
        .unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-10);
        assert!(out.residual_sup <= 1e-10);
    }

    #[test]
    fn already_solved_counts_one_iteration() {
        let out = damped_newton(
            vec![0.0],
            &NewtonConfig::default(),
            |x| Ok(vec![x[0]]),
            |_| Ok(TriDiag::new(vec![], vec![1.0], vec![]).unwrap()),
        )
        .unwrap();
        assert_eq!(out.iterations, 1);
    }
}
