//! Discrete norms, the bilinear form `a(t; u, v)` and its constants.
//!
//! L² pieces use the composite trapezoid rule; derivative pieces use
//! forward differences on cells with `mu` at cell midpoints.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, EvalError, Var};
use crate::grid::{GridError, GridFunction};
use crate::problem::ProblemSpec;
use crate::sampling::{t_lattice, x_lattice};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("failed to evaluate mu: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

pub fn l2_norm_sq(v: &GridFunction) -> f64 {
    let h = v.h();
    let vals = v.values();
    let n = vals.len() - 1;
    let inner: f64 = vals[1..n].iter().map(|x| x * x).sum();
    h * (inner + 0.5 * (vals[0] * vals[0] + vals[n] * vals[n]))
}

pub fn l2_norm(v: &GridFunction) -> f64 {
    l2_norm_sq(v).sqrt()
}

/// `‖v_x‖²` with forward differences on cells.
pub fn derivative_norm_sq(v: &GridFunction) -> f64 {
    let h = v.h();
    v.values()
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / h;
            h * d * d
        })
        .sum()
}

pub fn h1_norm(v: &GridFunction) -> f64 {
    (l2_norm_sq(v) + derivative_norm_sq(v)).sqrt()
}

/// `(v(i)² + ‖v_x‖²)^{1/2}` with `i` the chosen endpoint.
pub fn i_norm(v: &GridFunction, end: Endpoint) -> f64 {
    let b = match end {
        Endpoint::Left => v.first(),
        Endpoint::Right => v.last(),
    };
    (b * b + derivative_norm_sq(v)).sqrt()
}

fn weighted_form(
    u: &GridFunction,
    v: &GridFunction,
    h0: f64,
    h1: f64,
    mut weight: impl FnMut(f64) -> Result<f64, EvalError>,
) -> Result<f64, FormError> {
    u.check_same_grid(v)?;
    let h = u.h();
    let (uv, vv) = (u.values(), v.values());
    let mut interior = 0.0;
    for k in 0..u.n_cells() {
        let m = weight((k as f64 + 0.5) * h)?;
        let du = (uv[k + 1] - uv[k]) / h;
        let dv = (vv[k + 1] - vv[k]) / h;
        interior += h * m * (du * dv);
    }
    let n = u.n_cells();
    let left = h0 * weight(0.0)? * (uv[0] * vv[0]);
    let right = h1 * weight(1.0)? * (uv[n] * vv[n]);
    Ok(interior + left + right)
}

/// `a(t; u, v) = ⟨mu u_x, v_x⟩ + h0 mu(0,t) u(0) v(0) + h1 mu(1,t) u(1) v(1)`.
pub fn bilinear_a(
    t: f64,
    u: &GridFunction,
    v: &GridFunction,
    spec: &ProblemSpec,
) -> Result<f64, FormError> {
    let b = &spec.boundary;
    weighted_form(u, v, b.h0, b.h1, |x| spec.mu.eval(x, t))
}

/// `∂a/∂t`, the same quadrature with `mu` replaced by `∂mu/∂t`.
pub fn da_dt(
    t: f64,
    u: &GridFunction,
    v: &GridFunction,
    spec: &ProblemSpec,
) -> Result<f64, FormError> {
    let b = &spec.boundary;
    weighted_form(u, v, b.h0, b.h1, |x| spec.mu.dt(x, t))
}

/// `a0 = mu0 min{h0, 1/2}` when `h0 > 0`, else `mu0 min{h1, 1/2}`.
pub fn coercivity_constant(mu0: f64, h0: f64, h1: f64) -> f64 {
    if h0 > 0.0 {
        mu0 * h0.min(0.5)
    } else {
        mu0 * h1.min(0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormConstants {
    pub mu0: f64,
    pub a0: f64,
    /// `(1 + 2h0 + 2h1) sup mu`
    pub a_t: f64,
    /// `(1 + 2h0 + 2h1) sup |∂mu/∂t|`
    pub a_t_tilde: f64,
    pub mu_sup: f64,
    pub mu_x_sup: f64,
    pub mu_t_sup: f64,
}

pub fn form_constants(spec: &ProblemSpec) -> Result<FormConstants, EvalError> {
    let mu0 = spec.mu.mu0();
    let (h0, h1) = (spec.boundary.h0, spec.boundary.h1);
    let (mut mu_sup, mut mu_x_sup, mut mu_t_sup) = (0.0f64, 0.0f64, 0.0f64);
    let expr = spec.mu.expr();
    let time_dependent = spec.mu.is_time_dependent();
    for &t in &t_lattice(spec.horizon) {
        for &x in &x_lattice() {
            let b = Bindings::xt(x, t);
            mu_sup = mu_sup.max(expr.eval(&b)?.abs());
            mu_x_sup = mu_x_sup.max(expr.numeric_partial(Var::X, &b, None)?.abs());
            if time_dependent {
                mu_t_sup = mu_t_sup.max(expr.numeric_partial(Var::T, &b, None)?.abs());
            }
        }
    }
    let factor = 1.0 + 2.0 * h0 + 2.0 * h1;
    Ok(FormConstants {
        mu0,
        a0: coercivity_constant(mu0, h0, h1),
        a_t: factor * mu_sup,
        a_t_tilde: factor * mu_t_sup,
        mu_sup,
        mu_x_sup,
        mu_t_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub max_abs: f64,
    /// `√2 ‖v‖_{H¹}`
    pub bound_h1: f64,
    pub bound_left: f64,
    pub bound_right: f64,
    /// Smallest of the three `bound - max|v|`.
    pub worst_margin: f64,
}

/// Compares `max|v_k|` with `√2‖v‖_{H¹}` and `√2‖v‖_i`, `i = 0, 1`.
pub fn sup_norm_embedding_check(v: &GridFunction) -> EmbeddingReport {
    let s2 = std::f64::consts::SQRT_2;
    let max_abs = v.max_abs();
    let bound_h1 = s2 * h1_norm(v);
    let bound_left = s2 * i_norm(v, Endpoint::Left);
    let bound_right = s2 * i_norm(v, Endpoint::Right);
    let worst_margin = (bound_h1 - max_abs)
        .min(bound_left - max_abs)
        .min(bound_right - max_abs);
    EmbeddingReport {
        max_abs,
        bound_h1,
        bound_left,
        bound_right,
        worst_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn norms_of_constant() {
        let v = GridFunction::from_fn(10, |_| 1.0).unwrap();
        assert_abs_diff_eq!(h1_norm(&v), 1.0, epsilon = 1e-15);
        assert_eq!(i_norm(&v, Endpoint::Left), 1.0);
        assert_eq!(i_norm(&v, Endpoint::Right), 1.0);
    }

    #[test]
    fn norms_of_identity() {
        let v = GridFunction::from_fn(100, |x| x).unwrap();
        assert_abs_diff_eq!(h1_norm(&v).powi(2), 4.0 / 3.0, epsilon = 1e-3);
        let r = sup_norm_embedding_check(&v);
        assert_eq!(r.max_abs, 1.0);
        assert!(r.worst_margin > 0.0);
        assert_abs_diff_eq!(r.bound_h1, 2f64.sqrt() * (4.0f64 / 3.0).sqrt(), epsilon = 1e-3);
    }

    #[test]
    fn coercivity_formula() {
        assert_eq!(coercivity_constant(1.0, 2.0, 1.0), 0.5);
        assert_eq!(coercivity_constant(2.0, 0.0, 0.25), 0.5);
        assert_eq!(coercivity_constant(1.0, 0.1, 5.0), 0.1);
    }
}
