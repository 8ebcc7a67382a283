//! One-dimensional quadrature helpers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("adaptive quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
pub struct QuadratureError {
    pub requested: f64,
    pub achieved: f64,
}

/// Abscissae of the 2-point Gauss rule mapped to `[0, 1]`.
pub const GAUSS2_REF: [f64; 2] = [
    0.5 - 0.288_675_134_594_812_9,
    0.5 + 0.288_675_134_594_812_9,
];

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// The absolute tolerance is floored at `1e-14` relative to the magnitude
/// of the integral, which is the most double precision can deliver.
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = abs_tol.max(1e-14 * whole.abs());
    let mut worst = 0.0f64;
    let value = simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut worst);
    if worst > 0.0 {
        return Err(QuadratureError {
            requested: tol,
            achieved: worst,
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    unconverged: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *unconverged += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, unconverged)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, unconverged)
}

/// Composite trapezoid rule over samples `ys` at abscissae `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Running trapezoid integral: `out[i] = ∫_{xs[0]}^{xs[i]}`.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..xs.len() {
        acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
        out.push(acc);
    }
    out
}
