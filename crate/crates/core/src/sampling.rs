//! Deterministic sample sets used by the hypothesis and growth audits.

/// Points on each side of zero in the symmetric `u` sample set.
const U_SAMPLES_PER_SIDE: usize = 500;

/// Symmetric log-spaced `u` samples: 500 points in `[1e-3, 1e3]`, their
/// negatives, and zero. The decades `10^k, k = -3..=3` are hit exactly.
pub fn u_samples() -> Vec<f64> {
    let n = U_SAMPLES_PER_SIDE;
    let mut pos: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64))
        .collect();
    for k in -3..=3 {
        let i = ((k + 3) as f64 * (n - 1) as f64 / 6.0).round() as usize;
        pos[i] = 10f64.powi(k);
    }
    let mut all: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    all.push(0.0);
    all.extend(pos);
    all
}

/// `n` equally spaced points covering `[a, b]` including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Points per axis of the `(x, t)` audit lattice.
pub const LATTICE_POINTS: usize = 101;

pub fn x_lattice() -> Vec<f64> {
    linspace(0.0, 1.0, LATTICE_POINTS)
}

pub fn t_lattice(horizon: f64) -> Vec<f64> {
    linspace(0.0, horizon, LATTICE_POINTS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_samples_shape() {
        let u = u_samples();
        assert_eq!(u.len(), 1001);
        assert_eq!(u[500], 0.0);
        assert!(u.windows(2).all(|w| w[0] < w[1]));
        for k in -3..=3 {
            let d = 10f64.powi(k);
            assert!(u.contains(&d) && u.contains(&-d), "missing 1e{k}");
        }
    }

    #[test]
    fn lattice_hits_midpoint() {
        let x = x_lattice();
        assert_eq!(x.len(), 101);
        assert_eq!(x[50], 0.5);
        assert_eq!(x[100], 1.0);
    }
}
