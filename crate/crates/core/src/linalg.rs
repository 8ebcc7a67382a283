//! Tridiagonal matrices, the Thomas solver and a symmetric tridiagonal
//! eigensolver used for exponential time stepping.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("tridiagonal arrays have inconsistent lengths (sub {sub}, diag {diag}, super {sup})")]
    Shape { sub: usize, diag: usize, sup: usize },
    #[error("dimension mismatch: matrix is {expected}, vector is {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("zero pivot in row {row}")]
    Singular { row: usize },
    #[error("eigenvalue {index} did not converge within {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
    #[error("off-diagonal pair {index} has opposite signs, matrix is not symmetrizable")]
    NotSymmetrizable { index: usize },
}

/// Tridiagonal matrix with `sub[i] = A[i+1][i]` and `sup[i] = A[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TriDiag {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self, LinalgError> {
        let m = diag.len();
        if m == 0 || sub.len() + 1 != m || sup.len() + 1 != m {
            return Err(LinalgError::Shape {
                sub: sub.len(),
                diag: m,
                sup: sup.len(),
            });
        }
        if sub.iter().chain(&diag).chain(&sup).any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    pub fn is_symmetric(&self) -> bool {
        self.sub == self.sup
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let m = self.dim();
        if v.len() != m {
            return Err(LinalgError::Dimension {
                expected: m,
                found: v.len(),
            });
        }
        let mut out = vec![0.0; m];
        for i in 0..m {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.sub[i - 1] * v[i - 1];
            }
            if i + 1 < m {
                s += self.sup[i] * v[i + 1];
            }
            out[i] = s;
        }
        Ok(out)
    }

    /// `alpha I + beta A`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> TriDiag {
        TriDiag {
            sub: self.sub.iter().map(|v| beta * v).collect(),
            diag: self.diag.iter().map(|v| alpha + beta * v).collect(),
            sup: self.sup.iter().map(|v| beta * v).collect(),
        }
    }

    /// `self + beta * other`.
    pub fn add_scaled(&self, beta: f64, other: &TriDiag) -> Result<TriDiag, LinalgError> {
        if other.dim() != self.dim() {
            return Err(LinalgError::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + beta * y).collect();
        Ok(TriDiag {
            sub: zip(&self.sub, &other.sub),
            diag: zip(&self.diag, &other.diag),
            sup: zip(&self.sup, &other.sup),
        })
    }

    /// Thomas algorithm (no pivoting).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let m = self.dim();
        if rhs.len() != m {
            return Err(LinalgError::Dimension {
                expected: m,
                found: rhs.len(),
            });
        }
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut pivot = self.diag[0];
        if pivot == 0.0 {
            return Err(LinalgError::Singular { row: 0 });
        }
        if m > 1 {
            c[0] = self.sup[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..m {
            pivot = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(LinalgError::Singular { row: i });
            }
            if i + 1 < m {
                c[i] = self.sup[i] / pivot;
            }
            d[i] = (rhs[i] - self.sub[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..m - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Eigenvalues and orthonormal eigenvectors of a symmetric tridiagonal
/// matrix by implicit QL with Wilkinson shifts.
///
/// `vectors` is row-major `m x m`, eigenvector `j` in column `j`.
pub fn symmetric_tridiagonal_eigen(
    diag: &[f64],
    off: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    const MAX_ITER: usize = 60;
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(LinalgError::NoConvergence {
                    index: l,
                    iterations: MAX_ITER,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Diagonalization `A = V diag(lambda) V^{-1}` of a tridiagonal matrix
/// whose off-diagonal pairs have matching signs, via the symmetrizing
/// similarity `D A D^{-1}`.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    eigenvalues: Vec<f64>,
    /// `V = D^{-1} Q`, row-major.
    v: Vec<f64>,
    /// `V^{-1} = Q^T D`, row-major.
    v_inv: Vec<f64>,
}

impl EigenPropagator {
    pub fn new(a: &TriDiag) -> Result<Self, LinalgError> {
        let m = a.dim();
        let mut scale = vec![1.0; m];
        let mut off = vec![0.0; m.saturating_sub(1)];
        for k in 0..m.saturating_sub(1) {
            let (lo, up) = (a.sub[k], a.sup[k]);
            if lo == up {
                off[k] = up;
            } else if lo * up > 0.0 {
                scale[k + 1] = scale[k] * (up / lo).sqrt();
                off[k] = up.signum() * (lo * up).sqrt();
            } else if lo == 0.0 && up == 0.0 {
                scale[k + 1] = scale[k];
            } else {
                return Err(LinalgError::NotSymmetrizable { index: k });
            }
        }
        let (eigenvalues, q) = symmetric_tridiagonal_eigen(&a.diag, &off)?;
        let mut v = vec![0.0; m * m];
        let mut v_inv = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                v[i * m + j] = q[i * m + j] / scale[i];
                v_inv[j * m + i] = q[i * m + j] * scale[i];
            }
        }
        Ok(Self {
            eigenvalues,
            v,
            v_inv,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn apply(mat: &[f64], x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|i| mat[i * m..(i + 1) * m].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Exact solution after `dt` of `u' = A u + b` with constant `b`:
    /// `V [e^{lambda dt} (V^{-1} u) + phi(lambda) (V^{-1} b)]` where
    /// `phi(lambda) = (e^{lambda dt} - 1) / lambda`.
    pub fn propagate(&self, u: &[f64], b: &[f64], dt: f64) -> Result<Vec<f64>, LinalgError> {
        let m = self.dim();
        for len in [u.len(), b.len()] {
            if len != m {
                return Err(LinalgError::Dimension { expected: m, found: len });
            }
        }
        let w = Self::apply(&self.v_inv, u);
        let z = Self::apply(&self.v_inv, b);
        let y: Vec<f64> = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &lam)| {
                let phi = if lam == 0.0 { dt } else { (lam * dt).exp_m1() / lam };
                (lam * dt).exp() * w[i] + phi * z[i]
            })
            .collect();
        Ok(Self::apply(&self.v, &y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thomas_solves_small_system() {
        let a = TriDiag::new(vec![1.0, 1.0], vec![4.0, 4.0, 4.0], vec![1.0, 1.0]).unwrap();
        let x = vec![1.0, -2.0, 3.0];
        let b = a.mul_vec(&x).unwrap();
        let y = a.solve(&b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-14);
        }
    }

    #[test]
    fn shape_is_checked() {
        assert!(TriDiag::new(vec![1.0], vec![1.0], vec![]).is_err());
        assert!(TriDiag::new(vec![], vec![f64::NAN], vec![]).is_err());
    }

    #[test]
    fn scalar_decay() {
        let a = TriDiag::new(vec![], vec![-1.0], vec![]).unwrap();
        let p = EigenPropagator::new(&a).unwrap();
        let u = p.propagate(&[1.0], &[0.0], 1.0).unwrap();
        assert_abs_diff_eq!(u[0], (-1.0f64).exp(), epsilon = 1e-15);
        let be = a.shifted(1.0, -1.0).solve(&[1.0]).unwrap();
        assert_eq!(be[0], 0.5);
    }

    #[test]
    fn eigenvectors_of_known_matrix() {
        // [-2 1; 1 -2] has eigenvalues -3, -1
        let (mut vals, _) = symmetric_tridiagonal_eigen(&[-2.0, -2.0], &[1.0]).unwrap();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(vals[0], -3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn nonsymmetric_similarity_reconstructs_matrix() {
        let a = TriDiag::new(vec![2.0, 0.5], vec![-3.0, -4.0, -2.0], vec![1.0, 3.0]).unwrap();
        let p = EigenPropagator::new(&a).unwrap();
        let m = 3;
        for i in 0..m {
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..m {
                    s += p.v[i * m + k] * p.eigenvalues[k] * p.v_inv[k * m + j];
                }
                assert_abs_diff_eq!(s, a.get(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn opposite_sign_pair_is_rejected() {
        let a = TriDiag::new(vec![-1.0], vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(
            EigenPropagator::new(&a),
            Err(LinalgError::NotSymmetrizable { index: 0 })
        ));
    }
}
