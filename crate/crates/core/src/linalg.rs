//! Small dense linear algebra on `D x D` arrays.
//!
//! Matrices are row-major `[[f64; D]; D]`. Everything here is sized for
//! `D <= 3` (coefficient matrices, blow-up matrices) or for the handful of
//! unknowns of a least-squares fit, so the algorithms favour robustness over
//! asymptotic speed: cyclic Jacobi for symmetric eigenproblems and Gaussian
//! elimination with partial pivoting for linear systems.

use alloc::vec::Vec;

use crate::{Error, Point, Result};

pub type Matrix<const D: usize> = [[f64; D]; D];

/// Eigenvalues below this are clamped before taking matrix powers.
pub const EIGEN_FLOOR: f64 = 1e-14;

pub fn identity<const D: usize>() -> Matrix<D> {
    let mut m = [[0.0; D]; D];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn diagonal<const D: usize>(d: &[f64; D]) -> Matrix<D> {
    let mut m = [[0.0; D]; D];
    for i in 0..D {
        m[i][i] = d[i];
    }
    m
}

pub fn dot<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm<const D: usize>(a: &Point<D>) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn add<const D: usize>(a: &Point<D>, b: &Point<D>) -> Point<D> {
    core::array::from_fn(|i| a[i] + b[i])
}

pub fn sub<const D: usize>(a: &Point<D>, b: &Point<D>) -> Point<D> {
    core::array::from_fn(|i| a[i] - b[i])
}

pub fn scale<const D: usize>(a: &Point<D>, s: f64) -> Point<D> {
    core::array::from_fn(|i| a[i] * s)
}

pub fn mat_vec<const D: usize>(m: &Matrix<D>, v: &Point<D>) -> Point<D> {
    core::array::from_fn(|i| dot(&m[i], v))
}

pub fn mat_mul<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> Matrix<D> {
    let mut c = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            c[i][j] = (0..D).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose<const D: usize>(a: &Matrix<D>) -> Matrix<D> {
    let mut t = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn mat_add<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> Matrix<D> {
    core::array::from_fn(|i| core::array::from_fn(|j| a[i][j] + b[i][j]))
}

pub fn mat_sub<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> Matrix<D> {
    core::array::from_fn(|i| core::array::from_fn(|j| a[i][j] - b[i][j]))
}

pub fn mat_scale<const D: usize>(a: &Matrix<D>, s: f64) -> Matrix<D> {
    core::array::from_fn(|i| core::array::from_fn(|j| a[i][j] * s))
}

/// `<M x, x>`.
pub fn quadratic_form<const D: usize>(m: &Matrix<D>, x: &Point<D>) -> f64 {
    dot(&mat_vec(m, x), x)
}

pub fn trace<const D: usize>(m: &Matrix<D>) -> f64 {
    (0..D).map(|i| m[i][i]).sum()
}

pub fn frobenius<const D: usize>(m: &Matrix<D>) -> f64 {
    libm::sqrt(m.iter().flatten().map(|x| x * x).sum())
}

pub fn symmetrize<const D: usize>(m: &Matrix<D>) -> Matrix<D> {
    core::array::from_fn(|i| core::array::from_fn(|j| 0.5 * (m[i][j] + m[j][i])))
}

/// Largest singular value.
pub fn spectral_norm<const D: usize>(m: &Matrix<D>) -> f64 {
    libm::sqrt(SymmetricEigen::new(&mat_mul(m, &transpose(m))).max().max(0.0))
}

/// Largest `|m_ij - m_ji|`.
pub fn asymmetry<const D: usize>(m: &Matrix<D>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..D {
        for j in 0..i {
            worst = worst.max((m[i][j] - m[j][i]).abs());
        }
    }
    worst
}

/// Spectral decomposition `M = V diag(values) V^T` of a symmetric matrix.
/// Eigenvalues are sorted ascending; `vectors[.][k]` is the k-th eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen<const D: usize> {
    pub values: [f64; D],
    pub vectors: Matrix<D>,
}

impl<const D: usize> SymmetricEigen<D> {
    /// Cyclic Jacobi rotations on the symmetric part of `m`.
    pub fn new(m: &Matrix<D>) -> Self {
        let mut a = symmetrize(m);
        let mut v = identity::<D>();
        let scale = frobenius(&a).max(f64::MIN_POSITIVE);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..D {
                for j in 0..i {
                    off += a[i][j] * a[i][j];
                }
            }
            if libm::sqrt(off) <= 1e-17 * scale {
                break;
            }
            for p in 0..D {
                for q in (p + 1)..D {
                    if a[p][q].abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..D {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..D {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for row in v.iter_mut() {
                        let vkp = row[p];
                        let vkq = row[q];
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: [usize; D] = core::array::from_fn(|i| i);
        order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
        let values = core::array::from_fn(|k| a[order[k]][order[k]]);
        let vectors = core::array::from_fn(|r| core::array::from_fn(|k| v[r][order[k]]));
        SymmetricEigen { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[D - 1]
    }

    pub fn eigenvector(&self, k: usize) -> Point<D> {
        core::array::from_fn(|r| self.vectors[r][k])
    }

    /// `V diag(g(values)) V^T`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Matrix<D> {
        let mapped: [f64; D] = core::array::from_fn(|k| g(self.values[k]));
        let mut m = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                m[i][j] = (0..D)
                    .map(|k| self.vectors[i][k] * mapped[k] * self.vectors[j][k])
                    .sum();
            }
        }
        m
    }
}

fn require_positive_definite<const D: usize>(eig: &SymmetricEigen<D>) -> Result<()> {
    if eig.min() > 0.0 {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            min_eigenvalue: eig.min(),
        })
    }
}

/// Principal square root of a symmetric positive definite matrix.
pub fn sqrt_spd<const D: usize>(m: &Matrix<D>) -> Result<Matrix<D>> {
    let eig = SymmetricEigen::new(m);
    require_positive_definite(&eig)?;
    Ok(eig.map(|l| libm::sqrt(l.max(EIGEN_FLOOR))))
}

/// Inverse of the principal square root.
pub fn inv_sqrt_spd<const D: usize>(m: &Matrix<D>) -> Result<Matrix<D>> {
    let eig = SymmetricEigen::new(m);
    require_positive_definite(&eig)?;
    Ok(eig.map(|l| 1.0 / libm::sqrt(l.max(EIGEN_FLOOR))))
}

/// Closest positive semidefinite matrix (negative eigenvalues clamped to
/// zero) rescaled to the prescribed trace.
pub fn project_psd_with_trace<const D: usize>(m: &Matrix<D>, target_trace: f64) -> Matrix<D> {
    let eig = SymmetricEigen::new(m);
    let clamped = eig.map(|l| l.max(0.0));
    let tr = trace(&clamped);
    if tr <= f64::MIN_POSITIVE {
        return mat_scale(&identity::<D>(), target_trace / D as f64);
    }
    mat_scale(&clamped, target_trace / tr)
}

/// Number of eigenvalues with `|lambda| <= threshold`.
pub fn kernel_dimension<const D: usize>(m: &Matrix<D>, threshold: f64) -> usize {
    SymmetricEigen::new(m)
        .values
        .iter()
        .filter(|l| l.abs() <= threshold)
        .count()
}

pub fn determinant<const D: usize>(m: &Matrix<D>) -> f64 {
    let mut a: Vec<f64> = m.iter().flatten().copied().collect();
    let mut det = 1.0;
    for col in 0..D {
        let pivot = (col..D)
            .max_by(|&i, &j| a[i * D + col].abs().total_cmp(&a[j * D + col].abs()))
            .unwrap_or(col);
        if a[pivot * D + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..D {
                a.swap(col * D + k, pivot * D + k);
            }
            det = -det;
        }
        det *= a[col * D + col];
        for row in (col + 1)..D {
            let factor = a[row * D + col] / a[col * D + col];
            for k in col..D {
                a[row * D + k] -= factor * a[col * D + k];
            }
        }
    }
    det
}

pub fn inverse<const D: usize>(m: &Matrix<D>) -> Result<Matrix<D>> {
    let mut inv = [[0.0; D]; D];
    for col in 0..D {
        let mut rhs = [0.0; D];
        rhs[col] = 1.0;
        let x = solve(m.iter().flatten().copied().collect(), rhs.to_vec(), D)?;
        for row in 0..D {
            inv[row][col] = x[row];
        }
    }
    Ok(inv)
}

/// Solves the dense `n x n` system `a x = b` (row-major `a`) by Gaussian
/// elimination with partial pivoting.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n || b.len() != n {
        return Err(Error::param("system", "dimension mismatch"));
    }
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        if a[pivot * n + col].abs() <= 1e-14 * scale {
            return Err(Error::param("system", "matrix is singular to working precision"));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = alloc::vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = ((row + 1)..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_reconstructs_matrix() {
        let m = [[4.0, 1.0, -0.5], [1.0, 3.0, 0.25], [-0.5, 0.25, 1.0]];
        let eig = SymmetricEigen::new(&m);
        let back = eig.map(|l| l);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(back[i][j], m[i][j], epsilon = 1e-13);
            }
        }
        assert!(eig.values[0] <= eig.values[1] && eig.values[1] <= eig.values[2]);
    }

    #[test]
    fn principal_square_root() {
        let s = sqrt_spd(&diagonal(&[4.0, 1.0])).unwrap();
        assert_relative_eq!(s[0][0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(s[1][1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s[0][1], 0.0, epsilon = 1e-14);

        let m = [[2.0, 0.5], [0.5, 1.0]];
        let r = sqrt_spd(&m).unwrap();
        let rr = mat_mul(&r, &r);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(rr[i][j], m[i][j], epsilon = 1e-13);
            }
        }
        let ri = inv_sqrt_spd(&m).unwrap();
        let id = mat_mul(&r, &ri);
        assert_relative_eq!(id[0][0], 1.0, epsilon = 1e-13);
        assert_relative_eq!(id[0][1], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        assert!(matches!(
            sqrt_spd(&diagonal(&[1.0, -1.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn psd_projection_clamps_and_normalizes() {
        let p = project_psd_with_trace(&diagonal(&[1.0, -0.2]), 0.5);
        assert_relative_eq!(p[0][0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(p[1][1], 0.0, epsilon = 1e-14);
        assert_eq!(kernel_dimension(&p, 1e-3 * 0.5), 1);
    }

    #[test]
    fn dense_solve_and_inverse() {
        let x = solve(alloc::vec![0.0, 2.0, 1.0, 1.0], alloc::vec![4.0, 3.0], 2).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-14);
        let m = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let inv = inverse(&m).unwrap();
        let id = mat_mul(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(id[i][j], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-13);
            }
        }
        assert_relative_eq!(determinant(&m), 18.0, epsilon = 1e-12);
    }
}
