//! Dense linear-algebra helpers shared by every estimator.
//!
//! Matrices are plain `nalgebra::DMatrix<f64>`. The pseudo-inverse uses a
//! singular value decomposition with a relative cutoff; regularized solves go
//! through a Cholesky factorization that reports the failing pivot.

use nalgebra::{DMatrix, DVector};

use crate::error::{KoopmanError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used when callers do not pick one.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Relative tolerance for the symmetry precondition of [`solve_regularized`].
pub const SYMMETRY_TOL: f64 = 1e-10;

pub(crate) fn ensure_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(KoopmanError::invalid(format!(
            "{what} has non-finite entries"
        )))
    }
}

pub(crate) fn ensure_nonempty(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        Err(KoopmanError::invalid(format!(
            "{what} is empty ({}x{})",
            a.nrows(),
            a.ncols()
        )))
    } else {
        Ok(())
    }
}

/// Largest absolute entry.
pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Returns true when `a` is square and `|a - aᵀ|` is within `rel_tol` of its
/// largest entry.
pub fn is_symmetric(a: &Matrix, rel_tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// Moore–Penrose pseudo-inverse.
///
/// Singular values below `rank_tol * σ_max` are treated as zero.
pub fn pseudo_inverse(a: &Matrix, rank_tol: f64) -> Result<Matrix> {
    if !(rank_tol >= 0.0) || !rank_tol.is_finite() {
        return Err(KoopmanError::invalid(format!(
            "rank tolerance must be finite and non-negative, got {rank_tol}"
        )));
    }
    ensure_nonempty(a, "pseudo-inverse input")?;
    ensure_finite(a, "pseudo-inverse input")?;

    let (u, s, v) = thin_svd(a)?;
    let s_max = s.iter().fold(0.0_f64, |m, &v| m.max(v));
    let cutoff = rank_tol * s_max;

    // A† = V Σ⁺ Uᵀ
    let mut out = Matrix::zeros(a.ncols(), a.nrows());
    for (k, &sigma) in s.iter().enumerate() {
        if sigma <= cutoff || sigma == 0.0 {
            continue;
        }
        out += (v.column(k) / sigma) * u.column(k).transpose();
    }
    Ok(out)
}

/// Singular values of `a`, largest first.
pub fn singular_values(a: &Matrix) -> Result<Vector> {
    ensure_nonempty(a, "SVD input")?;
    ensure_finite(a, "SVD input")?;
    Ok(thin_svd(a)?.1)
}

// nalgebra 0.35's SVD loses accuracy on exactly rank-deficient inputs, so the
// factorization is delegated to faer.
fn thin_svd(a: &Matrix) -> Result<(Matrix, Vector, Matrix)> {
    let f = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = f
        .thin_svd()
        .map_err(|e| KoopmanError::invalid(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = a.nrows().min(a.ncols());
    Ok((
        Matrix::from_fn(a.nrows(), k, |i, j| u[(i, j)]),
        Vector::from_fn(k, |i, _| s[i]),
        Matrix::from_fn(a.ncols(), k, |i, j| v[(i, j)]),
    ))
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// Only the lower triangle of `g` is read. Fails with the first non-positive
/// pivot.
pub fn cholesky(g: &Matrix) -> Result<Matrix> {
    let n = g.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(KoopmanError::Conditioning { pivot: d, index: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ X = B` in place given the Cholesky factor `L`.
pub fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..x.ncols() {
        // forward: L z = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // backward: Lᵀ x = z
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Computes `(G + cI)⁻¹ B` through a Cholesky factorization.
pub fn solve_regularized(g: &Matrix, c: f64, b: &Matrix) -> Result<Matrix> {
    ensure_nonempty(g, "system matrix")?;
    if !g.is_square() {
        return Err(KoopmanError::invalid(format!(
            "system matrix must be square, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(KoopmanError::invalid(format!(
            "regularization must be finite and non-negative, got {c}"
        )));
    }
    if b.nrows() != g.nrows() {
        return Err(KoopmanError::invalid(format!(
            "right-hand side has {} rows, system has {}",
            b.nrows(),
            g.nrows()
        )));
    }
    ensure_finite(g, "system matrix")?;
    ensure_finite(b, "right-hand side")?;
    if !is_symmetric(g, SYMMETRY_TOL) {
        return Err(KoopmanError::invalid("system matrix is not symmetric"));
    }

    let mut shifted = g.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += c;
    }
    let l = cholesky(&shifted)?;
    Ok(cholesky_solve(&l, b))
}

/// Vector convenience wrapper around [`solve_regularized`].
pub fn solve_regularized_vec(g: &Matrix, c: f64, b: &Vector) -> Result<Vector> {
    let rhs = Matrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = solve_regularized(g, c, &rhs)?;
    Ok(x.column(0).into_owned())
}

/// Frobenius norm of `a - b` relative to the Frobenius norm of `b`.
pub fn relative_diff(a: &Matrix, b: &Matrix) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pinv_identity() {
        let i = Matrix::identity(2, 2);
        let p = pseudo_inverse(&i, DEFAULT_RANK_TOL).unwrap();
        assert_relative_eq!(p, i, epsilon = 1e-14);
    }

    #[test]
    fn pinv_rank_deficient_diagonal() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
        assert_relative_eq!(p, a, epsilon = 1e-14);
    }

    #[test]
    fn pinv_column() {
        let a = Matrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let p = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(p.shape(), (1, 2));
        assert_relative_eq!(p[(0, 0)], 0.2, epsilon = 1e-14);
        assert_relative_eq!(p[(0, 1)], 0.4, epsilon = 1e-14);
    }

    #[test]
    fn pinv_wide_matrix() {
        let a = Matrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let p = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(p.shape(), (2, 1));
        assert_relative_eq!(p[(0, 0)], 0.2, epsilon = 1e-14);
        assert_relative_eq!(p[(1, 0)], 0.4, epsilon = 1e-14);
    }

    #[test]
    fn pinv_exact_rank_two_wide() {
        let a = Matrix::from_column_slice(
            3,
            4,
            &[
                -0.015269945129400081,
                -0.37826436996148793,
                -0.5242991284719322,
                -0.6246534041703433,
                0.4756566616237064,
                -0.16256682631509983,
                0.7604333371586842,
                -0.7180077135820223,
                0.0124587983510994,
                -0.43375160756453846,
                -0.22197254823645263,
                -0.8498990351664368,
            ],
        );
        let p = pseudo_inverse(&a, 1e-10).unwrap();
        assert!((&a * &p * &a - &a).norm() / a.norm() < 1e-12);
        let s = singular_values(&a).unwrap();
        assert_relative_eq!(s[0], 1.3575173794435522, epsilon = 1e-12);
        assert!(s[2] < 1e-14);
    }

    #[test]
    fn pinv_rejects_non_finite() {
        let a = Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(
            pseudo_inverse(&a, DEFAULT_RANK_TOL),
            Err(KoopmanError::InvalidInput(_))
        ));
    }

    #[test]
    fn pinv_zero_matrix() {
        let a = Matrix::zeros(3, 2);
        let p = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(p, Matrix::zeros(2, 3));
    }

    #[test]
    fn solve_identity_system() {
        let g = Matrix::identity(2, 2);
        let b = Matrix::from_row_slice(2, 1, &[3.0, 4.0]);
        let x = solve_regularized(&g, 0.0, &b).unwrap();
        assert_relative_eq!(x, b, epsilon = 1e-14);
    }

    #[test]
    fn solve_scalar_with_shift() {
        let g = Matrix::from_element(1, 1, 1.0);
        let b = Matrix::from_element(1, 1, 4.0);
        let x = solve_regularized(&g, 1.0, &b).unwrap();
        assert_relative_eq!(x[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn solve_two_by_two_inverse() {
        let g = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let x = solve_regularized(&g, 0.0, &Matrix::identity(2, 2)).unwrap();
        let expected =
            Matrix::from_row_slice(2, 2, &[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]);
        assert_relative_eq!(x, expected, epsilon = 1e-14);
    }

    #[test]
    fn solve_reports_failing_pivot() {
        let g = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = solve_regularized(&g, 0.0, &Matrix::identity(2, 2)).unwrap_err();
        match err {
            KoopmanError::Conditioning { pivot, index } => {
                assert_eq!(index, 1);
                assert_relative_eq!(pivot, -3.0, epsilon = 1e-14);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn solve_rejects_asymmetric() {
        let g = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(
            solve_regularized(&g, 0.0, &Matrix::identity(2, 2)),
            Err(KoopmanError::InvalidInput(_))
        ));
    }

    #[test]
    fn solve_rejects_shape_mismatch() {
        let g = Matrix::identity(2, 2);
        let b = Matrix::zeros(3, 1);
        assert!(solve_regularized(&g, 0.0, &b).is_err());
        assert!(solve_regularized(&g, -1.0, &Matrix::zeros(2, 1)).is_err());
    }
}
