//! Symmetric eigenvalues (cyclic Jacobi) and Cholesky-based definiteness tests.

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Only the upper triangle is read; the caller is responsible for symmetry.
pub fn symmetric_eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<T>> {
    if !a.is_square() {
        return invalid(format!(
            "symmetric eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        ));
    }
    let n = a.rows();
    let mut m = Matrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let scale = m.frobenius_norm();
    if scale == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let tol = T::epsilon() * T::lit(0.5) * scale;

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= tol {
            let mut eig: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
            eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
            return Ok(eig);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps (n = {n})"
    )))
}

/// Largest eigenvalue of the symmetric matrix `a`.
pub fn max_symmetric_eigenvalue<T: Real>(a: &Matrix<T>) -> Result<T> {
    let eig = symmetric_eigenvalues(a)?;
    eig.last()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("empty matrix".into()))
}

/// Lower-triangular Cholesky factor, or `None` if `a` is not positive definite.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Option<Matrix<T>> {
    if !a.is_square() {
        return None;
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Symmetric (to a relative 1e-8) and Cholesky-factorisable.
pub fn is_positive_definite<T: Real>(a: &Matrix<T>) -> bool {
    a.is_symmetric(T::lit(1e-8)) && cholesky(a).is_some()
}
