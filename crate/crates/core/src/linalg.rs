//! Small dense helpers. Matrix work (Cholesky, inverses) goes through nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{ArmlError, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `y += scale * x`
pub fn axpy(y: &mut [f64], scale: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += scale * xi;
    }
}

pub const SPD_EIGEN_TOL: f64 = 1e-12;

/// Checks symmetry and positive definiteness, returning the Cholesky factor.
pub fn cholesky_spd(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(ArmlError::arg("covariance must be square"));
    }
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(ArmlError::arg("covariance is not symmetric"));
    }
    let eig = m.clone().symmetric_eigenvalues();
    if eig.iter().any(|&l| !(l > SPD_EIGEN_TOL)) {
        return Err(ArmlError::arg(format!(
            "covariance is not positive definite (min eigenvalue {})",
            eig.min()
        )));
    }
    Cholesky::new(m.clone()).ok_or_else(|| ArmlError::arg("Cholesky factorization failed"))
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_vector_ops() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(linf_distance(&[1.0, 5.0], &[2.0, 3.0]), 2.0);
        let mut y = vec![1.0, 1.0];
        axpy(&mut y, 2.0, &[1.0, -1.0]);
        assert_eq!(y, vec![3.0, -1.0]);
    }

    #[test]
    fn spd_check() {
        let good = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!(cholesky_spd(&good).is_ok());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 1.0]);
        assert!(cholesky_spd(&asym).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky_spd(&indef).is_err());
    }
}
