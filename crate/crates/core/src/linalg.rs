//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower Cholesky factor of a symmetric positive definite matrix together
/// with `ln det`.
pub struct CholeskyLogDet {
    pub factor: DMatrix<f64>,
    pub log_det: f64,
}

pub fn cholesky_log_det(m: &DMatrix<f64>) -> Result<CholeskyLogDet> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let factor = chol.l();
    let log_det = 2.0 * factor.diagonal().iter().map(|x| x.ln()).sum::<f64>();
    if !log_det.is_finite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(CholeskyLogDet { factor, log_det })
}

/// Inverse from a lower Cholesky factor `L` (so that `A = L Lᵀ`) by two
/// triangular solves against the identity.
pub fn inverse_from_factor(factor: &DMatrix<f64>) -> DMatrix<f64> {
    let n = factor.nrows();
    let mut x = DMatrix::<f64>::identity(n, n);
    factor.solve_lower_triangular_mut(&mut x);
    factor.tr_solve_lower_triangular_mut(&mut x);
    // symmetrize away rounding
    let xt = x.transpose();
    (x + xt) * 0.5
}

/// Solve `A x = b` given the lower Cholesky factor of `A`.
pub fn solve_with_factor(factor: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = b.clone();
    factor.solve_lower_triangular_mut(&mut x);
    factor.tr_solve_lower_triangular_mut(&mut x);
    x
}

/// Orthonormal basis of the hyperplane `v⊥`, returned as the columns of a
/// `len × (len-1)` matrix. Built from the Householder reflection that
/// maps `v / |v|` to the first coordinate vector.
pub fn orthogonal_complement_basis(v: &DVector<f64>) -> DMatrix<f64> {
    let len = v.len();
    let norm = v.norm();
    let unit = v / norm;
    let mut w = unit.clone();
    // reflect onto -sign(u_0) e_0 to avoid cancellation
    let sign = if unit[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign;
    let wn2 = w.norm_squared();
    let reflector = DMatrix::<f64>::identity(len, len) - (&w * w.transpose()) * (2.0 / wn2);
    reflector.columns(1, len - 1).into_owned()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_matches_product_of_pivots() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let c = cholesky_log_det(&a).unwrap();
        assert!((c.log_det - a.determinant().ln()).abs() < 1e-12);
        let inv = inverse_from_factor(&c.factor);
        let id = &inv * &a;
        assert!(max_abs(&(id - DMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            cholesky_log_det(&a),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn complement_basis_is_orthonormal_and_orthogonal() {
        let v = DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0, -1.0]);
        let b = orthogonal_complement_basis(&v);
        assert_eq!(b.shape(), (5, 4));
        let gram = b.transpose() * &b;
        assert!(max_abs(&(gram - DMatrix::identity(4, 4))) < 1e-14);
        assert!((b.transpose() * &v).amax() < 1e-14);
    }
}
