//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
pub fn power_iteration_max_eig(a: &DMatrix<f64>, max_iters: usize, tol: f64) -> f64 {
    let d = a.nrows();
    // Start off any coordinate axis so that diagonal inputs still converge.
    let mut v = DVector::from_fn(d, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0)
}

/// Symmetric inverse square root `V diag(1/sqrt(l)) V^T`; eigenvalues below `floor` are rejected.
pub fn inverse_sqrt_spd(a: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    let eig = a.clone().symmetric_eigen();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| !(l > floor)) {
        return Err(Error::NotPositiveDefinite(format!(
            "eigenvalue {bad:e} below floor {floor:e}"
        )));
    }
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        eig.eigenvectors[(i, j)] / eig.eigenvalues[j].sqrt()
    });
    Ok(&scaled * eig.eigenvectors.transpose())
}

pub fn min_eigenvalue_sym(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigen().eigenvalues.min()
}

/// Least squares via the normal equations and a Cholesky solve.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(Error::shape("design rows and response length differ"));
    }
    let gram = x.tr_mul(x);
    let rhs = x.tr_mul(y);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("normal equations are not positive definite".into()))?;
    let scale = chol.l_dirty().diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smallest = chol
        .l_dirty()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if smallest <= 1e-10 * scale {
        return Err(Error::SingularMatrix("design is numerically rank deficient".into()));
    }
    Ok(chol.solve(&rhs))
}
