//! Symmetric linear solves with spectral diagnostics.
//!
//! Every trainer in the crate ends in a `d × d` symmetric system. The de-biased
//! Hessian can be indefinite, so Cholesky is not an option; instead the system
//! is solved through a full symmetric eigendecomposition, which also yields the
//! exact minimum absolute eigenvalue and 2-norm condition number reported in
//! the diagnostics. `d` is at most a few hundred for every supported dataset.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Systems whose 2-norm condition number exceeds this are rejected as singular.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSolution {
    pub solution: DVector<f64>,
    pub min_abs_eigenvalue: f64,
    pub condition: f64,
}

/// Eigenvalues of a symmetric matrix (the strictly lower triangle is ignored
/// after symmetrization).
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(symmetrize(a)).eigenvalues
}

pub fn min_abs_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(a).iter().fold(f64::INFINITY, |m, l| m.min(l.abs()))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Solve `a · x = b` for symmetric `a`.
pub fn solve_symmetric(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<SymmetricSolution> {
    let d = a.nrows();
    if a.ncols() != d || b.len() != d {
        return Err(Error::Dimension(format!(
            "system matrix {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if d == 0 {
        return Err(Error::Empty("zero-dimensional system"));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite entry in linear system".into()));
    }

    let eig = SymmetricEigen::new(symmetrize(a));
    let (min_abs, max_abs) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| (lo.min(l.abs()), hi.max(l.abs())));
    let condition = if min_abs > 0.0 { max_abs / min_abs } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::Singular {
            reason: format!("condition number exceeds {MAX_CONDITION:e}"),
            min_abs_eigenvalue: min_abs,
            condition,
        });
    }

    // x = V Λ⁻¹ Vᵀ b
    let mut coeffs = eig.eigenvectors.tr_mul(b);
    for (c, l) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c /= l;
    }
    Ok(SymmetricSolution {
        solution: &eig.eigenvectors * coeffs,
        min_abs_eigenvalue: min_abs,
        condition,
    })
}
