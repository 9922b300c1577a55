//! Non-private least squares and the un-corrected Gaussian-release ablation.

use nalgebra::{DMatrix, DVector};

use crate::dgm::DgmRelease;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub weights: DVector<f64>,
    /// Minimum absolute eigenvalue of the regularized normalized Gram matrix.
    pub min_abs_eigenvalue: f64,
}

/// Solve `((1/n) XᵀX + λ I) w = (1/n) XᵀY`.
pub fn ols_train(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<LinearFit> {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let (n, d) = x.shape();
    if n == 0 {
        return Err(Error::Empty("no training rows"));
    }
    if y.len() != n {
        return Err(Error::Dimension(format!("{n} feature rows but {} labels", y.len())));
    }
    if lambda == 0.0 && n < d {
        return Err(Error::Singular {
            reason: format!("n = {n} rows cannot determine d = {d} weights"),
            min_abs_eigenvalue: 0.0,
            condition: f64::INFINITY,
        });
    }
    let mut gram = x.tr_mul(x) / n as f64;
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let rhs = x.tr_mul(y) / n as f64;
    let sol = linalg::solve_symmetric(&gram, &rhs)?;
    Ok(LinearFit {
        weights: sol.solution,
        min_abs_eigenvalue: sol.min_abs_eigenvalue,
    })
}

/// Plain least squares on a Gaussian release, without removing the noise bias.
pub fn bgm_train(release: &DgmRelease, lambda: f64) -> Result<LinearFit> {
    ols_train(&release.features(), &release.labels(), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{partition_evenly, DataMatrix};
    use crate::dgm::dgm_release;
    use crate::privacy::PrivacyParams;
    use crate::rng;
    use crate::synthetic::{gen_dataset, gen_ground_truth};

    #[test]
    fn square_full_rank_recovers_weights() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, -1.0, 3.0]);
        let w = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let fit = ols_train(&x, &(&x * &w), 0.0).unwrap();
        assert!((fit.weights - w).amax() < 1e-10);
    }

    #[test]
    fn underdetermined_is_singular() {
        let x = DMatrix::from_element(2, 4, 0.5);
        let y = DVector::zeros(2);
        assert!(matches!(ols_train(&x, &y, 0.0), Err(Error::Singular { .. })));
        assert!(matches!(
            ols_train(&x, &DVector::zeros(3), 0.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn bgm_without_noise_is_ols() {
        let w = gen_ground_truth(4, &mut rng::stream(1));
        let data: DataMatrix = gen_dataset(100, &w, &mut rng::stream(2));
        let p = partition_evenly(5, 2).unwrap();
        let rel = dgm_release(&data, &p, &PrivacyParams::noiseless(), 3).unwrap();
        let a = bgm_train(&rel, 1e-5).unwrap();
        let b = ols_train(&data.features(), &data.labels(), 1e-5).unwrap();
        assert!((a.weights - b.weights).amax() <= 1e-12);
    }
}
