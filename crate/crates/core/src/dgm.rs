//! De-biased Gaussian mechanism.
//!
//! Release: every party adds i.i.d. `N(0, 4 d_max σ²)` noise to its own column
//! block. Training: the normalized Gram matrix of the released features is
//! inflated by exactly `4 d_max σ² I` in expectation, so that term is
//! subtracted before solving the normal equations. The subtraction can leave
//! the Hessian estimate with eigenvalues near zero, which the diagnostics
//! expose.

use nalgebra::{DMatrix, DVector};

use crate::data::{validate_bounds, DataMatrix, PartyPartition};
use crate::error::Result;
use crate::linalg::{self, SymmetricSolution};
use crate::privacy::{gaussian_noise, PrivacyParams};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct DgmRelease {
    /// `n × (d + 1)` released matrix `[X, Y] + R`.
    pub public_matrix: DMatrix<f64>,
    pub noise_std: f64,
    pub partition: PartyPartition,
    /// Seed of party `j`'s noise stream at index `j - 1`.
    pub party_seeds: Vec<u64>,
}

impl DgmRelease {
    pub fn n(&self) -> usize {
        self.public_matrix.nrows()
    }

    pub fn d(&self) -> usize {
        self.public_matrix.ncols() - 1
    }

    pub fn features(&self) -> DMatrix<f64> {
        self.public_matrix.columns(0, self.d()).into_owned()
    }

    pub fn labels(&self) -> DVector<f64> {
        self.public_matrix.column(self.d()).into_owned()
    }
}

/// Noise seed of party `j` (1-based) for a release keyed by `root_seed`.
pub fn party_seed(root_seed: u64, j: usize) -> u64 {
    rng::derive(root_seed, 0, j as u64, Purpose::DgmNoise)
}

/// Party `j`'s local step: its block plus its own Gaussian noise.
pub fn release_party_block(block: &DMatrix<f64>, j: usize, noise_std: f64, root_seed: u64) -> DMatrix<f64> {
    let mut s = rng::stream(party_seed(root_seed, j));
    let noise = gaussian_noise(block.nrows(), block.ncols(), noise_std, &mut s);
    block + noise.entries
}

pub fn dgm_release(
    data: &DataMatrix,
    partition: &PartyPartition,
    privacy: &PrivacyParams,
    root_seed: u64,
) -> Result<DgmRelease> {
    partition.check_covers(data)?;
    validate_bounds(data)?;
    let noise_std = privacy.noise_std(partition.d_max());
    let mut public_matrix = data.values().clone();
    let mut party_seeds = Vec::with_capacity(partition.m());
    for (idx, block) in partition.blocks().iter().enumerate() {
        let j = idx + 1;
        let own = data.values().columns(block.start, block.len()).into_owned();
        public_matrix
            .columns_mut(block.start, block.len())
            .copy_from(&release_party_block(&own, j, noise_std, root_seed));
        party_seeds.push(party_seed(root_seed, j));
    }
    Ok(DgmRelease {
        public_matrix,
        noise_std,
        partition: partition.clone(),
        party_seeds,
    })
}

/// The Hessian estimate after removing the noise bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasedHessian {
    /// `(1/n) XᵀX - 4 d_max σ² I`, before regularization.
    pub matrix: DMatrix<f64>,
    pub bias_removed: f64,
    /// Minimum absolute eigenvalue of `matrix + λ I`.
    pub min_abs_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgmFit {
    pub weights: DVector<f64>,
    pub hessian: DebiasedHessian,
}

/// `(1/n) XᵀX - 4 d_max σ² I` for a release.
pub fn debiased_hessian(release: &DgmRelease, privacy: &PrivacyParams) -> (DMatrix<f64>, f64) {
    let x = release.features();
    let n = release.n() as f64;
    let bias = privacy.noise_variance(release.partition.d_max());
    let mut h = x.tr_mul(&x) / n;
    for i in 0..h.nrows() {
        h[(i, i)] -= bias;
    }
    (h, bias)
}

/// Solve `(Ĥ + λ I) w = (1/n) Xᵀ Y`.
///
/// Fails with [`crate::Error::Singular`] when `Ĥ + λ I` is numerically
/// singular; the error carries the offending minimum eigenvalue.
pub fn dgm_train(release: &DgmRelease, privacy: &PrivacyParams, lambda: f64) -> Result<DgmFit> {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let (h, bias) = debiased_hessian(release, privacy);
    let x = release.features();
    let rhs = x.tr_mul(&release.labels()) / release.n() as f64;
    let mut system = h.clone();
    for i in 0..system.nrows() {
        system[(i, i)] += lambda;
    }
    let SymmetricSolution {
        solution,
        min_abs_eigenvalue,
        ..
    } = linalg::solve_symmetric(&system, &rhs)?;
    Ok(DgmFit {
        weights: solution,
        hessian: DebiasedHessian {
            matrix: h,
            bias_removed: bias,
            min_abs_eigenvalue,
        },
    })
}
