//! Random mixing prior to the Gaussian mechanism.
//!
//! All parties share one `k × n` Rademacher matrix `B`. Party `j` releases
//! `B Dʲ / sqrt(k) + Rʲ` with `Rʲ` drawn i.i.d. from `N(0, 4 d_max σ²)`. The
//! projection preserves the Gram matrix of the data while the added noise has
//! only `k` rows, so plain least squares on the release converges without any
//! bias correction when `k = o(n)`.

use nalgebra::{DMatrix, DVector};

use crate::data::{validate_bounds, DataMatrix, PartyPartition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::privacy::{gaussian_noise, mix_project_streamed, PrivacyParams};
use crate::rng::{self, Purpose};

/// Candidate projection sizes swept on real datasets.
pub const DEFAULT_K_GRID: [usize; 5] = [100, 300, 1000, 3000, 10000];

/// How the projection size `k` is picked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KMode {
    /// `k = round(sqrt(n) / σ)`.
    Synthetic,
    /// `k = round(sqrt(n d / d_max) / σ)`, the rate-optimal order.
    Theorem,
    /// Sweep a candidate list; the harness keeps the best by test MSE.
    Grid(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KChoice {
    Fixed(usize),
    Sweep(Vec<usize>),
}

impl KChoice {
    pub fn candidates(&self) -> Vec<usize> {
        match self {
            KChoice::Fixed(k) => vec![*k],
            KChoice::Sweep(ks) => ks.clone(),
        }
    }
}

pub fn choose_k(n: usize, sigma: f64, d: usize, d_max: usize, mode: &KMode) -> Result<KChoice> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let scaled = |factor: f64| -> Result<KChoice> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("k selection needs sigma > 0, got {sigma}")));
        }
        let k = ((n as f64 * factor).sqrt() / sigma).round();
        Ok(KChoice::Fixed((k as usize).max(1)))
    };
    match mode {
        KMode::Synthetic => scaled(1.0),
        KMode::Theorem => {
            if d_max == 0 {
                return Err(Error::Domain("d_max must be positive".into()));
            }
            scaled(d as f64 / d_max as f64)
        }
        KMode::Grid(grid) => {
            if grid.is_empty() || grid.contains(&0) {
                return Err(Error::Domain("k grid must be nonempty and positive".into()));
            }
            Ok(KChoice::Sweep(grid.clone()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmgmRelease {
    /// `k × (d + 1)` released matrix.
    pub public_matrix: DMatrix<f64>,
    pub k: usize,
    /// The single seed every party used to build `B`.
    pub mixing_seed: u64,
    pub noise_std: f64,
    pub partition: PartyPartition,
    pub party_seeds: Vec<u64>,
}

impl RmgmRelease {
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

pub fn mixing_seed(root_seed: u64) -> u64 {
    rng::derive(root_seed, 0, 0, Purpose::Mixing)
}

pub fn party_seed(root_seed: u64, j: usize) -> u64 {
    rng::derive(root_seed, 0, j as u64, Purpose::RmgmNoise)
}

/// Party `j`'s local step: `B · block / sqrt(k) + Rʲ`, with `B` regenerated
/// from the shared mixing seed.
pub fn release_party_block(block: &DMatrix<f64>, j: usize, k: usize, noise_std: f64, root_seed: u64) -> DMatrix<f64> {
    let projected = mix_project_streamed(k, mixing_seed(root_seed), block);
    add_party_noise(projected, j, noise_std, root_seed)
}

fn add_party_noise(projected: DMatrix<f64>, j: usize, noise_std: f64, root_seed: u64) -> DMatrix<f64> {
    let mut s = rng::stream(party_seed(root_seed, j));
    let noise = gaussian_noise(projected.nrows(), projected.ncols(), noise_std, &mut s);
    projected + noise.entries
}

pub fn rmgm_release(
    data: &DataMatrix,
    partition: &PartyPartition,
    privacy: &PrivacyParams,
    k: usize,
    root_seed: u64,
) -> Result<RmgmRelease> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    partition.check_covers(data)?;
    validate_bounds(data)?;
    // The kernel treats columns independently, so projecting all blocks in
    // one pass is bitwise identical to each party projecting its own block.
    let projected = mix_project_streamed(k, mixing_seed(root_seed), data.values());
    Ok(assemble(projected, partition, privacy, k, mixing_seed(root_seed), root_seed))
}

fn assemble(
    projected: DMatrix<f64>,
    partition: &PartyPartition,
    privacy: &PrivacyParams,
    k: usize,
    mixing_seed: u64,
    root_seed: u64,
) -> RmgmRelease {
    let noise_std = privacy.noise_std(partition.d_max());
    let mut public_matrix = projected;
    let mut party_seeds = Vec::with_capacity(partition.m());
    for (idx, block) in partition.blocks().iter().enumerate() {
        let j = idx + 1;
        let own = public_matrix.columns(block.start, block.len()).into_owned();
        public_matrix
            .columns_mut(block.start, block.len())
            .copy_from(&add_party_noise(own, j, noise_std, root_seed));
        party_seeds.push(party_seed(root_seed, j));
    }
    RmgmRelease {
        public_matrix,
        k,
        mixing_seed,
        noise_std,
        partition: partition.clone(),
        party_seeds,
    }
}

/// Release with an explicitly supplied mixing matrix.
#[cfg(test)]
pub(crate) fn rmgm_release_with_mixing(
    data: &DataMatrix,
    partition: &PartyPartition,
    privacy: &PrivacyParams,
    mixing: &crate::privacy::MixingMatrix,
    root_seed: u64,
) -> Result<RmgmRelease> {
    validate_bounds(data)?;
    let projected = mixing.apply_scaled(data.values());
    Ok(assemble(projected, partition, privacy, mixing.k(), mixing.seed(), root_seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmgmFit {
    pub weights: DVector<f64>,
    /// Minimum absolute eigenvalue of `XᵀX + λ I` on the release.
    pub min_abs_eigenvalue: f64,
}

/// Ordinary least squares on the release: `(XᵀX + λ I) w = XᵀY`.
pub fn rmgm_train(release: &RmgmRelease, lambda: f64) -> Result<RmgmFit> {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    let d = release.d();
    if lambda == 0.0 && release.k < d {
        return Err(Error::Singular {
            reason: format!("k = {} rows cannot determine d = {d} weights", release.k),
            min_abs_eigenvalue: 0.0,
            condition: f64::INFINITY,
        });
    }
    let x = release.features();
    let mut gram = x.tr_mul(&x);
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let rhs = x.tr_mul(&release.labels());
    let sol = linalg::solve_symmetric(&gram, &rhs)?;
    Ok(RmgmFit {
        weights: sol.solution,
        min_abs_eigenvalue: sol.min_abs_eigenvalue,
    })
}
