//! Differentially private multi-party data release for linear regression.
//!
//! Several parties hold disjoint column blocks of the same `n` subjects. Each
//! party publishes a noisy version of its block once; anyone can then fit a
//! least-squares model on the concatenated release. Two mechanisms are
//! provided:
//!
//! - [`dgm`]: add Gaussian noise to the raw block, then remove the known noise
//!   bias from the Gram matrix at training time.
//! - [`rmgm`]: mix the rows with a shared `k × n` Rademacher matrix before
//!   adding noise, so plain least squares on the `k`-row release converges.
//!
//! [`baselines`] holds non-private OLS and the un-corrected Gaussian release,
//! [`synthetic`] and [`experiment`] reproduce the convergence and real-data
//! protocols, and [`evaluation`] computes the metrics.
//!
//! ```
//! use dpmix::{calibrate, dgm, partition_evenly, rmgm, rng, synthetic};
//!
//! let truth = synthetic::gen_ground_truth(4, &mut rng::stream(1));
//! let data = synthetic::gen_dataset(20_000, &truth, &mut rng::stream(2));
//! let parties = partition_evenly(5, 2)?;
//! let privacy = calibrate(1.0, 1e-5)?;
//!
//! let release = rmgm::rmgm_release(&data, &parties, &privacy, 29, 7)?;
//! assert_eq!(release.public_matrix.nrows(), 29);
//! let fit = rmgm::rmgm_train(&release, 1e-5)?;
//! assert_eq!(fit.weights.len(), 4);
//!
//! let noisy = dgm::dgm_release(&data, &parties, &privacy, 7)?;
//! assert_eq!(noisy.public_matrix.nrows(), 20_000);
//! # Ok::<(), dpmix::Error>(())
//! ```

pub mod baselines;
pub mod data;
pub mod dgm;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod privacy;
pub mod rmgm;
pub mod rng;
pub mod synthetic;

pub use data::{partition_evenly, DataMatrix, PartyPartition};
pub use error::{Error, Result};
pub use evaluation::Method;
pub use privacy::{calibrate, PrivacyParams};
