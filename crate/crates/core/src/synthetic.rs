//! Synthetic regression data: features uniform on `[-1, 1]`, weights uniform
//! on `[-1/d, 1/d]`, noiseless labels `y = wᵀx`. Every entry, label included,
//! is bounded by 1.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::DataMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub w_star: DVector<f64>,
}

pub fn gen_ground_truth<R: Rng + ?Sized>(d: usize, rng: &mut R) -> GroundTruth {
    assert!(d >= 1, "d must be at least 1");
    let bound = 1.0 / d as f64;
    GroundTruth {
        w_star: DVector::from_fn(d, |_, _| rng.random_range(-bound..=bound)),
    }
}

/// `n` rows of `[x, wᵀx]`. Features are drawn row by row, so a longer dataset
/// from the same stream extends a shorter one.
pub fn gen_dataset<R: Rng + ?Sized>(n: usize, truth: &GroundTruth, rng: &mut R) -> DataMatrix {
    assert!(n >= 1, "n must be at least 1");
    let d = truth.w_star.len();
    let mut values = DMatrix::zeros(n, d + 1);
    for r in 0..n {
        let mut y = 0.0;
        for c in 0..d {
            let x: f64 = rng.random_range(-1.0..=1.0);
            values[(r, c)] = x;
            y += truth.w_star[c] * x;
        }
        values[(r, d)] = y;
    }
    DataMatrix::with_default_names(values).expect("generated data is finite")
}

/// Add `N(0, std²)` noise to the label column and clip it back into
/// `[-1, 1]`. Off by default in every experiment; the reference protocol uses
/// noiseless labels.
pub fn add_label_noise<R: Rng + ?Sized>(data: &DataMatrix, std: f64, rng: &mut R) -> DataMatrix {
    let mut values = data.values().clone();
    let d = data.d();
    for y in values.column_mut(d).iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *y = (*y + std * z).clamp(-1.0, 1.0);
    }
    DataMatrix::new(values, data.column_names().to_vec()).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::ols_train;
    use crate::data::validate_bounds;
    use crate::linalg::min_abs_eigenvalue;
    use crate::rng;

    #[test]
    fn weights_respect_support() {
        let w = gen_ground_truth(10, &mut rng::stream(1));
        assert!(w.w_star.iter().all(|x| x.abs() <= 0.1));
        let w1 = gen_ground_truth(1, &mut rng::stream(2));
        assert!(w1.w_star[0].abs() <= 1.0);
        assert_eq!(gen_ground_truth(10, &mut rng::stream(1)), w);
    }

    #[test]
    fn data_is_bounded_and_realizable() {
        let w = gen_ground_truth(10, &mut rng::stream(3));
        let data = gen_dataset(500, &w, &mut rng::stream(4));
        assert!(validate_bounds(&data).is_ok());
        let fit = ols_train(&data.features(), &data.labels(), 0.0).unwrap();
        assert!((fit.weights - &w.w_star).amax() < 1e-8);
    }

    #[test]
    fn zero_weights_give_zero_labels() {
        let w = GroundTruth {
            w_star: DVector::zeros(3),
        };
        let data = gen_dataset(20, &w, &mut rng::stream(5));
        assert!(data.labels().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn prefix_property() {
        let w = gen_ground_truth(3, &mut rng::stream(6));
        let short = gen_dataset(10, &w, &mut rng::stream(7));
        let long = gen_dataset(25, &w, &mut rng::stream(7));
        assert_eq!(short.values(), &long.values().rows(0, 10).into_owned());
    }

    #[test]
    fn second_moment_and_conditioning() {
        let w = gen_ground_truth(10, &mut rng::stream(8));
        let data = gen_dataset(1_000_000, &w, &mut rng::stream(9));
        let x = data.features();
        let m2 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((m2 - 1.0 / 3.0).abs() <= 0.01 / 3.0, "second moment {m2}");

        let small = gen_dataset(100_000, &w, &mut rng::stream(10)).features();
        let gram = small.tr_mul(&small) / 1e5;
        assert!(min_abs_eigenvalue(&gram) > 0.25);
    }

    #[test]
    fn label_noise_stays_bounded() {
        let w = gen_ground_truth(4, &mut rng::stream(11));
        let data = gen_dataset(200, &w, &mut rng::stream(12));
        let noisy = add_label_noise(&data, 0.5, &mut rng::stream(13));
        assert!(validate_bounds(&noisy).is_ok());
        assert_eq!(noisy.features(), data.features());
        assert_ne!(noisy.labels(), data.labels());
    }
}
