//! Privacy primitives shared by both release mechanisms: noise calibration,
//! the per-row sensitivity bound, Gaussian noise matrices and the shared
//! Rademacher mixing matrix.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

/// An `(ε, δ)` budget together with the Gaussian-mechanism scale it implies.
///
/// `sigma = sqrt(2 ln(1.25 / δ)) / ε`, which gives `(ε, δ)`-DP for a query of
/// unit L2 sensitivity when `0 < ε ≤ 1`. The mechanisms multiply it by the
/// per-row sensitivity `2 sqrt(d_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    budget: Option<(f64, f64)>,
    sigma: f64,
}

/// Calibrate the Gaussian mechanism for `(epsilon, delta)`.
pub fn calibrate(epsilon: f64, delta: f64) -> Result<PrivacyParams> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(PrivacyParams {
        budget: Some((epsilon, delta)),
        sigma: (2.0 * (1.25 / delta).ln()).sqrt() / epsilon,
    })
}

impl PrivacyParams {
    /// Zero-noise parameters. Releases made with these are not private; they
    /// exist for degenerate-case checks and non-private reference runs.
    pub fn noiseless() -> Self {
        PrivacyParams {
            budget: None,
            sigma: 0.0,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.budget.map(|(e, _)| e)
    }

    pub fn delta(&self) -> Option<f64> {
        self.budget.map(|(_, d)| d)
    }

    /// σ_{ε,δ}; zero for [`PrivacyParams::noiseless`].
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Per-entry noise standard deviation `2 sqrt(d_max) σ` for a partition
    /// whose widest party holds `d_max` columns.
    pub fn noise_std(&self, d_max: usize) -> f64 {
        sensitivity_bound(d_max) * self.sigma
    }

    /// `4 d_max σ²`, the variance of every released noise entry and the bias
    /// the plain Gaussian release adds to the normalized Gram matrix.
    pub fn noise_variance(&self, d_max: usize) -> f64 {
        4.0 * d_max as f64 * self.sigma * self.sigma
    }
}

/// Per-row L2 sensitivity `2 sqrt(d_max)` of a party block whose entries are
/// bounded by 1 in absolute value.
pub fn sensitivity_bound(d_max: usize) -> f64 {
    assert!(d_max >= 1, "d_max must be at least 1");
    2.0 * (d_max as f64).sqrt()
}

/// A matrix of i.i.d. `N(0, std²)` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    pub entries: DMatrix<f64>,
    pub std: f64,
}

impl NoiseMatrix {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }
}

/// Draw a `rows × cols` Gaussian noise matrix, filled in column-major order.
pub fn gaussian_noise<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> NoiseMatrix {
    assert!(std >= 0.0 && std.is_finite(), "noise std must be finite and nonnegative");
    let entries = if std == 0.0 {
        DMatrix::zeros(rows, cols)
    } else {
        DMatrix::from_fn(rows, cols, |_, _| {
            let z: f64 = rng.sample(StandardNormal);
            std * z
        })
    };
    NoiseMatrix { entries, std }
}

/// A `k × n` matrix of i.i.d. Rademacher (±1) entries, stored as packed bits
/// (set bit = +1). Row `r` is the bit stream of sub-stream `r` of the
/// generator keyed by `seed`, least-significant bit first, so any row can be
/// regenerated on its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixingMatrix {
    k: usize,
    n: usize,
    seed: u64,
    words_per_row: usize,
    bits: Vec<u64>,
}

pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// Generate the shared mixing matrix for `seed`.
pub fn bernoulli_mixing(k: usize, n: usize, seed: u64) -> MixingMatrix {
    assert!(k >= 1 && n >= 1, "mixing matrix needs k >= 1 and n >= 1");
    let words_per_row = words_for(n);
    let mut bits = vec![0u64; k * words_per_row];
    for (r, row) in bits.chunks_exact_mut(words_per_row).enumerate() {
        let mut s = rng::substream(seed, r as u64);
        for w in row.iter_mut() {
            *w = s.next_u64();
        }
    }
    MixingMatrix {
        k,
        n,
        seed,
        words_per_row,
        bits,
    }
}

impl MixingMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Entry `(row, col)`, either -1 or +1.
    pub fn entry(&self, row: usize, col: usize) -> i8 {
        assert!(row < self.k && col < self.n);
        let w = self.bits[row * self.words_per_row + col / 64];
        if (w >> (col % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.n, |r, c| f64::from(self.entry(r, c)))
    }

    /// Build a matrix from explicit signs (row-major, `k * n` entries of ±1).
    #[cfg(test)]
    pub(crate) fn from_signs(k: usize, n: usize, signs: &[i8]) -> Self {
        assert_eq!(signs.len(), k * n);
        let words_per_row = words_for(n);
        let mut bits = vec![0u64; k * words_per_row];
        for r in 0..k {
            for c in 0..n {
                match signs[r * n + c] {
                    1 => bits[r * words_per_row + c / 64] |= 1 << (c % 64),
                    -1 => {}
                    other => panic!("mixing entries must be ±1, got {other}"),
                }
            }
        }
        MixingMatrix {
            k,
            n,
            seed: 0,
            words_per_row,
            bits,
        }
    }

    /// `self · data / sqrt(k)`.
    pub fn apply_scaled(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(data.nrows(), self.n, "mixing matrix width must equal data rows");
        let wpr = self.words_per_row;
        mix_project(self.k, data, |row, word, out| {
            let start = row * wpr + word;
            out.copy_from_slice(&self.bits[start..start + out.len()]);
        })
    }
}

/// `B · data / sqrt(k)` with the rows of `B` generated on the fly from
/// `seed`, never materializing the `k × n` matrix. Bitwise identical to
/// `bernoulli_mixing(k, n, seed).apply_scaled(data)`.
pub fn mix_project_streamed(k: usize, seed: u64, data: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(k >= 1);
    let mut streams: Vec<rng::Stream> = (0..k as u64).map(|r| rng::substream(seed, r)).collect();
    mix_project(k, data, |row, _word, out| {
        for w in out.iter_mut() {
            *w = streams[row].next_u64();
        }
    })
}

/// Rows of `data` handled per block; a multiple of 64 so blocks align with
/// packed sign words. The accumulation order depends only on this constant.
const BLOCK_ROWS: usize = 2048;

/// Shared kernel for the mixing product. `fill(row, word_offset, out)` must
/// write the sign words `word_offset..word_offset + out.len()` of mixing row
/// `row`; calls for a given row arrive in increasing `word_offset` order.
fn mix_project<F>(k: usize, data: &DMatrix<f64>, mut fill: F) -> DMatrix<f64>
where
    F: FnMut(usize, usize, &mut [u64]),
{
    let n = data.nrows();
    let cols = data.ncols();
    let mut acc = DMatrix::<f64>::zeros(k, cols);
    let mut words = vec![0u64; BLOCK_ROWS / 64];
    let mut signs = vec![0f64; BLOCK_ROWS];

    let flat = data.as_slice();
    let mut start = 0;
    while start < n {
        let len = BLOCK_ROWS.min(n - start);
        let nwords = words_for(len);
        for r in 0..k {
            fill(r, start / 64, &mut words[..nwords]);
            expand_signs(&words[..nwords], &mut signs[..len]);
            for c in 0..cols {
                let col = &flat[c * n + start..c * n + start + len];
                acc[(r, c)] += dot(&signs[..len], col);
            }
        }
        start += len;
    }
    acc / (k as f64).sqrt()
}

fn expand_signs(words: &[u64], out: &mut [f64]) {
    const ONE: u64 = 0x3FF0_0000_0000_0000;
    for (i, s) in out.iter_mut().enumerate() {
        let bit = (words[i / 64] >> (i % 64)) & 1;
        // bit 1 -> +1.0, bit 0 -> -1.0 via the sign bit
        *s = f64::from_bits(ONE | ((bit ^ 1) << 63));
    }
}

/// Dot product with a fixed four-lane summation order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            lanes[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}
