//! Brute-force reference evaluations of the closed forms, written with plain
//! loops over `Vec<Vec<f64>>` and Gaussian elimination. Nothing here calls the
//! crate's linear algebra; the crate is only used to reproduce the random
//! draws from their recorded seeds.
#![allow(dead_code, clippy::needless_range_loop)]

use dpmix::data::{DataMatrix, PartyPartition};
use dpmix::privacy::{bernoulli_mixing, gaussian_noise};
use dpmix::rng;

pub type Mat = Vec<Vec<f64>>;

pub fn to_rows(m: &nalgebra::DMatrix<f64>) -> Mat {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

/// `(AᵀA, Aᵀb)` over the first `d` columns with the last column as `b`.
pub fn normal_equations(rows: &Mat, d: usize) -> (Mat, Vec<f64>) {
    let mut g = vec![vec![0.0; d]; d];
    let mut h = vec![0.0; d];
    for row in rows {
        for i in 0..d {
            for j in 0..d {
                g[i][j] += row[i] * row[j];
            }
            h[i] += row[i] * row[d];
        }
    }
    (g, h)
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Mat, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x
}

fn scale(m: &mut Mat, f: f64) {
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v *= f;
        }
    }
}

fn add_diag(m: &mut Mat, v: f64) {
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += v;
    }
}

/// Plain OLS: `((1/n) XᵀX + λI) w = (1/n) XᵀY`.
pub fn ols(rows: &Mat, d: usize, lambda: f64) -> Vec<f64> {
    let n = rows.len() as f64;
    let (mut g, mut h) = normal_equations(rows, d);
    scale(&mut g, 1.0 / n);
    h.iter_mut().for_each(|v| *v /= n);
    add_diag(&mut g, lambda);
    solve(g, h)
}

/// De-biased OLS: `((1/n) XᵀX - bias I + λI) w = (1/n) XᵀY`.
pub fn debiased(rows: &Mat, d: usize, bias: f64, lambda: f64) -> Vec<f64> {
    let n = rows.len() as f64;
    let (mut g, mut h) = normal_equations(rows, d);
    scale(&mut g, 1.0 / n);
    h.iter_mut().for_each(|v| *v /= n);
    add_diag(&mut g, lambda - bias);
    solve(g, h)
}

/// Unnormalized OLS: `(XᵀX + λI) w = XᵀY`.
pub fn gram_ols(rows: &Mat, d: usize, lambda: f64) -> Vec<f64> {
    let (mut g, h) = normal_equations(rows, d);
    add_diag(&mut g, lambda);
    solve(g, h)
}

/// Rebuild the Gaussian release `D + R` from the recorded party seeds.
pub fn rebuild_dgm(data: &DataMatrix, partition: &PartyPartition, seeds: &[u64], std: f64) -> Mat {
    let mut rows = to_rows(data.values());
    for (block, &seed) in partition.blocks().iter().zip(seeds) {
        let noise = gaussian_noise(data.n(), block.len(), std, &mut rng::stream(seed)).entries;
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, col) in block.clone().enumerate() {
                row[col] += noise[(r, c)];
            }
        }
    }
    rows
}

/// Rebuild the mixing release `B D / sqrt(k) + R` with naive loops over the
/// dense sign matrix.
pub fn rebuild_rmgm(
    data: &DataMatrix,
    partition: &PartyPartition,
    k: usize,
    mixing_seed: u64,
    seeds: &[u64],
    std: f64,
) -> Mat {
    let b = bernoulli_mixing(k, data.n(), mixing_seed);
    let d1 = data.d() + 1;
    let v = data.values();
    let root_k = (k as f64).sqrt();
    let mut rows = vec![vec![0.0; d1]; k];
    for (r, row) in rows.iter_mut().enumerate() {
        for (c, out) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for i in 0..data.n() {
                s += f64::from(b.entry(r, i)) * v[(i, c)];
            }
            *out = s / root_k;
        }
    }
    for (block, &seed) in partition.blocks().iter().zip(seeds) {
        let noise = gaussian_noise(k, block.len(), std, &mut rng::stream(seed)).entries;
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, col) in block.clone().enumerate() {
                row[col] += noise[(r, c)];
            }
        }
    }
    rows
}

/// `‖a - b‖ / ‖b‖` in the Euclidean norm.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

/// One randomly drawn small instance and the worst relative disagreement
/// between the crate and the brute-force reference over all four trainers.
#[derive(Debug)]
pub struct OracleCase {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub epsilon: f64,
    pub max_rel: f64,
}

pub fn oracle_case(seed: u64, n: usize, d: usize, m: usize, k: usize, epsilon: f64) -> OracleCase {
    use dpmix::{baselines, dgm, partition_evenly, rmgm, synthetic};

    let lambda = 1e-5;
    let truth = synthetic::gen_ground_truth(d, &mut rng::stream(seed));
    let data = synthetic::gen_dataset(n, &truth, &mut rng::stream(seed ^ 0xA5A5));
    let part = partition_evenly(d + 1, m).unwrap();
    let privacy = dpmix::calibrate(epsilon, 1e-5).unwrap();
    let rows = to_rows(data.values());
    let mut worst = 0.0f64;

    let fit = baselines::ols_train(&data.features(), &data.labels(), lambda).unwrap();
    worst = worst.max(max_rel_diff(fit.weights.as_slice(), &ols(&rows, d, lambda)));

    let rel = dgm::dgm_release(&data, &part, &privacy, seed).unwrap();
    let std = privacy.noise_std(part.d_max());
    let noisy = rebuild_dgm(&data, &part, &rel.party_seeds, std);
    assert_eq!(to_rows(&rel.public_matrix), noisy, "DGM release differs from D + R");
    let bias = 4.0 * part.d_max() as f64 * privacy.sigma() * privacy.sigma();
    let fit = dgm::dgm_train(&rel, &privacy, lambda).unwrap();
    worst = worst.max(max_rel_diff(fit.weights.as_slice(), &debiased(&noisy, d, bias, lambda)));
    let fit = baselines::bgm_train(&rel, lambda).unwrap();
    worst = worst.max(max_rel_diff(fit.weights.as_slice(), &ols(&noisy, d, lambda)));

    let rel = rmgm::rmgm_release(&data, &part, &privacy, k, seed).unwrap();
    let mixed = rebuild_rmgm(&data, &part, k, rel.mixing_seed, &rel.party_seeds, std);
    worst = worst.max(max_rel_diff(
        to_rows(&rel.public_matrix).concat().as_slice(),
        &mixed.concat(),
    ));
    let fit = rmgm::rmgm_train(&rel, lambda).unwrap();
    worst = worst.max(max_rel_diff(fit.weights.as_slice(), &gram_ols(&mixed, d, lambda)));

    OracleCase { n, d, m, k, epsilon, max_rel: worst }
}

/// Twenty seeded instances with n ≤ 200 and d ≤ 5.
pub fn oracle_suite() -> Vec<OracleCase> {
    use rand::Rng;
    let mut r = rng::stream(0x0AC1E);
    (0..20u64)
        .map(|i| {
            let n = r.random_range(20..=200);
            let d = r.random_range(1..=5);
            let m = r.random_range(2..=(d + 1).min(4));
            let k = r.random_range(d.max(2)..=60);
            let epsilon = r.random_range(0.1..=1.0);
            oracle_case(1000 + i, n, d, m, k, epsilon)
        })
        .collect()
}
