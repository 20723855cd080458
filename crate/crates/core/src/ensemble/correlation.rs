//! Empirical check of the increment correlation
//! `E[⟨u_j, ΔB v_k⟩⟨ũ_i, ΔB̃ ṽ_l⟩] = ⟨ũ_i, u_j⟩⟨ṽ_l, v_k⟩ dt`,
//! where `ΔB̃` is the top-left block of the increment `ΔB`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{sample_with_rng, MatrixSpec};
use super::svd::{svd_full, svd_truncated};
use super::Dims;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    /// Max over the index grid of `|cov/dt − ⟨ũ_i, u_j⟩⟨ṽ_l, v_k⟩|`.
    pub max_deviation: f64,
    /// The same restricted to matching grid positions of `(i, l)` and `(j, k)`.
    pub max_diagonal_deviation: f64,
    pub samples: usize,
}

fn spaced(len: usize, count: usize) -> Vec<usize> {
    if count <= 1 || len == 1 {
        return vec![0];
    }
    (0..count).map(|k| ((k * (len - 1)) as f64 / (count - 1) as f64).round() as usize).collect()
}

/// Freezes one sample `(X_t, X̃_t)` with `A ≡ 0` and compares the sample
/// covariance of projected Gaussian increments against the overlap products
/// on a `grid⁴` index grid (indices evenly spaced in each range).
pub fn correlation_identity_test(
    dims: &Dims,
    t: f64,
    dt: f64,
    samples: usize,
    grid: usize,
    seed: u64,
) -> Result<CorrelationReport> {
    if !(dt > 0.0) || samples < 2 || grid == 0 {
        return Err(invalid("need dt > 0, at least 2 samples and a non-empty grid"));
    }
    let Dims { rows: big_m, cols: big_n, sub_rows: m, sub_cols: n } = *dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = MatrixSpec::zero(*dims);
    let (full, trunc) = loop {
        let (x, xt) = sample_with_rng(&spec, t, &mut rng)?;
        match svd_truncated(&xt, dims) {
            Ok(tr) => break (svd_full(&x)?, tr),
            Err(Error::DegenerateSample(_)) => continue,
            Err(e) => return Err(e),
        }
    };
    // i over truncated left (< m), l over truncated right (< n),
    // j over full left (< M), k over full right (< N)
    let is = spaced(m, grid);
    let ls = spaced(n, grid);
    let js = spaced(big_m, grid);
    let ks = spaced(big_n, grid);
    let (gi, gl, gj, gk) = (is.len(), ls.len(), js.len(), ks.len());

    let mut sum_a = vec![0.0; gj * gk];
    let mut sum_b = vec![0.0; gi * gl];
    let mut sum_ab = vec![0.0; gi * gl * gj * gk];
    let sd = dt.sqrt();
    let mut db = vec![0.0; big_m * big_n];
    let mut bv = vec![0.0; big_m];
    let mut a = vec![0.0; gj * gk];
    let mut b = vec![0.0; gi * gl];
    for _ in 0..samples {
        for x in db.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *x = sd * z;
        }
        for (ck, &k) in ks.iter().enumerate() {
            for (r, out) in bv.iter_mut().enumerate() {
                *out = (0..big_n).map(|c| db[r * big_n + c] * full.right[(c, k)]).sum();
            }
            for (cj, &j) in js.iter().enumerate() {
                a[cj * gk + ck] = (0..big_m).map(|r| full.left[(r, j)] * bv[r]).sum();
            }
        }
        for (cl, &l) in ls.iter().enumerate() {
            for (r, out) in bv.iter_mut().take(m).enumerate() {
                *out = (0..n).map(|c| db[r * big_n + c] * trunc.right[(c, l)]).sum();
            }
            for (ci, &i) in is.iter().enumerate() {
                b[ci * gl + cl] = (0..m).map(|r| trunc.left[(r, i)] * bv[r]).sum();
            }
        }
        for (s, x) in sum_a.iter_mut().zip(&a) {
            *s += x;
        }
        for (s, x) in sum_b.iter_mut().zip(&b) {
            *s += x;
        }
        for (ib, &xb) in b.iter().enumerate() {
            let row = &mut sum_ab[ib * gj * gk..(ib + 1) * gj * gk];
            for (s, &xa) in row.iter_mut().zip(&a) {
                *s += xa * xb;
            }
        }
    }

    let ns = samples as f64;
    let mut max_dev: f64 = 0.0;
    let mut max_diag: f64 = 0.0;
    for (ci, &i) in is.iter().enumerate() {
        for (cl, &l) in ls.iter().enumerate() {
            let ib = ci * gl + cl;
            for (cj, &j) in js.iter().enumerate() {
                let uu: f64 = (0..m).map(|r| trunc.left[(r, i)] * full.left[(r, j)]).sum();
                for (ck, &k) in ks.iter().enumerate() {
                    let ia = cj * gk + ck;
                    let vv: f64 = (0..n).map(|r| trunc.right[(r, l)] * full.right[(r, k)]).sum();
                    let cov = (sum_ab[ib * gj * gk + ia] - sum_a[ia] * sum_b[ib] / ns) / (ns - 1.0);
                    let dev = (cov / dt - uu * vv).abs();
                    max_dev = max_dev.max(dev);
                    if ci == cl && cj == ck {
                        max_diag = max_diag.max(dev);
                    }
                }
            }
        }
    }
    Ok(CorrelationReport { max_deviation: max_dev, max_diagonal_deviation: max_diag, samples })
}
