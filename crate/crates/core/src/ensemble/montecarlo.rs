//! Monte Carlo estimators of the rescaled overlaps `N·E[⟨ṽ_i, v_j⟩²]`,
//! `N·E[⟨ũ_i, u_j⟩²]` and `N·E[⟨ṽ_i, v_j⟩⟨ũ_i, u_j⟩]`.
//!
//! Trial `k` draws its matrix from a ChaCha8 stream seeded with `seed ^ k`,
//! so results do not depend on how trials are scheduled across threads.
//! Per-trial values are collected in trial order and reduced by pairwise
//! summation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::matrix::{sample_with_rng, MatrixSpec};
use super::svd::{svd_full, svd_truncated, SvdTriplet};
use super::Dims;
use crate::error::{invalid, Error, Result};
use crate::numerics::mean_and_stderr;

pub const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapEstimate {
    pub value: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl OverlapEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (value, stderr) = mean_and_stderr(xs);
        Self { value, stderr, trials: xs.len() }
    }
}

/// Quantile fractions `(x, y)` selecting truncated index `i ≈ x·n` and full
/// index `j ≈ y·N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub x: f64,
    pub y: f64,
}

impl Target {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return Err(invalid(format!("target ({x}, {y}) must lie in (0, 1)²")));
        }
        Ok(Self { x, y })
    }
}

/// How the sampled indices are chosen for each target.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// `i = clamp(round(x·n), 1, n)`, `j = clamp(round(y·N), 1, N)`.
    FixedIndex,
    /// Per trial, the indices whose eigenvalues are closest to the given
    /// `(μ, λ)` references, one pair per target.
    EigenvalueMatched(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    /// Half-width of the index window averaged around each target within a
    /// trial; `0` uses the single entry.
    pub window: usize,
    pub selection: Selection,
}

impl McConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, window: 0, selection: Selection::FixedIndex }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEstimate {
    pub target: Target,
    /// 1-based fixed indices `(i, j)` for the target.
    pub row: usize,
    pub col: usize,
    pub v: OverlapEstimate,
    pub u: OverlapEstimate,
    pub w: OverlapEstimate,
}

/// `clamp(round(x·len), 1, len)`.
pub fn quantile_index(x: f64, len: usize) -> usize {
    ((x * len as f64).round() as usize).clamp(1, len)
}

fn sample_trial(spec: &MatrixSpec, t: f64, seed: u64, trial: u64) -> Result<(SvdTriplet, SvdTriplet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial);
    for _ in 0..MAX_RESAMPLES {
        let (x, xt) = sample_with_rng(spec, t, &mut rng)?;
        match svd_truncated(&xt, &spec.dims) {
            Ok(tr) => return Ok((svd_full(&x)?, tr)),
            Err(Error::DegenerateSample(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleLimit { trial, limit: MAX_RESAMPLES })
}

/// Runs `per_trial` on the SVD pair of every trial and returns the values in
/// trial order.
fn run_trials<F>(spec: &MatrixSpec, t: f64, config: &McConfig, per_trial: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&SvdTriplet, &SvdTriplet) -> Vec<f64> + Sync,
{
    if config.trials < 2 {
        return Err(invalid("at least 2 trials are needed for a standard error"));
    }
    (0..config.trials as u64)
        .into_par_iter()
        .map(|k| {
            let (full, trunc) = sample_trial(spec, t, config.seed, k)?;
            Ok(per_trial(&full, &trunc))
        })
        .collect()
}

fn column(values: &[Vec<f64>], k: usize) -> Vec<f64> {
    values.iter().map(|row| row[k]).collect()
}

fn dot_prefix(a: &SvdTriplet, ca: usize, b: &SvdTriplet, cb: usize, len: usize, right: bool) -> f64 {
    let (ma, mb) = if right { (&a.right, &b.right) } else { (&a.left, &b.left) };
    (0..len).map(|r| ma[(r, ca)] * mb[(r, cb)]).sum()
}

fn nearest(svals: &[f64], count: usize, target: f64) -> usize {
    (0..count)
        .min_by(|&a, &b| (svals[a] * svals[a] - target).abs().total_cmp(&(svals[b] * svals[b] - target).abs()))
        .expect("non-empty")
}

/// Monte Carlo estimates of the three rescaled overlaps at each target.
pub fn mc_rescaled_overlaps(
    spec: &MatrixSpec,
    t: f64,
    targets: &[Target],
    config: &McConfig,
) -> Result<Vec<TargetEstimate>> {
    let Dims { cols: big_n, sub_rows: m, sub_cols: n, .. } = spec.dims;
    if let Selection::EigenvalueMatched(refs) = &config.selection {
        if refs.len() != targets.len() {
            return Err(invalid("eigenvalue-matched selection needs one reference per target"));
        }
    }
    let fixed: Vec<(usize, usize)> =
        targets.iter().map(|tg| (quantile_index(tg.x, n) - 1, quantile_index(tg.y, big_n) - 1)).collect();
    let scale = big_n as f64;
    let w = config.window as isize;
    let values = run_trials(spec, t, config, |full, trunc| {
        let mut out = Vec::with_capacity(3 * targets.len());
        for (k, &(fi, fj)) in fixed.iter().enumerate() {
            let (ci, cj) = match &config.selection {
                Selection::FixedIndex => (fi, fj),
                Selection::EigenvalueMatched(refs) => {
                    (nearest(&trunc.svals, n, refs[k].0), nearest(&full.svals, big_n, refs[k].1))
                }
            };
            let (mut sv, mut su, mut sw, mut count) = (0.0, 0.0, 0.0, 0.0);
            for di in -w..=w {
                let i = ci as isize + di;
                if i < 0 || i >= n as isize {
                    continue;
                }
                for dj in -w..=w {
                    let j = cj as isize + dj;
                    if j < 0 || j >= big_n as isize {
                        continue;
                    }
                    let (i, j) = (i as usize, j as usize);
                    let p = dot_prefix(trunc, i, full, j, n, true);
                    let q = dot_prefix(trunc, i, full, j, m, false);
                    sv += p * p;
                    su += q * q;
                    sw += p * q;
                    count += 1.0;
                }
            }
            out.extend_from_slice(&[scale * sv / count, scale * su / count, scale * sw / count]);
        }
        out
    })?;
    Ok(targets
        .iter()
        .zip(&fixed)
        .enumerate()
        .map(|(k, (&target, &(i, j)))| TargetEstimate {
            target,
            row: i + 1,
            col: j + 1,
            v: OverlapEstimate::from_samples(&column(&values, 3 * k)),
            u: OverlapEstimate::from_samples(&column(&values, 3 * k + 1)),
            w: OverlapEstimate::from_samples(&column(&values, 3 * k + 2)),
        })
        .collect())
}

/// Null-space overlap cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelTarget {
    /// `Ū(0, λ)`: truncated left vectors `n+1..m` against full index `≈ y·N`.
    U1 { y: f64 },
    /// `Ū(μ, 0)`: truncated index `≈ x·n` against full left vectors `N+1..M`.
    U2 { x: f64 },
    /// `Ū(0, 0)`: both indices in the null spaces.
    U3,
}

/// Estimates of `N·E[⟨ũ_i, u_j⟩²]` with the null-space indices averaged over
/// their whole range within each trial.
pub fn mc_kernel_overlaps(
    spec: &MatrixSpec,
    t: f64,
    targets: &[KernelTarget],
    config: &McConfig,
) -> Result<Vec<OverlapEstimate>> {
    let Dims { rows: big_m, cols: big_n, sub_rows: m, sub_cols: n } = spec.dims;
    for tg in targets {
        let (needs_rows, needs_cols) = match tg {
            KernelTarget::U1 { .. } => (true, false),
            KernelTarget::U2 { .. } => (false, true),
            KernelTarget::U3 => (true, true),
        };
        if needs_rows && m == n {
            return Err(Error::DegenerateNullSpace("m = n leaves no truncated null-space vectors".into()));
        }
        if needs_cols && big_m == big_n {
            return Err(Error::DegenerateNullSpace("M = N leaves no full null-space vectors".into()));
        }
    }
    let scale = big_n as f64;
    let values = run_trials(spec, t, config, |full, trunc| {
        let entry = |i: usize, j: usize| {
            let q = dot_prefix(trunc, i, full, j, m, false);
            scale * q * q
        };
        let mean_over = |is: std::ops::Range<usize>, js: std::ops::Range<usize>| {
            let count = (is.len() * js.len()) as f64;
            let mut s = 0.0;
            for i in is {
                for j in js.clone() {
                    s += entry(i, j);
                }
            }
            s / count
        };
        targets
            .iter()
            .map(|tg| match *tg {
                KernelTarget::U1 { y } => {
                    let j = quantile_index(y, big_n) - 1;
                    mean_over(n..m, j..j + 1)
                }
                KernelTarget::U2 { x } => {
                    let i = quantile_index(x, n) - 1;
                    mean_over(i..i + 1, big_n..big_m)
                }
                KernelTarget::U3 => mean_over(n..m, big_n..big_m),
            })
            .collect()
    })?;
    Ok((0..targets.len()).map(|k| OverlapEstimate::from_samples(&column(&values, k))).collect())
}
