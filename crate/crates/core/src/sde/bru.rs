//! Euler–Maruyama integration of the eigenvalue process of `X_tᵀ X_t`:
//!
//! ```text
//! dλ_j = (2/√N) √λ_j db_j + (M/N) dt + (1/N) Σ_{k≠j} (λ_j + λ_k)/(λ_j − λ_k) dt
//! ```
//!
//! A step that would break ordering or positivity is split in two halves
//! whose Brownian increments are drawn from the bridge conditioned on the
//! original increment, so the driving path is unchanged. Before halving, a
//! failing step is retried with the drift of the offending eigenvalues taken
//! at the end point (backward Euler in the drift, explicit in the noise); the
//! repulsion then diverges at a collision, which keeps the ordering. A
//! smallest eigenvalue pushed below zero is re-solved implicitly in `√λ`.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensemble::{sample_with_rng, svd_full, Dims, MatrixSpec};
use crate::error::{invalid, Error, Result};
use crate::numerics::brent;

/// Number of halvings allowed below the nominal step.
pub const MAX_REFINEMENTS: u32 = 10;

/// Spacing used to split exactly coinciding initial eigenvalues.
pub const TIE_SPLIT: f64 = 1e-8;

/// Eigenvalues of `X_tᵀ X_t` in strictly decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenState {
    pub t: f64,
    pub eigs: Vec<f64>,
    pub dims: Dims,
}

impl EigenState {
    pub fn new(t: f64, eigs: Vec<f64>, dims: Dims) -> Result<Self> {
        if eigs.len() != dims.cols {
            return Err(Error::ShapeMismatch { expected: (dims.cols, 1), found: (eigs.len(), 1) });
        }
        if !is_valid(&eigs) {
            return Err(invalid("eigenvalues must be positive and strictly decreasing"));
        }
        Ok(Self { t, eigs, dims })
    }

    /// Initial state from the spectrum of `AᵀA`, with exact ties broken by
    /// `λ_j ← λ_j + j·10⁻⁸` (counted from the bottom).
    pub fn from_spectrum(mut eigs: Vec<f64>, dims: Dims) -> Result<Self> {
        eigs.sort_by(|a, b| b.total_cmp(a));
        let n = eigs.len();
        for (k, x) in eigs.iter_mut().enumerate() {
            *x += (n - k) as f64 * TIE_SPLIT;
        }
        // a tie split can reorder values closer than the split itself
        eigs.sort_by(|a, b| b.total_cmp(a));
        Self::new(0.0, eigs, dims)
    }

    pub fn min_gap(&self) -> f64 {
        min_gap(&self.eigs)
    }
}

fn is_valid(eigs: &[f64]) -> bool {
    eigs.last().map_or(true, |&x| x > 0.0) && eigs.windows(2).all(|w| w[0] > w[1]) && eigs.iter().all(|x| x.is_finite())
}

fn min_gap(eigs: &[f64]) -> f64 {
    eigs.windows(2).map(|w| w[0] - w[1]).chain(eigs.last().copied()).fold(f64::INFINITY, f64::min)
}

/// Drift `M/N + (1/N) Σ_{k≠j} (λ_j + λ_k)/(λ_j − λ_k)` for every `j`.
pub fn drift(eigs: &[f64], dims: &Dims) -> Vec<f64> {
    let n = dims.cols as f64;
    let base = dims.rows as f64 / n;
    eigs.iter()
        .enumerate()
        .map(|(j, &lj)| {
            let rep: f64 = eigs.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &lk)| (lj + lk) / (lj - lk)).sum();
            base + rep / n
        })
        .collect()
}

fn euler(eigs: &[f64], dims: &Dims, dt: f64, db: &[f64]) -> Vec<f64> {
    let noise = 2.0 / (dims.cols as f64).sqrt();
    drift(eigs, dims).iter().zip(eigs.iter().zip(db)).map(|(d, (&l, &b))| l + d * dt + noise * l.sqrt() * b).collect()
}

/// Indices whose explicit update breaks ordering or positivity, each widened
/// by `margin` neighbours on both sides.
fn offending(next: &[f64], margin: usize) -> Vec<bool> {
    let n = next.len();
    let mut bad = vec![false; n];
    let mut mark = |j: usize| {
        bad[j.saturating_sub(margin)..(j + margin + 1).min(n)].fill(true);
    };
    for j in 0..n.saturating_sub(1) {
        if !(next[j] > next[j + 1]) {
            mark(j);
            mark(j + 1);
        }
    }
    if n > 0 && !(next[n - 1] > 0.0) {
        mark(n - 1);
    }
    bad
}

/// Drift-implicit update of the indices in `active`: solves
/// `x_j = λ_j + h·drift_j(x) + noise_j(λ)` for `j ∈ active` by damped Newton
/// iteration inside the ordered chamber, with the other coordinates held at
/// their explicit values `next`.
fn implicit_update(eigs: &[f64], next: &[f64], active: &[usize], dims: &Dims, dt: f64, db: &[f64]) -> Option<Vec<f64>> {
    const MAX_ITER: usize = 60;
    let n = dims.cols as f64;
    let noise = 2.0 / n.sqrt();
    let mut x = next.to_vec();
    for &j in active {
        x[j] = eigs[j];
    }
    if !is_valid(&x) {
        return None;
    }
    let drift_at = |x: &[f64], j: usize| -> f64 {
        let rep: f64 = x.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &xk)| (x[j] + xk) / (x[j] - xk)).sum();
        dims.rows as f64 / n + rep / n
    };
    let base: Vec<f64> = active.iter().map(|&j| eigs[j] + noise * eigs[j].sqrt() * db[j]).collect();
    let residual =
        |x: &[f64]| -> Vec<f64> { active.iter().zip(&base).map(|(&j, b)| x[j] - b - dt * drift_at(x, j)).collect() };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-14 * (1.0 + eigs.first().copied().unwrap_or(0.0));
    let len = active.len();
    let mut r = residual(&x);
    for _ in 0..MAX_ITER {
        let size = norm(&r);
        if size <= tol {
            return Some(x);
        }
        let jac = Mat::from_fn(len, len, |a, b| {
            let j = active[a];
            if a == b {
                let d: f64 = x
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &xk)| -2.0 * xk / ((x[j] - xk) * (x[j] - xk)))
                    .sum();
                1.0 - dt * d / n
            } else {
                let k = active[b];
                -dt * 2.0 * x[j] / (n * (x[j] - x[k]) * (x[j] - x[k]))
            }
        });
        let rhs = Mat::from_fn(len, 1, |a, _| -r[a]);
        let step = jac.partial_piv_lu().solve(&rhs);
        let mut scale = 1.0;
        loop {
            let mut trial = x.clone();
            for (a, &j) in active.iter().enumerate() {
                trial[j] += scale * step[(a, 0)];
            }
            if is_valid(&trial) {
                let tr = residual(&trial);
                if norm(&tr) < size || scale < 1e-3 {
                    x = trial;
                    r = tr;
                    break;
                }
            }
            scale *= 0.5;
            if scale < 1e-12 {
                return None;
            }
        }
    }
    None
}

/// Repairs an invalid explicit update by treating the drift of the offending
/// eigenvalues (and a widening neighbourhood) implicitly.
fn implicit_substep(eigs: &[f64], next: &[f64], dims: &Dims, dt: f64, db: &[f64]) -> Option<Vec<f64>> {
    let mut margin = 1;
    loop {
        let bad = offending(next, margin);
        let active: Vec<usize> = (0..bad.len()).filter(|&j| bad[j]).collect();
        let everything = active.len() == eigs.len();
        if let Some(x) = implicit_update(eigs, next, &active, dims, dt, db) {
            return Some(x);
        }
        if everything {
            return None;
        }
        margin *= 4;
    }
}

/// Re-solves the smallest eigenvalue in the variable `y = √λ`, where the
/// process reads
///
/// ```text
/// dy = db/√N + (drift(y²) − 1/N)/(2y) dt
/// ```
///
/// with the drift taken at the end point and the other eigenvalues held at
/// their explicit values. For `M > N` the drift term diverges at both ends of
/// `(0, √λ_{N−1})`, so a root always exists there.
fn bottom_sqrt_update(eigs: &[f64], next: &[f64], dims: &Dims, dt: f64, db: &[f64]) -> Option<Vec<f64>> {
    let j = eigs.len().checked_sub(1)?;
    let others = &next[..j];
    if !is_valid(others) {
        return None;
    }
    let n = dims.cols as f64;
    let base = (dims.rows as f64 - 1.0) / n;
    let shifted = eigs[j].sqrt() + db[j] / n.sqrt();
    let h = |y: f64| {
        let x = y * y;
        let rep: f64 = others.iter().map(|&lk| (x + lk) / (x - lk)).sum();
        y - shifted - dt * (base + rep / n) / (2.0 * y)
    };
    let hi = match others.last() {
        Some(&above) => above.sqrt() * (1.0 - 1e-15),
        None => shifted.abs() + (dt * base).sqrt() + 1.0,
    };
    let lo = 1e-12 * hi;
    if !(h(lo) < 0.0 && h(hi) > 0.0) {
        return None;
    }
    let y = brent(h, lo, hi, 1e-15 * hi).ok()?;
    let mut x = others.to_vec();
    x.push(y * y);
    is_valid(&x).then_some(x)
}

fn advance<R: Rng + ?Sized>(
    eigs: Vec<f64>,
    t: f64,
    dims: &Dims,
    dt: f64,
    db: &[f64],
    depth: u32,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let next = euler(&eigs, dims, dt, db);
    if is_valid(&next) {
        return Ok(next);
    }
    if next.last().is_some_and(|&x| !(x > 0.0)) {
        if let Some(x) = bottom_sqrt_update(&eigs, &next, dims, dt, db) {
            return Ok(x);
        }
    }
    if let Some(x) = implicit_substep(&eigs, &next, dims, dt, db) {
        return Ok(x);
    }
    if depth >= MAX_REFINEMENTS {
        return Err(Error::Stiffness { t, gap: min_gap(&eigs) });
    }
    // Brownian bridge midpoint
    let half = 0.5 * dt;
    let sd = (dt / 4.0).sqrt();
    let first: Vec<f64> = db.iter().map(|&b| 0.5 * b + sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let second: Vec<f64> = db.iter().zip(&first).map(|(b, f)| b - f).collect();
    let mid = advance(eigs, t, dims, half, &first, depth + 1, rng)?;
    advance(mid, t + half, dims, half, &second, depth + 1, rng)
}

/// One step of length `dt` driven by the given Brownian increments `db`;
/// `rng` only feeds bridge refinements.
pub fn bru_step_with<R: Rng + ?Sized>(state: &EigenState, dt: f64, db: &[f64], rng: &mut R) -> Result<EigenState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt = {dt} must be positive")));
    }
    if db.len() != state.eigs.len() {
        return Err(Error::ShapeMismatch { expected: (state.eigs.len(), 1), found: (db.len(), 1) });
    }
    let eigs = advance(state.eigs.clone(), state.t, &state.dims, dt, db, 0, rng)?;
    debug_assert!(is_valid(&eigs));
    Ok(EigenState { t: state.t + dt, eigs, dims: state.dims })
}

/// One step of length `dt` with fresh increments from `rng`.
pub fn bru_step<R: Rng + ?Sized>(state: &EigenState, dt: f64, rng: &mut R) -> Result<EigenState> {
    let sd = dt.max(0.0).sqrt();
    let db: Vec<f64> = (0..state.eigs.len()).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    bru_step_with(state, dt, &db, rng)
}

/// Integrates from `state.t` to `t_final` in `n_steps` equal steps.
pub fn integrate<R: Rng + ?Sized>(state: EigenState, t_final: f64, n_steps: usize, rng: &mut R) -> Result<EigenState> {
    if t_final < state.t || n_steps == 0 {
        return Err(invalid(format!("cannot integrate from t = {} to {t_final} in {n_steps} steps", state.t)));
    }
    if t_final == state.t {
        return Ok(state);
    }
    let dt = (t_final - state.t) / n_steps as f64;
    let t0 = state.t;
    let mut s = state;
    for k in 0..n_steps {
        s = bru_step(&s, dt, rng)?;
        // keep the clock free of accumulated rounding
        s.t = t0 + (k + 1) as f64 * dt;
    }
    s.t = t_final;
    Ok(s)
}

/// Eigenvalues of `AᵀA` in decreasing order.
pub fn initial_spectrum(spec: &MatrixSpec) -> Result<Vec<f64>> {
    if spec.is_zero() {
        return Ok(vec![0.0; spec.dims.cols]);
    }
    let svd = svd_full(&spec.to_mat())?;
    Ok(svd.svals.iter().map(|s| s * s).collect())
}

/// Eigenvalues of `X_tᵀ X_t` for one direct sample.
pub fn sampled_spectrum<R: Rng + ?Sized>(spec: &MatrixSpec, t: f64, rng: &mut R) -> Result<Vec<f64>> {
    let (x, _) = sample_with_rng(spec, t, rng)?;
    Ok(svd_full(&x)?.svals.iter().map(|s| s * s).collect())
}

/// Smallest gap (relative to the largest eigenvalue plus one) accepted as
/// a starting point for the SDE.
pub const WARM_START_GAP: f64 = 1e-6;

/// Fraction of `t_final` covered by an exact sample when the initial
/// spectrum is too tightly packed to integrate.
pub const WARM_START_FRACTION: f64 = 1.0 / 32.0;

/// Eigenvalues at `t_final` along one SDE path started from the spectrum of
/// `AᵀA`, with `n_steps` nominal steps over `[0, t_final]`.
///
/// If the tie-split initial spectrum is too tightly packed to integrate,
/// the path starts from an exact sample of `X_t0` with
/// `t0 = WARM_START_FRACTION · t_final` (rounded to a whole number of steps).
pub fn sde_endpoint<R: Rng + ?Sized>(
    spec: &MatrixSpec,
    t_final: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<EigenState> {
    let start = EigenState::from_spectrum(initial_spectrum(spec)?, spec.dims)?;
    if t_final == 0.0 {
        return Ok(start);
    }
    let top = start.eigs.first().copied().unwrap_or(0.0);
    if start.min_gap() > WARM_START_GAP * (1.0 + top) {
        return integrate(start, t_final, n_steps, rng);
    }
    let dt = t_final / n_steps as f64;
    let skipped = ((n_steps as f64 * WARM_START_FRACTION).ceil() as usize).clamp(1, n_steps);
    let t0 = dt * skipped as f64;
    let mut eigs = sampled_spectrum(spec, t0, rng)?;
    if !is_valid(&eigs) {
        eigs = EigenState::from_spectrum(eigs, spec.dims)?.eigs;
    }
    let warm = EigenState::new(t0, eigs, spec.dims)?;
    if skipped == n_steps {
        return Ok(EigenState { t: t_final, ..warm });
    }
    integrate(warm, t_final, n_steps - skipped, rng)
}
