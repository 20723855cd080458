//! Checks the limiting Stieltjes transform from the implicit equation against
//! finite-`N` spectra from the SDE and from direct sampling.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bru::{initial_spectrum, sampled_spectrum, sde_endpoint};
use crate::ensemble::MatrixSpec;
use crate::error::{invalid, Result};
use crate::numerics::ks_two_sample;
use crate::spectral::{empirical_stieltjes, AtomSpectrum, ImplicitSolver, SolverOptions};

/// Smallest `|Im z|` accepted on the comparison grid.
pub const MIN_IMAG: f64 = 0.1;

/// Comparison at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersPoint {
    pub z: Complex64,
    pub theory: Complex64,
    pub sde: Complex64,
    pub direct: Complex64,
    /// Implicit-equation residual of `theory`.
    pub residual: f64,
}

impl BurgersPoint {
    pub fn sde_deviation(&self) -> f64 {
        (self.sde - self.theory).norm()
    }

    pub fn direct_deviation(&self) -> f64 {
        (self.direct - self.theory).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurgersReport {
    pub t: f64,
    pub points: Vec<BurgersPoint>,
    /// Two-sample KS distance between the SDE and direct-sampling spectra.
    pub ks_statistic: f64,
    pub sde_eigs: Vec<f64>,
    pub direct_eigs: Vec<f64>,
}

impl BurgersReport {
    /// Largest deviation from theory over the grid and both finite-`N`
    /// sources.
    pub fn max_deviation(&self) -> f64 {
        self.points.iter().map(|p| p.sde_deviation().max(p.direct_deviation())).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// `count` points on `[lo, hi] + i·im`.
pub fn z_grid(lo: f64, hi: f64, im: f64, count: usize) -> Vec<Complex64> {
    if count == 1 {
        return vec![Complex64::new(0.5 * (lo + hi), im)];
    }
    (0..count).map(|k| Complex64::new(lo + (hi - lo) * k as f64 / (count - 1) as f64, im)).collect()
}

/// Integrates the eigenvalue SDE to `t_final`, draws one direct sample of
/// `X_t`, and compares both empirical transforms with the implicit-equation
/// solution on `z_grid`.
///
/// The SDE path uses stream 0 of a ChaCha8 generator seeded with `seed`; the
/// direct sample uses stream 1.
pub fn burgers_validate(
    spec: &MatrixSpec,
    t_final: f64,
    n_steps: usize,
    z_grid: &[Complex64],
    seed: u64,
) -> Result<BurgersReport> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(invalid(format!("t = {t_final} must be finite and >= 0")));
    }
    if let Some(z) = z_grid.iter().find(|z| !(z.im.abs() >= MIN_IMAG)) {
        return Err(invalid(format!("grid point {z} is closer than {MIN_IMAG} to the real axis")));
    }
    let dims = spec.dims;
    let n = dims.cols as f64;
    let initial = initial_spectrum(spec)?;
    let (sde_eigs, direct_eigs) = if t_final == 0.0 {
        (initial.clone(), initial.clone())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sde = sde_endpoint(spec, t_final, n_steps, &mut rng)?.eigs;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        (sde, sampled_spectrum(spec, t_final, &mut rng)?)
    };

    let family = dims.ratios(t_final)?.full_family();
    let solver = ImplicitSolver::new(AtomSpectrum::from_eigs(&initial, n), family, SolverOptions::default());
    let points = z_grid
        .iter()
        .map(|&z| {
            let theory = solver.solve(z, t_final)?;
            Ok(BurgersPoint {
                z,
                theory,
                sde: empirical_stieltjes(&sde_eigs, z, n),
                direct: empirical_stieltjes(&direct_eigs, z, n),
                residual: solver.residual(z, t_final, theory)?.norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BurgersReport {
        t: t_final,
        points,
        ks_statistic: ks_two_sample(&sde_eigs, &direct_eigs),
        sde_eigs,
        direct_eigs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Dims;

    #[test]
    fn zero_time_is_exact() {
        let dims = Dims::new(50, 40, 50, 40).unwrap();
        let diag: Vec<f64> = (0..40).map(|k| 1.0 + 0.05 * k as f64).collect();
        let spec = MatrixSpec::diagonal(diag, dims).unwrap();
        let grid = z_grid(0.0, 6.0, 1.0, 5);
        let rep = burgers_validate(&spec, 0.0, 16, &grid, 1).unwrap();
        assert!(rep.max_deviation() <= 1e-12);
        assert_eq!(rep.ks_statistic, 0.0);
    }

    #[test]
    fn rejects_points_near_real_axis() {
        let dims = Dims::new(5, 4, 5, 4).unwrap();
        let grid = [Complex64::new(1.0, 0.05)];
        assert!(burgers_validate(&MatrixSpec::zero(dims), 1.0, 8, &grid, 0).is_err());
    }

    #[test]
    fn small_null_case_tracks_theory() {
        let dims = Dims::new(120, 100, 120, 100).unwrap();
        let grid = z_grid(0.5, 4.5, 1.0, 5);
        let rep = burgers_validate(&MatrixSpec::zero(dims), 1.0, 2048, &grid, 5).unwrap();
        assert!(rep.max_deviation() < 0.1, "deviation {}", rep.max_deviation());
        assert!(rep.max_residual() <= 1e-10);
    }
}
