//! Sokhotski–Plemelj boundary values by extrapolation `ε → 0⁺`.

use num_complex::Complex64;

use super::BoundaryValue;
use crate::error::{invalid, Error, Result};
use crate::numerics::extrapolate_to_zero;

/// Strictly decreasing list of positive offsets `ε` at which a transform is
/// sampled below the real axis.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSchedule(Vec<f64>);

impl EpsSchedule {
    pub const DEFAULT_FACTORS: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];

    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.len() < 3 {
            return Err(invalid("eps schedule needs at least 3 entries"));
        }
        if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(invalid("eps schedule entries must be positive"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("eps schedule must be strictly decreasing"));
        }
        Ok(Self(eps))
    }

    /// `factors · width`, the form accepted on the command line.
    pub fn relative(factors: &[f64], width: f64) -> Result<Self> {
        Self::new(factors.iter().map(|f| f * width).collect())
    }

    /// The default geometric schedule scaled by the support width.
    pub fn for_width(width: f64) -> Self {
        Self::relative(&Self::DEFAULT_FACTORS, width).expect("default schedule is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|e| e * factor).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    /// Accepted disagreement between the full extrapolation and the one that
    /// drops the coarsest sample, relative to `1 + |value|`.
    pub tol: f64,
    /// How many times the schedule may be shrunk before giving up.
    pub max_refinements: usize,
    pub shrink: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_refinements: 8, shrink: 4.0 }
    }
}

/// Polynomial extrapolation of `solver(λ − iε)` to `ε = 0` along `schedule`,
/// returning the value and a stability estimate.
pub(crate) fn extrapolate_below<F>(solver: &F, lam: f64, schedule: &EpsSchedule) -> Result<(Complex64, f64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let eps = schedule.values();
    let vals = eps.iter().map(|&e| solver(Complex64::new(lam, -e))).collect::<Result<Vec<_>>>()?;
    let full = extrapolate_to_zero(eps, &vals);
    let reduced = extrapolate_to_zero(&eps[1..], &vals[1..]);
    Ok((full, (full - reduced).norm()))
}

/// Boundary value `G(λ − i0) = v(λ) + iπρ(λ)` of the transform computed by
/// `solver(point, t)`.
///
/// The schedule is shrunk by `opts.shrink` whenever the extrapolation is not
/// stable to `opts.tol`; the density is clamped at zero.
pub fn plemelj_boundary<F>(
    solver: F,
    lam: f64,
    t: f64,
    schedule: &EpsSchedule,
    opts: &BoundaryOptions,
) -> Result<BoundaryValue>
where
    F: Fn(Complex64, f64) -> Result<Complex64>,
{
    let at_t = |z: Complex64| solver(z, t);
    let mut sched = schedule.clone();
    let mut spread = f64::INFINITY;
    for _ in 0..=opts.max_refinements {
        match extrapolate_below(&at_t, lam, &sched) {
            Ok((g, s)) => {
                if s <= opts.tol * (1.0 + g.norm()) {
                    return Ok(BoundaryValue { hilbert: g.re, density: (g.im / std::f64::consts::PI).max(0.0) });
                }
                spread = s;
            }
            Err(e @ Error::InvalidParameter(_)) => return Err(e),
            Err(_) => {}
        }
        sched = sched.scaled(1.0 / opts.shrink);
    }
    Err(Error::UnstableBoundary { point: lam, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{mp_density, mp_hilbert, mp_stieltjes, MpSpec};

    #[test]
    fn schedule_validation() {
        assert!(EpsSchedule::new(vec![1.0, 0.5]).is_err());
        assert!(EpsSchedule::new(vec![1.0, 0.5, 0.5]).is_err());
        assert!(EpsSchedule::new(vec![1.0, -0.5, -1.0]).is_err());
        assert!(EpsSchedule::new(vec![1.0, 0.5, 0.25]).is_ok());
    }

    #[test]
    fn mp_bulk_point() {
        let s = MpSpec::new(1.0, 1.0, 1.0).unwrap();
        let bv = plemelj_boundary(
            |z, _| mp_stieltjes(&s, z),
            2.0,
            1.0,
            &EpsSchedule::for_width(4.0),
            &BoundaryOptions::default(),
        )
        .unwrap();
        assert!((bv.hilbert - mp_hilbert(&s, 2.0).unwrap()).abs() < 1e-6);
        assert!((bv.density - mp_density(&s, 2.0)).abs() < 1e-6);
    }

    #[test]
    fn far_outside_support_has_no_density() {
        let s = MpSpec::new(1.0, 1.0, 1.0).unwrap();
        let bv = plemelj_boundary(
            |z, _| mp_stieltjes(&s, z),
            9.0,
            1.0,
            &EpsSchedule::for_width(4.0),
            &BoundaryOptions::default(),
        )
        .unwrap();
        assert!(bv.density <= 1e-8);
        assert!((bv.hilbert - mp_stieltjes(&s, Complex64::new(9.0, 0.0)).unwrap().re).abs() < 1e-6);
    }

    #[test]
    fn near_edge_shrinks_schedule() {
        let s = MpSpec::new(1.0, 1.0 / 0.9, 3.0).unwrap();
        let (_, hi) = s.edges();
        let lam = hi - 1e-3;
        let bv = plemelj_boundary(
            |z, _| mp_stieltjes(&s, z),
            lam,
            3.0,
            &EpsSchedule::for_width(s.width()),
            &BoundaryOptions::default(),
        )
        .unwrap();
        assert!((bv.density - mp_density(&s, lam)).abs() < 1e-5, "{bv:?}");
    }
}
