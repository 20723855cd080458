//! Recovery of overlap limits from resolvents evaluated off the real axis,
//! by extrapolating `ε → 0⁺`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::closed_form::{require_null_spaces, OverlapTriple};
use super::resolvent::Propagated;
use crate::error::{Error, Result};
use crate::numerics::extrapolate_to_zero;
use crate::spectral::{EpsSchedule, ShapeRatios};

/// Resolvents at time `t` for points off the real axis.
pub trait ResolventEvaluator {
    fn ratios(&self) -> &ShapeRatios;
    fn resolvents(&self, z: Complex64, ztilde: Complex64) -> Result<Propagated>;
}

/// Minimum densities for a point to count as bulk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkGuard {
    pub rho_min: f64,
    pub rhot_min: f64,
}

impl BulkGuard {
    pub const DEFAULT_FRACTION: f64 = 0.02;

    /// `fraction · max ρ` and `fraction · max ρ̃`.
    pub fn fraction_of_peak(fraction: f64, rho_max: f64, rhot_max: f64) -> Self {
        Self { rho_min: fraction * rho_max, rhot_min: fraction * rhot_max }
    }

    pub fn check(&self, rho: f64, rhot: f64) -> Result<()> {
        if !(rho > self.rho_min) {
            return Err(Error::EdgeProximity { density: rho, threshold: self.rho_min });
        }
        if !(rhot > self.rhot_min) {
            return Err(Error::EdgeProximity { density: rhot, threshold: self.rhot_min });
        }
        Ok(())
    }
}

/// `V̄`, `Ū`, `W̄` at bulk point `(μ, λ)` from
/// `Re[S(λ − iε, μ + iε) − S(λ − iε, μ − iε)] / (2π² α ρ̃ ρ)`,
/// with the `W` channel further divided by `√(μλ)`.
#[allow(clippy::too_many_arguments)]
pub fn invert_bulk<R: ResolventEvaluator + ?Sized>(
    res: &R,
    mu: f64,
    lam: f64,
    rho: f64,
    rhot: f64,
    guard: &BulkGuard,
    schedule: &EpsSchedule,
) -> Result<OverlapTriple> {
    guard.check(rho, rhot)?;
    let eps = schedule.values();
    let mut dv = Vec::with_capacity(eps.len());
    let mut du = Vec::with_capacity(eps.len());
    let mut dw = Vec::with_capacity(eps.len());
    for &e in eps {
        let z = Complex64::new(lam, -e);
        let (zp, zm) = (Complex64::new(mu, e), Complex64::new(mu, -e));
        let plus = res.resolvents(z, zp)?;
        let minus = res.resolvents(z, zm)?;
        dv.push(plus.sv - minus.sv);
        du.push(plus.su(z, zp) - minus.su(z, zm));
        dw.push(plus.sw - minus.sw);
    }
    let norm = 2.0 * PI * PI * res.ratios().alpha * rho * rhot;
    Ok(OverlapTriple {
        vbar: extrapolate_to_zero(eps, &dv).re / norm,
        ubar: extrapolate_to_zero(eps, &du).re / norm,
        wbar: extrapolate_to_zero(eps, &dw).re / (norm * (mu * lam).sqrt()),
    })
}

/// Which null-space overlap to extract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelCase {
    /// `Ū(0, λ)`, needs `ρ(λ)`.
    U1 { lam: f64, rho: f64 },
    /// `Ū(μ, 0)`, needs `ρ̃(μ)`.
    U2 { mu: f64, rhot: f64 },
    /// `Ū(0, 0)`.
    U3,
}

/// Null-space overlaps from `S_U` with one or both arguments at `iε`:
///
/// ```text
/// Ū(0, λ) = Im[iε S_U(λ − iε, iε)] / (π c̃ ρ(λ))
/// Ū(μ, 0) = Im[iε S_U(iε, μ − iε)] / (π α c ρ̃(μ))
/// Ū(0, 0) = (iε)² S_U(iε, iε) / (c c̃)
/// ```
///
/// Arguments placed at `iε` converge on the scale of the distance from the
/// origin to the lower edge of the spectrum, which is much smaller than the
/// support width when `q` or `β/q` is close to `α`. Size `schedule`
/// accordingly.
pub fn invert_kernel_u<R: ResolventEvaluator + ?Sized>(
    res: &R,
    case: KernelCase,
    schedule: &EpsSchedule,
) -> Result<f64> {
    let r = *res.ratios();
    require_null_spaces(&r)?;
    let eps = schedule.values();
    let vals = eps
        .iter()
        .map(|&e| {
            let ie = Complex64::new(0.0, e);
            let (z, zt, factor) = match case {
                KernelCase::U1 { lam, .. } => (Complex64::new(lam, -e), ie, ie),
                KernelCase::U2 { mu, .. } => (ie, Complex64::new(mu, -e), ie),
                KernelCase::U3 => (ie, ie, ie * ie),
            };
            Ok(factor * res.resolvents(z, zt)?.su(z, zt))
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = extrapolate_to_zero(eps, &vals);
    Ok(match case {
        KernelCase::U1 { rho, .. } => limit.im / (PI * r.c_tilde() * rho),
        KernelCase::U2 { rhot, .. } => limit.im / (PI * r.alpha * r.c() * rhot),
        KernelCase::U3 => limit.re / (r.c() * r.c_tilde()),
    })
}
