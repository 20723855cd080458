//! Sum rules of the `A ≡ 0` overlap limits.
//!
//! Orthonormality gives `Σ_j ⟨ṽ_i, v_j⟩² = 1` and `Σ_{j ≤ M} ⟨ũ_i, u_j⟩² = 1`
//! for every `i`; in the limit these sums become integrals against `ρ`.

use super::closed_form::{mp_kernel_overlaps, mp_overlap_triple};
use crate::error::Result;
use crate::spectral::mp::integrate_against_density;
use crate::spectral::ShapeRatios;

const TOL: f64 = 1e-10;

/// `(∫ V̄(μ, λ) ρ(λ) dλ, ∫ Ū(μ, λ) ρ(λ) dλ + (1/q − 1) Ū(μ, 0))` at time `t`.
///
/// The `Ū(μ, 0)` term is dropped when `q = 1`.
pub fn normalization_check(r: &ShapeRatios, mu: f64, t: f64) -> Result<(f64, f64)> {
    let r = r.with_time(t)?;
    let spec = r.rho_spec()?;
    let triple = |lam: f64| mp_overlap_triple(&r, mu, lam).map(|o| (o.vbar, o.ubar)).unwrap_or((f64::NAN, f64::NAN));
    let vsum = integrate_against_density(&spec, |lam| triple(lam).0, TOL)?;
    let mut usum = integrate_against_density(&spec, |lam| triple(lam).1, TOL)?;
    if r.c() > 0.0 {
        // lam is unused by u2
        let k = mp_kernel_overlaps(&r, mu, 1.0)?;
        usum += r.c() * k.u2_of_mu;
    }
    Ok((vsum, usum))
}

/// `∫ Ū(0, λ) ρ(λ) dλ + (1/q − 1) Ū(0, 0)` at time `t`.
pub fn kernel_row_sum(r: &ShapeRatios, t: f64) -> Result<f64> {
    let r = r.with_time(t)?;
    let spec = r.rho_spec()?;
    let u3 = mp_kernel_overlaps(&r, 1.0, 1.0)?.u3;
    let u1 = |lam: f64| mp_kernel_overlaps(&r, 1.0, lam).map(|k| k.u1_of_lambda).unwrap_or(f64::NAN);
    Ok(integrate_against_density(&spec, u1, TOL)? + r.c() * u3)
}
