//! Limits of the rescaled overlaps when `A ≡ 0`.

use crate::error::{invalid, Error, Result};
use crate::spectral::ShapeRatios;

/// Limits of `N·E[⟨ṽ_i, v_j⟩²]`, `N·E[⟨ũ_i, u_j⟩²]` and
/// `N·E[⟨ṽ_i, v_j⟩⟨ũ_i, u_j⟩]` at eigenvalues `(μ, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapTriple {
    pub vbar: f64,
    pub ubar: f64,
    pub wbar: f64,
}

/// Left-overlap limits involving null-space vectors: `Ū(0, λ)`, `Ū(μ, 0)`
/// and `Ū(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOverlaps {
    pub u1_of_lambda: f64,
    pub u2_of_mu: f64,
    pub u3: f64,
}

fn require_time(r: &ShapeRatios) -> Result<()> {
    if r.t > 0.0 {
        Ok(())
    } else {
        Err(invalid("overlap limits need t > 0"))
    }
}

/// Closed forms with `λ̄ = λ − (1 + 1/q)t`, `μ̄ = μ − (α + β/q)t` and shared
/// denominator `(1 − αβ)² t² + q (λ̄ − μ̄)(αβ λ̄ − μ̄)`.
pub fn mp_overlap_triple(r: &ShapeRatios, mu: f64, lam: f64) -> Result<OverlapTriple> {
    require_time(r)?;
    let ShapeRatios { q, alpha, beta, t } = *r;
    let (lb, mb) = (r.lambda_bar(lam), r.mu_bar(mu));
    let ab = alpha * beta;
    let denom = (1.0 - ab).powi(2) * t * t + q * (lb - mb) * (ab * lb - mb);
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "overlap denominator {denom:e} is not positive at (mu, lambda) = ({mu}, {lam})"
        )));
    }
    let vnum = (1.0 - alpha) * t * mb + alpha * (1.0 - beta) * t * lb + (1.0 - ab) * (alpha + 1.0 / q) * t * t;
    let unum = (1.0 - beta) * t * mb + beta * (1.0 - alpha) * t * lb + (1.0 - ab) * (1.0 + beta / q) * t * t;
    let wnum = (1.0 - ab) * t * (lam * mu).sqrt();
    Ok(OverlapTriple { vbar: q * vnum / denom, ubar: q * unum / denom, wbar: q * wnum / denom })
}

/// Checks that both null spaces are non-empty (`q < 1`, `β > αq`).
pub(crate) fn require_null_spaces(r: &ShapeRatios) -> Result<()> {
    if r.c() <= 0.0 {
        return Err(Error::DegenerateNullSpace("q = 1 leaves no null space for X".into()));
    }
    if r.c_tilde() <= 0.0 {
        return Err(Error::DegenerateNullSpace("beta = alpha * q leaves no in-block null space".into()));
    }
    Ok(())
}

pub fn mp_kernel_overlaps(r: &ShapeRatios, mu: f64, lam: f64) -> Result<KernelOverlaps> {
    require_time(r)?;
    require_null_spaces(r)?;
    let ShapeRatios { q, alpha, beta, t } = *r;
    let shift = (1.0 / q - alpha) * t;
    Ok(KernelOverlaps {
        u1_of_lambda: (1.0 - alpha) * t / (alpha * lam + (1.0 - alpha) * shift),
        u2_of_mu: (1.0 - beta) * t / (mu + (1.0 - beta) * shift),
        u3: q / (1.0 - alpha * q),
    })
}
