//! Closed forms for the Marchenko–Pastur family.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::MpSpec;
use crate::error::{Error, Result};
use crate::numerics::{brent, integrate};

/// Support edges `((√a − √b)² t, (√a + √b)² t)`.
pub fn mp_edges(spec: &MpSpec) -> (f64, f64) {
    let (sa, sb) = (spec.a.sqrt(), spec.b.sqrt());
    ((sa - sb).powi(2) * spec.t, (sa + sb).powi(2) * spec.t)
}

pub fn mp_density(spec: &MpSpec, lam: f64) -> f64 {
    let (lo, hi) = mp_edges(spec);
    if lam <= lo || lam >= hi || lam <= 0.0 {
        return 0.0;
    }
    ((hi - lam) * (lam - lo)).sqrt() / (2.0 * PI * spec.a * lam * spec.t)
}

/// Location and value of the density maximum, `λ* = 2·lo·hi / (lo + hi)`.
///
/// When the lower edge sits at zero the density is unbounded there; the peak
/// is then reported at one percent of the support width.
pub fn mp_density_peak(spec: &MpSpec) -> (f64, f64) {
    let (lo, hi) = mp_edges(spec);
    let lam = (2.0 * lo * hi / (lo + hi)).max(lo + 0.01 * (hi - lo));
    (lam, mp_density(spec, lam))
}

/// Real part of the boundary value, `(λ − (b − a) t) / (2 a λ t)`.
pub fn mp_hilbert(spec: &MpSpec, lam: f64) -> Result<f64> {
    if lam == 0.0 {
        return Err(Error::SingularInput("Hilbert transform evaluated at 0".into()));
    }
    Ok((lam - (spec.b - spec.a) * spec.t) / (2.0 * spec.a * lam * spec.t))
}

/// Stieltjes transform `G(z) = ∫ ρ(λ) / (z − λ) dλ`.
///
/// Evaluated as `2 / (z − (b − a)t + √(z − hi)·√(z − lo))`, the rationalised
/// form of the physical root; the product of principal roots carries its cut
/// exactly on the support and behaves like `z` at infinity.
pub fn mp_stieltjes(spec: &MpSpec, z: Complex64) -> Result<Complex64> {
    let (lo, hi) = mp_edges(spec);
    if z.im == 0.0 && z.re >= lo && z.re <= hi {
        return Err(Error::BranchAmbiguity { re: z.re, im: z.im });
    }
    let s = (z - hi).sqrt() * (z - lo).sqrt();
    let shifted = z - (spec.b - spec.a) * spec.t;
    let mut g = 2.0 / (shifted + s);
    if z.im != 0.0 && g.im * z.im > 0.0 {
        g = (shifted - s) / (2.0 * spec.a * spec.t * z);
    }
    Ok(g)
}

// With λ = lo + w sin²(θ/2) the edge square roots cancel against the
// Jacobian, leaving a smooth integrand on [0, π].
fn theta_of(lo: f64, w: f64, lam: f64) -> f64 {
    let s = ((lam - lo) / w).clamp(0.0, 1.0).sqrt();
    2.0 * s.asin()
}

fn lambda_of(lo: f64, w: f64, theta: f64) -> f64 {
    lo + w * (0.5 * theta).sin().powi(2)
}

fn theta_integrand(spec: &MpSpec, lo: f64, w: f64, theta: f64) -> f64 {
    let (s, c) = (0.5 * theta).sin_cos();
    let lam = lo + w * s * s;
    w * w * s * s * c * c / (2.0 * PI * spec.a * spec.t * lam)
}

/// Upper-tail mass `∫_λ^∞ ρ`.
pub fn tail_mass(spec: &MpSpec, lam: f64) -> f64 {
    let (lo, hi) = mp_edges(spec);
    if lam <= lo {
        return 1.0;
    }
    if lam >= hi {
        return 0.0;
    }
    let w = hi - lo;
    let theta = theta_of(lo, w, lam);
    integrate(|th| theta_integrand(spec, lo, w, th), theta, PI, 1e-14, 1e-13).map(|(v, _)| v).unwrap_or(f64::NAN)
}

/// Quantile `λ(x, t)` defined by `x = ∫_{λ(x,t)}^∞ ρ`; clamped to the edges
/// outside `(0, 1)`.
pub fn quantile(spec: &MpSpec, x: f64) -> f64 {
    let (lo, hi) = mp_edges(spec);
    if x <= 0.0 {
        return hi;
    }
    if x >= 1.0 {
        return lo;
    }
    let w = hi - lo;
    let tail = |theta: f64| {
        integrate(|th| theta_integrand(spec, lo, w, th), theta, PI, 1e-15, 1e-14).map(|(v, _)| v).unwrap_or(f64::NAN)
            - x
    };
    let theta = brent(tail, 0.0, PI, 1e-15).unwrap_or(f64::NAN);
    lambda_of(lo, w, theta).clamp(lo, hi)
}

/// Integrate `f(λ) ρ(λ)` over the support using the edge-regularising
/// substitution.
pub(crate) fn integrate_against_density<F: Fn(f64) -> f64>(spec: &MpSpec, f: F, tol: f64) -> Result<f64> {
    let (lo, hi) = mp_edges(spec);
    let w = hi - lo;
    integrate(|th| f(lambda_of(lo, w, th)) * theta_integrand(spec, lo, w, th), 0.0, PI, tol, tol).map(|(v, _)| v)
}
