//! Spectral densities of `XᵀX` and of the truncated `X̃ᵀX̃`, their Stieltjes
//! transforms, and the boundary values that feed the overlap formulas.
//!
//! Two densities appear throughout: `ρ(·, t)` for the full matrix and
//! `ρ̃(·, t)` for the non-zero part of the truncated one. For `A ≡ 0` both are
//! members of one Marchenko–Pastur family parameterised by a left scale `a`
//! and a right scale `b`:
//!
//! ```text
//! ρ  : (a, b) = (1, 1/q)
//! ρ̃  : (a, b) = (α, β/q)
//! support [(√a − √b)² t, (√a + √b)² t]
//! ```
//!
//! For a general initial matrix the transforms are obtained by solving the
//! implicit characteristic equation, see [`implicit`].

pub mod boundary;
pub mod empirical;
pub mod implicit;
pub mod mp;

use crate::error::{invalid, Result};

pub use boundary::{plemelj_boundary, BoundaryOptions, EpsSchedule};
pub use empirical::empirical_stieltjes;
pub use implicit::{
    solve_implicit_g, solve_implicit_gtilde, AtomSpectrum, ImplicitSolver, InitialStieltjes, SolverOptions,
};
pub use mp::{mp_density, mp_density_peak, mp_edges, mp_hilbert, mp_stieltjes, quantile, tail_mass};

/// Macroscopic shape parameters and the noise variance `t`.
///
/// `q = N/M`, `alpha = n/N`, `beta = m/M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeRatios {
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t: f64,
}

impl ShapeRatios {
    pub fn new(q: f64, alpha: f64, beta: f64, t: f64) -> Result<Self> {
        let in_unit = |x: f64| x > 0.0 && x <= 1.0;
        if !in_unit(q) {
            return Err(invalid(format!("q = {q} must lie in (0, 1]")));
        }
        if !in_unit(alpha) {
            return Err(invalid(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        if !in_unit(beta) {
            return Err(invalid(format!("beta = {beta} must lie in (0, 1]")));
        }
        // n <= m in ratio form, with slack for ratios rounded from integer dims
        if alpha * q > beta * (1.0 + 1e-12) {
            return Err(invalid(format!("alpha * q = {} exceeds beta = {beta} (requires n <= m)", alpha * q)));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid(format!("t = {t} must be finite and >= 0")));
        }
        Ok(Self { q, alpha, beta, t })
    }

    pub fn with_time(&self, t: f64) -> Result<Self> {
        Self::new(self.q, self.alpha, self.beta, t)
    }

    /// `c = 1/q − 1`, the relative size of the left null space of `X`.
    pub fn c(&self) -> f64 {
        1.0 / self.q - 1.0
    }

    /// `c̃ = β/q − α`.
    pub fn c_tilde(&self) -> f64 {
        self.beta / self.q - self.alpha
    }

    pub fn full_family(&self) -> Family {
        Family { a: 1.0, b: 1.0 / self.q }
    }

    pub fn tilde_family(&self) -> Family {
        Family { a: self.alpha, b: self.beta / self.q }
    }

    /// Marchenko–Pastur parameters of `ρ(·, t)`; requires `t > 0`.
    pub fn rho_spec(&self) -> Result<MpSpec> {
        MpSpec::from_family(self.full_family(), self.t)
    }

    /// Marchenko–Pastur parameters of `ρ̃(·, t)`; requires `t > 0`.
    pub fn rhot_spec(&self) -> Result<MpSpec> {
        MpSpec::from_family(self.tilde_family(), self.t)
    }

    /// `λ̄ = λ − (1 + 1/q) t`
    pub fn lambda_bar(&self, lam: f64) -> f64 {
        lam - (1.0 + 1.0 / self.q) * self.t
    }

    /// `μ̄ = μ − (α + β/q) t`
    pub fn mu_bar(&self, mu: f64) -> f64 {
        mu - (self.alpha + self.beta / self.q) * self.t
    }
}

/// Scale pair `(a, b)` of a Marchenko–Pastur family, independent of time.
///
/// The same pair fixes the coefficients of the characteristic equation:
/// `z_t = 1 − a t G`, `z_t' = z z_t − (b − a) t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Family {
    pub a: f64,
    pub b: f64,
}

impl Family {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid(format!("family scales must be positive (a = {a}, b = {b})")));
        }
        Ok(Self { a, b })
    }

    /// `b − a`: `c` for the full family and `c̃` for the truncated one.
    pub fn shift(&self) -> f64 {
        self.b - self.a
    }
}

/// A Marchenko–Pastur density at a fixed time.
///
/// The families built from [`ShapeRatios`] always have `b >= a`. For `b < a`
/// the law carries an atom of mass `1 − b/a` at zero that the density,
/// tail-mass and quantile routines do not represent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpSpec {
    pub a: f64,
    pub b: f64,
    pub t: f64,
}

impl MpSpec {
    pub fn new(a: f64, b: f64, t: f64) -> Result<Self> {
        Family::new(a, b)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("t = {t} must be positive")));
        }
        Ok(Self { a, b, t })
    }

    pub fn from_family(family: Family, t: f64) -> Result<Self> {
        Self::new(family.a, family.b, t)
    }

    pub fn family(&self) -> Family {
        Family { a: self.a, b: self.b }
    }

    pub fn edges(&self) -> (f64, f64) {
        mp_edges(self)
    }

    pub fn width(&self) -> f64 {
        let (lo, hi) = self.edges();
        hi - lo
    }
}

/// Initial spectra: eigenvalues of `AᵀA` and the non-zero block of `ÃᵀÃ`,
/// both in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumT0 {
    pub eigs: Vec<f64>,
    pub tilde_eigs: Vec<f64>,
}

impl SpectrumT0 {
    pub fn new(mut eigs: Vec<f64>, mut tilde_eigs: Vec<f64>) -> Result<Self> {
        for &x in eigs.iter().chain(&tilde_eigs) {
            if !(x >= 0.0) {
                return Err(invalid(format!("initial eigenvalue {x} is negative or NaN")));
            }
        }
        eigs.sort_by(|a, b| b.total_cmp(a));
        tilde_eigs.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigs, tilde_eigs })
    }
}

/// Boundary value of a Stieltjes transform on the real axis:
/// `G(λ − i0) = hilbert + iπ·density`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValue {
    pub hilbert: f64,
    pub density: f64,
}
