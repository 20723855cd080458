//! Solver for the implicit characteristic equation
//!
//! ```text
//! G = G0(ζ) / (1 + a t G0(ζ)),   ζ = z_t z_t',
//! z_t = 1 − a t G,   z_t' = z z_t − (b − a) t,
//! ```
//!
//! which gives the Stieltjes transform at time `t` from the one at `t = 0`.
//! `(a, b) = (1, 1/q)` for the full matrix and `(α, β/q)` for the truncation.
//!
//! The physical root is tracked by continuation: first in `t` at a point far
//! from the real axis (where the equation is a contraction around `1/z`), then
//! in `Im z` down to the requested point.

use num_complex::Complex64;

use super::boundary::{plemelj_boundary, BoundaryOptions, EpsSchedule};
use super::{BoundaryValue, Family, ShapeRatios};
use crate::error::{Error, Result};

/// A Stieltjes transform at `t = 0`.
pub trait InitialStieltjes: Send + Sync {
    fn value(&self, z: Complex64) -> Complex64;
    fn derivative(&self, z: Complex64) -> Complex64;

    /// Distance from `z` to the nearest atom; infinite for smooth transforms.
    fn atom_distance(&self, _z: Complex64) -> f64 {
        f64::INFINITY
    }

    /// Upper bound on the support.
    fn support_bound(&self) -> f64;
}

/// `Σ_k w_k / (z − x_k)`: a finite spectrum with equal eigenvalues grouped.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpectrum {
    atoms: Vec<(f64, f64)>,
}

impl AtomSpectrum {
    /// Atoms from `(location, weight)` pairs; equal locations are merged.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Self { atoms: merged }
    }

    /// `(1/scale) Σ_j 1/(z − eigs[j])`.
    pub fn from_eigs(eigs: &[f64], scale: f64) -> Self {
        Self::new(eigs.iter().map(|&x| (x, 1.0 / scale)).collect())
    }

    /// `1/z`, the transform of `A ≡ 0`.
    pub fn point_mass_at_zero() -> Self {
        Self { atoms: vec![(0.0, 1.0)] }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

impl InitialStieltjes for AtomSpectrum {
    fn value(&self, z: Complex64) -> Complex64 {
        self.atoms.iter().map(|&(x, w)| w / (z - x)).sum()
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(x, w)| {
                let d = z - x;
                -w / (d * d)
            })
            .sum()
    }

    fn atom_distance(&self, z: Complex64) -> f64 {
        self.atoms.iter().map(|&(x, _)| (z - x).norm()).fold(f64::INFINITY, f64::min)
    }

    fn support_bound(&self) -> f64 {
        self.atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance, relative to `1 + |G|`.
    pub tol: f64,
    pub max_newton: usize,
    /// Number of equal steps in the `t` continuation before any halving.
    pub continuation_steps: usize,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_newton: 50, continuation_steps: 32, max_halvings: 12 }
    }
}

/// Implicit-equation solver for one Marchenko–Pastur-type family.
#[derive(Debug, Clone)]
pub struct ImplicitSolver<S> {
    g0: S,
    family: Family,
    opts: SolverOptions,
}

const POLE_GUARD: f64 = 1e-9;

impl<S: InitialStieltjes> ImplicitSolver<S> {
    pub fn new(g0: S, family: Family, opts: SolverOptions) -> Self {
        Self { g0, family, opts }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn initial(&self) -> &S {
        &self.g0
    }

    /// Rough spectral scale at time `t`, used to place continuation paths
    /// and to size extrapolation offsets.
    pub fn scale(&self, t: f64) -> f64 {
        let (a, b) = (self.family.a, self.family.b);
        let noise = (a.sqrt() + b.sqrt()).powi(2) * t;
        let s = self.g0.support_bound();
        (s.sqrt() + noise.sqrt()).powi(2) + noise + 1e-3
    }

    fn mapped_point(&self, z: Complex64, t: f64, g: Complex64) -> (Complex64, Complex64) {
        let at = self.family.a * t;
        let zt = 1.0 - at * g;
        let ztp = z * zt - self.family.shift() * t;
        (zt * ztp, -at * (2.0 * z * zt - self.family.shift() * t))
    }

    /// `G − G0(ζ)/(1 + a t G0(ζ))` and its derivative in `G`.
    fn residual_with_derivative(&self, z: Complex64, t: f64, g: Complex64) -> Result<(Complex64, Complex64)> {
        let (zeta, dzeta) = self.mapped_point(z, t, g);
        let dist = self.g0.atom_distance(zeta);
        if dist < POLE_GUARD * (1.0 + zeta.norm()) {
            return Err(Error::Pole { re: zeta.re, im: zeta.im, distance: dist });
        }
        let g0 = self.g0.value(zeta);
        let dg0 = self.g0.derivative(zeta);
        let denom = 1.0 + self.family.a * t * g0;
        let h = g0 / denom;
        let dh = dg0 / (denom * denom);
        let r = g - h;
        let dr = 1.0 - dh * dzeta;
        if !(r.re.is_finite() && r.im.is_finite() && dr.re.is_finite() && dr.im.is_finite()) {
            return Err(Error::SolverFailure { residual: f64::INFINITY });
        }
        Ok((r, dr))
    }

    /// Residual of the implicit equation at `G`.
    pub fn residual(&self, z: Complex64, t: f64, g: Complex64) -> Result<Complex64> {
        self.residual_with_derivative(z, t, g).map(|(r, _)| r)
    }

    fn newton(&self, z: Complex64, t: f64, start: Complex64) -> Result<Complex64> {
        let mut g = start;
        let (mut r, mut dr) = self.residual_with_derivative(z, t, g)?;
        for _ in 0..self.opts.max_newton {
            if r.norm() <= self.opts.tol * (1.0 + g.norm()) {
                return Ok(g);
            }
            let step = r / dr;
            let mut damping = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = g - step * damping;
                if let Ok((rt, drt)) = self.residual_with_derivative(z, t, trial) {
                    if rt.norm() < r.norm() {
                        g = trial;
                        r = rt;
                        dr = drt;
                        accepted = true;
                        break;
                    }
                }
                damping *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r.norm() <= self.opts.tol * (1.0 + g.norm()) {
            Ok(g)
        } else {
            Err(Error::SolverFailure { residual: r.norm() })
        }
    }

    fn herglotz(z: Complex64, g: Complex64) -> bool {
        z.im == 0.0 || g.im * z.im < 0.0
    }

    fn continue_in_t(&self, z: Complex64, t: f64) -> Result<Complex64> {
        let base = t / self.opts.continuation_steps as f64;
        let mut h = base;
        let mut s = 0.0;
        let mut g = self.g0.value(z);
        let mut halvings = 0;
        let mut last = f64::NAN;
        while s < t {
            let next = if t - s <= h * (1.0 + 1e-12) { t } else { s + h };
            match self.newton(z, next, g) {
                Ok(gn) if Self::herglotz(z, gn) => {
                    g = gn;
                    s = next;
                    h = (2.0 * h).min(base);
                }
                other => {
                    if let Err(Error::SolverFailure { residual }) = other {
                        last = residual;
                    }
                    halvings += 1;
                    if halvings > self.opts.max_halvings {
                        return Err(Error::SolverFailure { residual: last });
                    }
                    h *= 0.5;
                }
            }
        }
        Ok(g)
    }

    fn continue_in_im(&self, from: Complex64, to: Complex64, t: f64, mut g: Complex64) -> Result<Complex64> {
        const MAX_RATIO: f64 = 2.0;
        let mut y = from.im;
        let mut ratio = MAX_RATIO;
        let mut halvings = 0;
        let mut last = f64::NAN;
        while y != to.im {
            let next = if (y / ratio).abs() <= to.im.abs() { to.im } else { y / ratio };
            let z = Complex64::new(to.re, next);
            match self.newton(z, t, g) {
                Ok(gn) if Self::herglotz(z, gn) => {
                    g = gn;
                    y = next;
                    ratio = (ratio * ratio).min(MAX_RATIO);
                }
                other => {
                    if let Err(Error::SolverFailure { residual }) = other {
                        last = residual;
                    }
                    halvings += 1;
                    if halvings > 4 * self.opts.max_halvings {
                        return Err(Error::SolverFailure { residual: last });
                    }
                    ratio = ratio.sqrt();
                }
            }
        }
        Ok(g)
    }

    /// `G(z, t)` on the physical branch; requires `Im z ≠ 0` when `t > 0`.
    pub fn solve(&self, z: Complex64, t: f64) -> Result<Complex64> {
        if t == 0.0 {
            return Ok(self.g0.value(z));
        }
        if z.im == 0.0 {
            return Err(Error::Domain(format!("implicit solve needs Im z != 0 (z = {z})")));
        }
        let far = self.scale(t);
        if z.im.abs() >= far {
            return self.continue_in_t(z, t);
        }
        let start = Complex64::new(z.re, far.copysign(z.im));
        let g = self.continue_in_t(start, t)?;
        self.continue_in_im(start, z, t, g)
    }

    /// Boundary value `G(λ − i0, t)`.
    ///
    /// The extrapolated estimate is refined by Newton's method on the real
    /// axis, which converges to the boundary value of the physical branch.
    pub fn boundary_value(&self, lam: f64, t: f64) -> Result<BoundaryValue> {
        let g = self.boundary_complex(lam, t)?;
        Ok(BoundaryValue { hilbert: g.re, density: (g.im / std::f64::consts::PI).max(0.0) })
    }

    pub(crate) fn boundary_complex(&self, lam: f64, t: f64) -> Result<Complex64> {
        if t == 0.0 {
            return Err(Error::Domain("boundary value at t = 0 is a sum of atoms".into()));
        }
        let scale = self.scale(t);
        let z = Complex64::new(lam, 0.0);
        let schedule = EpsSchedule::relative(&[1e-4, 5e-5, 2.5e-5, 1.25e-5], scale)?;
        let rough = plemelj_boundary(
            |w, s| self.solve(w, s),
            lam,
            t,
            &schedule,
            &BoundaryOptions { tol: 1e-5, ..BoundaryOptions::default() },
        )
        .map(|bv| Complex64::new(bv.hilbert, std::f64::consts::PI * bv.density));
        let polish = |start: Complex64| -> Result<Complex64> {
            let g = self.newton(z, t, start)?;
            if g.im >= -1e-12 * (1.0 + g.norm()) && (g - start).norm() < 1e-3 * (1.0 + g.norm()) {
                Ok(Complex64::new(g.re, g.im.max(0.0)))
            } else {
                Err(Error::BranchAmbiguity { re: g.re, im: g.im })
            }
        };
        if let Ok(g) = rough.and_then(&polish) {
            return Ok(g);
        }
        polish(self.solve(Complex64::new(lam, -1e-10 * scale), t)?)
    }

    /// `G(0, t) = −∫ ρ(λ)/λ dλ` for a spectrum bounded away from the origin.
    pub fn at_origin(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(self.g0.value(Complex64::new(0.0, 0.0)).re);
        }
        let g = self.boundary_complex(0.0, t)?;
        if g.im > 1e-8 * (1.0 + g.norm()) {
            return Err(Error::Domain("origin lies inside the spectral support".into()));
        }
        Ok(g.re)
    }
}

/// `G(z, t)` for the full matrix, from its `t = 0` transform.
pub fn solve_implicit_g<S: InitialStieltjes + Clone>(
    g0: &S,
    z: Complex64,
    r: &ShapeRatios,
    opts: &SolverOptions,
) -> Result<Complex64> {
    ImplicitSolver::new(g0.clone(), r.full_family(), *opts).solve(z, r.t)
}

/// `G̃(z̃, t)` for the truncated matrix, from its `t = 0` transform.
pub fn solve_implicit_gtilde<S: InitialStieltjes + Clone>(
    g0: &S,
    z: Complex64,
    r: &ShapeRatios,
    opts: &SolverOptions,
) -> Result<Complex64> {
    ImplicitSolver::new(g0.clone(), r.tilde_family(), *opts).solve(z, r.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{mp_stieltjes, MpSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn atoms_merge() {
        let s = AtomSpectrum::from_eigs(&[1.0, 2.0, 1.0], 3.0);
        assert_eq!(s.atoms().len(), 2);
        assert!((s.total_weight() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_time_returns_initial() {
        let r = ShapeRatios::new(0.9, 0.4, 0.8, 0.0).unwrap();
        let g0 = AtomSpectrum::from_eigs(&[1.0, 3.0], 2.0);
        let z = c(0.3, 0.7);
        let g = solve_implicit_g(&g0, z, &r, &SolverOptions::default()).unwrap();
        assert_eq!(g, g0.value(z));
    }

    #[test]
    fn null_initial_matches_closed_form() {
        let r = ShapeRatios::new(0.9, 0.4, 0.8, 3.0).unwrap();
        let g0 = AtomSpectrum::point_mass_at_zero();
        let full = MpSpec::from_family(r.full_family(), r.t).unwrap();
        let tilde = MpSpec::from_family(r.tilde_family(), r.t).unwrap();
        for z in [c(5.0, 1.0), c(5.0, -1e-3), c(-2.0, 0.5), c(0.01, -0.01), c(15.0, -2.0)] {
            let g = solve_implicit_g(&g0, z, &r, &SolverOptions::default()).unwrap();
            assert!((g - mp_stieltjes(&full, z).unwrap()).norm() < 1e-10, "{z}: {g}");
            let gt = solve_implicit_gtilde(&g0, z, &r, &SolverOptions::default()).unwrap();
            assert!((gt - mp_stieltjes(&tilde, z).unwrap()).norm() < 1e-10, "{z}: {gt}");
        }
    }

    #[test]
    fn boundary_value_polished_to_closed_form() {
        let r = ShapeRatios::new(0.9, 0.4, 0.8, 3.0).unwrap();
        let solver = ImplicitSolver::new(AtomSpectrum::point_mass_at_zero(), r.full_family(), SolverOptions::default());
        let spec = MpSpec::from_family(r.full_family(), r.t).unwrap();
        for lam in [0.5, 3.0, 6.0, 12.0, 14.0] {
            let bv = solver.boundary_value(lam, r.t).unwrap();
            let expect_v = crate::spectral::mp_hilbert(&spec, lam).unwrap();
            let expect_rho = crate::spectral::mp_density(&spec, lam);
            if expect_rho > 0.0 {
                assert!((bv.hilbert - expect_v).abs() < 1e-10, "{lam}");
            }
            assert!((bv.density - expect_rho).abs() < 1e-10, "{lam}: {bv:?}");
        }
    }

    #[test]
    fn origin_value_for_null_initial() {
        // G(0, t) = −1/(c t) for the full family
        let r = ShapeRatios::new(0.9, 0.4, 0.8, 3.0).unwrap();
        let solver = ImplicitSolver::new(AtomSpectrum::point_mass_at_zero(), r.full_family(), SolverOptions::default());
        let g = solver.at_origin(r.t).unwrap();
        assert!((g + 1.0 / (r.c() * r.t)).abs() < 1e-10, "{g}");
    }

    #[test]
    fn atom_spectrum_residual_small() {
        let r = ShapeRatios::new(0.5, 1.0, 1.0, 1.0).unwrap();
        let g0 = AtomSpectrum::from_eigs(&[1.0; 8], 8.0);
        let solver = ImplicitSolver::new(g0, r.full_family(), SolverOptions::default());
        for z in [c(1.0, 0.5), c(3.0, -0.5), c(0.2, 2.0), c(6.0, -0.01)] {
            let g = solver.solve(z, r.t).unwrap();
            assert!(solver.residual(z, r.t, g).unwrap().norm() <= 1e-10);
            assert!(g.im * z.im < 0.0);
        }
    }
}
