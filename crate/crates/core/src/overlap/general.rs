//! Overlap limits for a general initial matrix.
//!
//! The boundary values `G(λ − i0)` and `G̃(μ ∓ i0)` from the implicit solvers
//! are pushed through the characteristic map, the `t = 0` resolvents and the
//! propagation formulas, giving the `ε → 0` limit of the inversion formulas
//! in closed form.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::characteristic::characteristic_map;
use super::closed_form::{require_null_spaces, KernelOverlaps, OverlapTriple};
use super::inversion::{BulkGuard, ResolventEvaluator};
use super::resolvent::{
    initial_resolvents_from_a, propagate_resolvents, InitialOverlapTables, InitialResolvents, Propagated,
};
use crate::ensemble::Dims;
use crate::error::{invalid, Error, Result};
use crate::spectral::{AtomSpectrum, BoundaryValue, ImplicitSolver, ShapeRatios, SolverOptions};

const SCAN_POINTS: usize = 1201;

/// Boundary density sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct DensityScan {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityScan {
    pub fn peak(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Upper-tail mass from the trapezoid rule, normalised to the scanned
    /// total.
    fn tail(&self) -> Vec<f64> {
        let n = self.grid.len();
        let mut tail = vec![0.0; n];
        for k in (0..n - 1).rev() {
            let h = self.grid[k + 1] - self.grid[k];
            tail[k] = tail[k + 1] + 0.5 * h * (self.density[k] + self.density[k + 1]);
        }
        let total = tail[0];
        if total > 0.0 {
            tail.iter_mut().for_each(|x| *x /= total);
        }
        tail
    }

    /// `λ` with upper-tail mass `x`, by linear interpolation of the scanned
    /// cumulative mass.
    pub fn quantile(&self, x: f64) -> f64 {
        let tail = self.tail();
        let x = x.clamp(0.0, 1.0);
        // tail is non-increasing
        let k = tail.partition_point(|&m| m > x);
        if k == 0 {
            return self.grid[0];
        }
        if k >= tail.len() {
            return *self.grid.last().expect("non-empty grid");
        }
        let (m0, m1) = (tail[k - 1], tail[k]);
        let s = if m0 > m1 { (m0 - x) / (m0 - m1) } else { 0.0 };
        self.grid[k - 1] + s * (self.grid[k] - self.grid[k - 1])
    }

    /// Upper-tail mass at `lam`.
    pub fn tail_mass(&self, lam: f64) -> f64 {
        let tail = self.tail();
        let k = self.grid.partition_point(|&g| g <= lam);
        if k == 0 {
            return 1.0;
        }
        if k >= self.grid.len() {
            return 0.0;
        }
        let s = (lam - self.grid[k - 1]) / (self.grid[k] - self.grid[k - 1]);
        tail[k - 1] + s * (tail[k] - tail[k - 1])
    }
}

/// Everything needed to evaluate overlap limits at one time `t`.
#[derive(Debug)]
pub struct GeneralModel {
    ratios: ShapeRatios,
    initial: InitialResolvents,
    full: ImplicitSolver<AtomSpectrum>,
    tilde: ImplicitSolver<AtomSpectrum>,
    guard_fraction: f64,
    scans: OnceLock<std::result::Result<(DensityScan, DensityScan), String>>,
}

impl GeneralModel {
    pub fn new(ratios: ShapeRatios, initial: InitialResolvents, opts: SolverOptions) -> Result<Self> {
        if !(ratios.t > 0.0) {
            return Err(invalid("overlap limits need t > 0"));
        }
        let full = ImplicitSolver::new(initial.g0(), ratios.full_family(), opts);
        let tilde = ImplicitSolver::new(initial.g0_tilde(), ratios.tilde_family(), opts);
        Ok(Self { ratios, initial, full, tilde, guard_fraction: BulkGuard::DEFAULT_FRACTION, scans: OnceLock::new() })
    }

    /// `A ≡ 0` through the general machinery.
    pub fn null(ratios: ShapeRatios) -> Result<Self> {
        Self::new(ratios, InitialResolvents::null(&ratios), SolverOptions::default())
    }

    pub fn from_tables(ratios: ShapeRatios, tables: &InitialOverlapTables) -> Result<Self> {
        let initial = initial_resolvents_from_a(tables, &ratios, &tables.dims)?;
        Self::new(ratios, initial, SolverOptions::default())
    }

    pub fn with_guard_fraction(mut self, fraction: f64) -> Self {
        self.guard_fraction = fraction;
        self
    }

    pub fn full_solver(&self) -> &ImplicitSolver<AtomSpectrum> {
        &self.full
    }

    pub fn tilde_solver(&self) -> &ImplicitSolver<AtomSpectrum> {
        &self.tilde
    }

    pub fn boundary(&self, lam: f64) -> Result<BoundaryValue> {
        self.full.boundary_value(lam, self.ratios.t)
    }

    pub fn boundary_tilde(&self, mu: f64) -> Result<BoundaryValue> {
        self.tilde.boundary_value(mu, self.ratios.t)
    }

    fn scan_one(solver: &ImplicitSolver<AtomSpectrum>, t: f64) -> DensityScan {
        let upper = solver.scale(t);
        let grid: Vec<f64> = (0..SCAN_POINTS).map(|k| upper * k as f64 / (SCAN_POINTS - 1) as f64).collect();
        let density = grid.iter().map(|&x| solver.boundary_value(x, t).map(|b| b.density).unwrap_or(0.0)).collect();
        DensityScan { grid, density }
    }

    /// Scanned densities `(ρ, ρ̃)`, computed once.
    pub fn scans(&self) -> Result<&(DensityScan, DensityScan)> {
        self.scans
            .get_or_init(|| {
                let t = self.ratios.t;
                let pair = (Self::scan_one(&self.full, t), Self::scan_one(&self.tilde, t));
                if pair.0.peak() > 0.0 && pair.1.peak() > 0.0 {
                    Ok(pair)
                } else {
                    Err("density scan found no support".to_string())
                }
            })
            .as_ref()
            .map_err(|e| Error::Quadrature(e.clone()))
    }

    pub fn bulk_guard(&self) -> Result<BulkGuard> {
        let (a, b) = self.scans()?;
        Ok(BulkGuard::fraction_of_peak(self.guard_fraction, a.peak(), b.peak()))
    }

    /// `λ(x, t)` for `ρ`.
    pub fn quantile(&self, x: f64) -> Result<f64> {
        Ok(self.scans()?.0.quantile(x))
    }

    /// `μ(x, t)` for `ρ̃`.
    pub fn quantile_tilde(&self, x: f64) -> Result<f64> {
        Ok(self.scans()?.1.quantile(x))
    }

    fn propagate_at(&self, g: Complex64, gt: Complex64, z: Complex64, zt: Complex64) -> Result<Propagated> {
        let cp = characteristic_map(g, gt, z, zt, &self.ratios);
        let s0 = self.initial.eval(cp.zeta(), cp.zeta_tilde())?;
        propagate_resolvents(&s0, &cp, self.ratios.t)
    }

    /// `(V̄, Ū, W̄)` at bulk point `(μ, λ)`.
    pub fn overlap_triple(&self, mu: f64, lam: f64) -> Result<OverlapTriple> {
        let bv = self.boundary(lam)?;
        let bvt = self.boundary_tilde(mu)?;
        self.bulk_guard()?.check(bv.density, bvt.density)?;
        self.overlap_triple_from_boundary(mu, lam, &bv, &bvt)
    }

    /// As [`overlap_triple`](Self::overlap_triple) with known boundary values
    /// and no bulk guard.
    pub fn overlap_triple_from_boundary(
        &self,
        mu: f64,
        lam: f64,
        bv: &BoundaryValue,
        bvt: &BoundaryValue,
    ) -> Result<OverlapTriple> {
        let (z, zt) = (Complex64::new(lam, 0.0), Complex64::new(mu, 0.0));
        let minus = self.propagate_at(bv.below(), bvt.below(), z, zt)?;
        let plus = self.propagate_at(bv.below(), bvt.above(), z, zt)?;
        let norm = 2.0 * PI * PI * self.ratios.alpha * bv.density * bvt.density;
        Ok(OverlapTriple {
            vbar: (plus.sv - minus.sv).re / norm,
            ubar: (plus.su_scaled - minus.su_scaled).re / (mu * lam * norm),
            wbar: (plus.sw - minus.sw).re / ((mu * lam).sqrt() * norm),
        })
    }

    /// `G(0, t)` and `G̃(0, t)`.
    pub fn origin_values(&self) -> Result<(f64, f64)> {
        Ok((self.full.at_origin(self.ratios.t)?, self.tilde.at_origin(self.ratios.t)?))
    }

    /// `Ū(0, λ)`, `Ū(μ, 0)` and `Ū(0, 0)`.
    pub fn kernel_overlaps(&self, mu: f64, lam: f64) -> Result<KernelOverlaps> {
        require_null_spaces(&self.ratios)?;
        let r = &self.ratios;
        let (g_origin, gt_origin) = self.origin_values()?;
        let (go, gto) = (Complex64::new(g_origin, 0.0), Complex64::new(gt_origin, 0.0));
        let zero = Complex64::new(0.0, 0.0);
        let bv = self.boundary(lam)?;
        let bvt = self.boundary_tilde(mu)?;
        let guard = self.bulk_guard()?;
        guard.check(bv.density, guard.rhot_min * 2.0 + 1.0)?;
        guard.check(guard.rho_min * 2.0 + 1.0, bvt.density)?;

        let p1 = self.propagate_at(bv.below(), gto, Complex64::new(lam, 0.0), zero)?;
        let u1 = (p1.su_scaled / lam).im / (PI * r.c_tilde() * bv.density);
        let p2 = self.propagate_at(go, bvt.below(), zero, Complex64::new(mu, 0.0))?;
        let u2 = (p2.su_scaled / mu).im / (PI * r.alpha * r.c() * bvt.density);
        let p3 = self.propagate_at(go, gto, zero, zero)?;
        let u3 = p3.su_scaled.re / (r.c() * r.c_tilde());
        Ok(KernelOverlaps { u1_of_lambda: u1, u2_of_mu: u2, u3 })
    }
}

impl ResolventEvaluator for GeneralModel {
    fn ratios(&self) -> &ShapeRatios {
        &self.ratios
    }

    fn resolvents(&self, z: Complex64, ztilde: Complex64) -> Result<Propagated> {
        let g = self.full.solve(z, self.ratios.t)?;
        let gt = self.tilde.solve(ztilde, self.ratios.t)?;
        self.propagate_at(g, gt, z, ztilde)
    }
}

/// `(V̄, Ū, W̄)` at `(μ, λ)` and time `t` for the initial matrix described by
/// `tables`.
pub fn general_overlap_triple(
    tables: &InitialOverlapTables,
    r: &ShapeRatios,
    dims: &Dims,
    mu: f64,
    lam: f64,
    t: f64,
) -> Result<OverlapTriple> {
    let r = r.with_time(t)?;
    let initial = initial_resolvents_from_a(tables, &r, dims)?;
    GeneralModel::new(r, initial, SolverOptions::default())?.overlap_triple(mu, lam)
}

/// Null-space overlaps at time `t` for the initial matrix described by
/// `tables`.
pub fn general_kernel_overlaps(
    tables: &InitialOverlapTables,
    r: &ShapeRatios,
    dims: &Dims,
    mu: f64,
    lam: f64,
    t: f64,
) -> Result<KernelOverlaps> {
    let r = r.with_time(t)?;
    let initial = initial_resolvents_from_a(tables, &r, dims)?;
    GeneralModel::new(r, initial, SolverOptions::default())?.kernel_overlaps(mu, lam)
}
