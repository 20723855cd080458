//! Double Stieltjes transforms of the overlap tables
//!
//! ```text
//! S_V(z, z̃) = (1/N) Σ_{i≤n, j≤N} V_ij / ((z̃ − μ_i)(z − λ_j))
//! S_U(z, z̃) = (1/N) Σ_{i≤m, j≤M} U_ij / ((z̃ − μ_i)(z − λ_j))
//! S_W(z, z̃) = (1/N) Σ_{i≤n, j≤N} √(μ_i λ_j) W_ij / ((z̃ − μ_i)(z − λ_j))
//! ```
//!
//! (with `μ_i = 0` for `i > n` and `λ_j = 0` for `j > N`), at `t = 0` and
//! their propagation to time `t` along characteristics.

use faer::Mat;
use num_complex::Complex64;

use super::characteristic::CharacteristicPoint;
use crate::ensemble::matrix::truncate;
use crate::ensemble::overlaps::overlap_matrices;
use crate::ensemble::svd::{svd_full, svd_truncated_lenient};
use crate::ensemble::{Dims, MatrixSpec};
use crate::error::{Error, Result};
use crate::spectral::{AtomSpectrum, ShapeRatios};

const POLE_GUARD: f64 = 1e-9;

/// Values `(S_V, S_U, S_W)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventValues {
    pub sv: Complex64,
    pub su: Complex64,
    pub sw: Complex64,
}

/// Propagated resolvents; `S_U` is stored multiplied by `z z̃` so that it
/// stays finite as either argument approaches the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagated {
    pub sv: Complex64,
    pub su_scaled: Complex64,
    pub sw: Complex64,
}

impl Propagated {
    pub fn su(&self, z: Complex64, ztilde: Complex64) -> Complex64 {
        self.su_scaled / (z * ztilde)
    }

    pub fn values(&self, z: Complex64, ztilde: Complex64) -> ResolventValues {
        ResolventValues { sv: self.sv, su: self.su(z, ztilde), sw: self.sw }
    }
}

/// Initial spectra and overlap tables between singular vectors of `A` and of
/// its truncation `Ã`.
///
/// `v0` is `n × N`, `u0` is `m × M`, `w0` is `n × N` and holds the signed
/// products `⟨ṽ_i, v_j⟩⟨ũ_i, u_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialOverlapTables {
    pub lam0: Vec<f64>,
    pub mu0: Vec<f64>,
    pub v0: Mat<f64>,
    pub u0: Mat<f64>,
    pub w0: Mat<f64>,
    pub dims: Dims,
}

impl InitialOverlapTables {
    pub fn from_matrix(a: &Mat<f64>, dims: Dims) -> Result<Self> {
        let found = (a.nrows(), a.ncols());
        if found != (dims.rows, dims.cols) {
            return Err(Error::ShapeMismatch { expected: (dims.rows, dims.cols), found });
        }
        let full = svd_full(a)?;
        let trunc = svd_truncated_lenient(&truncate(a, &dims), &dims)?;
        let tables = overlap_matrices(&full, &trunc, &dims);
        Ok(Self {
            lam0: full.svals.iter().map(|s| s * s).collect(),
            mu0: trunc.svals[..dims.sub_cols].iter().map(|s| s * s).collect(),
            v0: tables.v,
            u0: tables.u,
            w0: tables.w,
            dims,
        })
    }

    pub fn from_spec(spec: &MatrixSpec) -> Result<Self> {
        Self::from_matrix(&spec.to_mat(), spec.dims)
    }
}

/// `S⁰` evaluator over finite tables, with the zero-eigenvalue rows and
/// columns of `U` aggregated.
#[derive(Debug, Clone, PartialEq)]
pub struct TableResolvents {
    lam: Vec<f64>,
    mu: Vec<f64>,
    lam_ext: Vec<f64>,
    mu_ext: Vec<f64>,
    v: Mat<f64>,
    u: Mat<f64>,
    w: Mat<f64>,
    scale: f64,
}

impl TableResolvents {
    pub fn new(t: &InitialOverlapTables) -> Result<Self> {
        let Dims { rows: big_m, cols: big_n, sub_rows: m, sub_cols: n } = t.dims;
        let shapes = [
            ((t.v0.nrows(), t.v0.ncols()), (n, big_n)),
            ((t.w0.nrows(), t.w0.ncols()), (n, big_n)),
            ((t.u0.nrows(), t.u0.ncols()), (m, big_m)),
            ((t.mu0.len(), t.lam0.len()), (n, big_n)),
        ];
        for (found, expected) in shapes {
            if found != expected {
                return Err(Error::ShapeMismatch { expected, found });
            }
        }
        let extra_row = usize::from(m > n);
        let extra_col = usize::from(big_m > big_n);
        let mut u = Mat::zeros(n + extra_row, big_n + extra_col);
        for i in 0..m {
            for j in 0..big_m {
                u[(i.min(n), j.min(big_n))] += t.u0[(i, j)];
            }
        }
        let w = Mat::from_fn(n, big_n, |i, j| (t.mu0[i] * t.lam0[j]).sqrt() * t.w0[(i, j)]);
        let mut lam_ext = t.lam0.clone();
        lam_ext.resize(big_n + extra_col, 0.0);
        let mut mu_ext = t.mu0.clone();
        mu_ext.resize(n + extra_row, 0.0);
        Ok(Self { lam: t.lam0.clone(), mu: t.mu0.clone(), lam_ext, mu_ext, v: t.v0.clone(), u, w, scale: big_n as f64 })
    }

    fn kernels(points: &[f64], z: Complex64) -> Result<Vec<Complex64>> {
        points
            .iter()
            .map(|&x| {
                let d = z - x;
                if d.norm() < POLE_GUARD * (1.0 + x.abs()) {
                    Err(Error::Pole { re: z.re, im: z.im, distance: d.norm() })
                } else {
                    Ok(1.0 / d)
                }
            })
            .collect()
    }

    fn bilinear(table: &Mat<f64>, left: &[Complex64], right: &[Complex64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (i, &a) in left.iter().enumerate() {
            let mut row = Complex64::new(0.0, 0.0);
            for (j, &b) in right.iter().enumerate() {
                row += b * table[(i, j)];
            }
            total += a * row;
        }
        total
    }

    pub fn eval(&self, z: Complex64, ztilde: Complex64) -> Result<ResolventValues> {
        let kz = Self::kernels(&self.lam_ext, z)?;
        let kzt = Self::kernels(&self.mu_ext, ztilde)?;
        let (n, big_n) = (self.mu.len(), self.lam.len());
        Ok(ResolventValues {
            sv: Self::bilinear(&self.v, &kzt[..n], &kz[..big_n]) / self.scale,
            su: Self::bilinear(&self.u, &kzt, &kz) / self.scale,
            sw: Self::bilinear(&self.w, &kzt[..n], &kz[..big_n]) / self.scale,
        })
    }
}

/// The resolvents at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialResolvents {
    /// `A ≡ 0`: `S_V = α/(z z̃)`, `S_U = β/(q z z̃)`, `S_W = 0`.
    Null {
        alpha: f64,
        beta_over_q: f64,
    },
    Tables(Box<TableResolvents>),
}

impl InitialResolvents {
    pub fn null(r: &ShapeRatios) -> Self {
        Self::Null { alpha: r.alpha, beta_over_q: r.beta / r.q }
    }

    pub fn eval(&self, z: Complex64, ztilde: Complex64) -> Result<ResolventValues> {
        match self {
            Self::Null { alpha, beta_over_q } => {
                for p in [z, ztilde] {
                    if p.norm() < POLE_GUARD {
                        return Err(Error::Pole { re: p.re, im: p.im, distance: p.norm() });
                    }
                }
                let inv = 1.0 / (z * ztilde);
                Ok(ResolventValues { sv: inv * *alpha, su: inv * *beta_over_q, sw: Complex64::new(0.0, 0.0) })
            }
            Self::Tables(t) => t.eval(z, ztilde),
        }
    }

    /// `G(z, 0)` for the full matrix.
    pub fn g0(&self) -> AtomSpectrum {
        match self {
            Self::Null { .. } => AtomSpectrum::point_mass_at_zero(),
            Self::Tables(t) => AtomSpectrum::from_eigs(&t.lam, t.lam.len() as f64),
        }
    }

    /// `G̃(z̃, 0)` for the non-zero block of the truncation.
    pub fn g0_tilde(&self) -> AtomSpectrum {
        match self {
            Self::Null { .. } => AtomSpectrum::point_mass_at_zero(),
            Self::Tables(t) => AtomSpectrum::from_eigs(&t.mu, t.mu.len() as f64),
        }
    }
}

/// `t = 0` resolvents for an initial matrix described by `tables`.
///
/// Zero-eigenvalue rows and columns enter as atoms at the origin.
pub fn initial_resolvents_from_a(
    tables: &InitialOverlapTables,
    r: &ShapeRatios,
    dims: &Dims,
) -> Result<InitialResolvents> {
    if tables.dims != *dims {
        return Err(Error::ShapeMismatch {
            expected: (dims.rows, dims.cols),
            found: (tables.dims.rows, tables.dims.cols),
        });
    }
    let realised = dims.ratios(r.t)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    if !(close(realised.q, r.q) && close(realised.alpha, r.alpha) && close(realised.beta, r.beta)) {
        return Err(crate::error::invalid(format!("ratios {r:?} differ from those realised by {dims:?}")));
    }
    Ok(InitialResolvents::Tables(Box::new(TableResolvents::new(tables)?)))
}

/// Values at time `t` from the `t = 0` values `s0` evaluated at the mapped
/// point `(z_t z_t', z̃_t z̃_t')`.
///
/// With `w = z_t z_t' z̃_t z̃_t'` and `D = (1 − tS_W⁰)² − w S_V⁰ S_U⁰ t²`:
/// `S_V = z_t z̃_t S_V⁰ / D`, `z z̃ S_U = z_t' z̃_t' S_U⁰ / D`,
/// `S_W = (S_W⁰(1 − tS_W⁰) + w S_V⁰ S_U⁰ t) / D`.
pub fn propagate_resolvents(s0: &ResolventValues, cp: &CharacteristicPoint, t: f64) -> Result<Propagated> {
    let w = cp.zeta() * cp.zeta_tilde();
    let one_minus = 1.0 - t * s0.sw;
    let first = one_minus * one_minus;
    let coupling = w * s0.sv * s0.su;
    let second = coupling * t * t;
    let d = first - second;
    if d.norm() < 1e-12 * (1.0 + first.norm() + second.norm()) {
        return Err(Error::NearSingular(d.norm()));
    }
    Ok(Propagated {
        sv: cp.zt * cp.zttilde * s0.sv / d,
        su_scaled: cp.ztp * cp.zttildep * s0.su / d,
        sw: (s0.sw * one_minus + coupling * t) / d,
    })
}
