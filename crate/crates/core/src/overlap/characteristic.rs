use num_complex::Complex64;

use crate::spectral::{BoundaryValue, ShapeRatios};

/// Images of `(z, z̃)` under the characteristic flow at time `t`:
/// `z_t = 1 − tG`, `z_t' = z z_t − (1/q − 1)t`, `z̃_t = 1 − αtG̃`,
/// `z̃_t' = z̃ z̃_t − (β/q − α)t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicPoint {
    pub zt: Complex64,
    pub ztp: Complex64,
    pub zttilde: Complex64,
    pub zttildep: Complex64,
}

impl CharacteristicPoint {
    /// `z_t z_t'`, where the `t = 0` transforms are evaluated.
    pub fn zeta(&self) -> Complex64 {
        self.zt * self.ztp
    }

    pub fn zeta_tilde(&self) -> Complex64 {
        self.zttilde * self.zttildep
    }
}

/// Characteristic point from Stieltjes values `G(z, t)` and `G̃(z̃, t)`.
///
/// With boundary values (`G → v + iπρ` at `z = λ`, see
/// [`BoundaryValue::below`]) this yields the real-axis variables
/// `y_t = 1 − tv − iπtρ`, `y_t' = λ y_t − (1/q − 1)t` and their tilde
/// analogues.
pub fn characteristic_map(
    g: Complex64,
    gt: Complex64,
    z: Complex64,
    ztilde: Complex64,
    r: &ShapeRatios,
) -> CharacteristicPoint {
    let t = r.t;
    let zt = 1.0 - t * g;
    let zttilde = 1.0 - r.alpha * t * gt;
    CharacteristicPoint { zt, ztp: z * zt - r.c() * t, zttilde, zttildep: ztilde * zttilde - r.c_tilde() * t }
}

impl BoundaryValue {
    /// `G(λ − i0) = v + iπρ`.
    pub fn below(&self) -> Complex64 {
        Complex64::new(self.hilbert, std::f64::consts::PI * self.density)
    }

    /// `G(λ + i0) = v − iπρ`.
    pub fn above(&self) -> Complex64 {
        self.below().conj()
    }
}
