use num_complex::Complex64;

/// `(1/scale) Σ_j 1/(z − eigs[j])`; zero for an empty list.
pub fn empirical_stieltjes(eigs: &[f64], z: Complex64, scale: f64) -> Complex64 {
    if eigs.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let sum: Complex64 = eigs.iter().map(|&x| 1.0 / (z - x)).sum();
    sum / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_eigenvalue() {
        let g = empirical_stieltjes(&[1.0], Complex64::new(1.0, 1.0), 1.0);
        assert!((g - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn doubled_zero() {
        let g = empirical_stieltjes(&[0.0, 0.0], Complex64::new(2.0, 0.0), 2.0);
        assert!((g - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(empirical_stieltjes(&[], Complex64::new(1.0, 1.0), 3.0), Complex64::new(0.0, 0.0));
    }
}
