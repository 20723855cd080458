use faer::Mat;

use super::svd::SvdTriplet;
use super::Dims;

/// Overlap tables between truncated and full singular vectors.
///
/// `v[(i, j)] = ⟨ṽ_i, v_j⟩²` (`n × N`), `u[(i, j)] = ⟨ũ_i, u_j⟩²` (`m × M`),
/// `w[(i, j)] = ⟨ṽ_i, v_j⟩⟨ũ_i, u_j⟩` (`n × N`).
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTables {
    pub v: Mat<f64>,
    pub u: Mat<f64>,
    pub w: Mat<f64>,
}

/// Signed inner products `⟨ṽ_i, v_j⟩` (`n × N`) and `⟨ũ_i, u_j⟩` (`m × M`).
///
/// Truncated vectors with index below `n` (resp. `m`) vanish outside the
/// first `n` (resp. `m`) coordinates, so only those rows enter.
pub(crate) fn signed_overlaps(full: &SvdTriplet, trunc: &SvdTriplet, dims: &Dims) -> (Mat<f64>, Mat<f64>) {
    let Dims { sub_rows: m, sub_cols: n, .. } = *dims;
    let p = trunc.right.get(..n, ..n).transpose() * full.right.get(..n, ..);
    let q = trunc.left.get(..m, ..m).transpose() * full.left.get(..m, ..);
    (p, q)
}

pub fn overlap_matrices(full: &SvdTriplet, trunc: &SvdTriplet, dims: &Dims) -> OverlapTables {
    let (p, q) = signed_overlaps(full, trunc, dims);
    let v = Mat::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)] * p[(i, j)]);
    let u = Mat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * q[(i, j)]);
    let w = Mat::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)] * q[(i, j)]);
    OverlapTables { v, u, w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::matrix::{sample_ensemble, MatrixSpec};
    use crate::ensemble::svd::{svd_full, svd_truncated};

    #[test]
    fn rows_sum_to_one() {
        let dims = Dims::new(12, 9, 8, 5).unwrap();
        let (x, xt) = sample_ensemble(&MatrixSpec::zero(dims), 1.5, 2).unwrap();
        let t = overlap_matrices(&svd_full(&x).unwrap(), &svd_truncated(&xt, &dims).unwrap(), &dims);
        for i in 0..5 {
            let s: f64 = (0..9).map(|j| t.v[(i, j)]).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
        for i in 0..8 {
            let s: f64 = (0..12).map(|j| t.u[(i, j)]).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_truncation_gives_identity_pattern() {
        let dims = Dims::new(6, 4, 6, 4).unwrap();
        let (x, xt) = sample_ensemble(&MatrixSpec::zero(dims), 1.0, 4).unwrap();
        let t = overlap_matrices(&svd_full(&x).unwrap(), &svd_truncated(&xt, &dims).unwrap(), &dims);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((t.v[(i, j)] - target).abs() < 1e-10);
                assert!((t.w[(i, j)] - target).abs() < 1e-10);
            }
        }
    }
}
