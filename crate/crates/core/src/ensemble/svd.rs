//! Singular value decompositions with complete frames and a reproducible
//! sign convention.
//!
//! For the truncated matrix the zero singular values are given a fixed basis:
//! left vectors `m+1..M` are `e_{m+1}..e_M`, right vectors `n+1..N` are
//! `e_{n+1}..e_N`, and left vectors `n+1..m` complete the block's column space
//! inside the first `m` coordinates.

use faer::Mat;

use super::Dims;
use crate::error::{Error, Result};

/// `X = left · diag(svals) · rightᵀ` with square orthogonal `left` and `right`.
///
/// `svals` has `min(rows, cols)` entries in descending order; column `k` of
/// `left` and of `right` are paired for `k < svals.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriplet {
    pub left: Mat<f64>,
    pub svals: Vec<f64>,
    pub right: Mat<f64>,
}

const SIGN_THRESHOLD: f64 = 1e-10;

fn first_significant(m: &Mat<f64>, col: usize) -> f64 {
    (0..m.nrows()).map(|i| m[(i, col)]).find(|x| x.abs() > SIGN_THRESHOLD).unwrap_or(0.0)
}

fn negate_col(m: &mut Mat<f64>, col: usize) {
    for i in 0..m.nrows() {
        m[(i, col)] = -m[(i, col)];
    }
}

/// Makes the first significant component of each right vector positive,
/// flipping its left partner with it; unpaired left vectors follow their own
/// first significant component.
pub(crate) fn canonicalize(left: &mut Mat<f64>, right: &mut Mat<f64>, pairs: usize) {
    for k in 0..pairs {
        if first_significant(right, k) < 0.0 {
            negate_col(right, k);
            negate_col(left, k);
        }
    }
    for k in pairs..left.ncols() {
        if first_significant(left, k) < 0.0 {
            negate_col(left, k);
        }
    }
    for k in pairs..right.ncols() {
        if first_significant(right, k) < 0.0 {
            negate_col(right, k);
        }
    }
}

fn full_svd(x: &Mat<f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = x.svd().map_err(|e| Error::LinAlg(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let svals = (0..s.nrows()).map(|k| s[k]).collect();
    Ok((svd.U().to_owned(), svals, svd.V().to_owned()))
}

/// Full SVD of `x`, canonicalized.
pub fn svd_full(x: &Mat<f64>) -> Result<SvdTriplet> {
    let (mut left, svals, mut right) = full_svd(x)?;
    let pairs = svals.len();
    canonicalize(&mut left, &mut right, pairs);
    Ok(SvdTriplet { left, svals, right })
}

/// SVD of the truncated matrix with the fixed null-space basis.
///
/// Fails with [`Error::DegenerateSample`] when the `m × n` block is rank
/// deficient (smallest singular value `≤ 1e−12 ·` largest).
pub fn svd_truncated(xt: &Mat<f64>, dims: &Dims) -> Result<SvdTriplet> {
    truncated_svd_impl(xt, dims, true)
}

/// As [`svd_truncated`], accepting rank-deficient blocks.
pub(crate) fn svd_truncated_lenient(xt: &Mat<f64>, dims: &Dims) -> Result<SvdTriplet> {
    truncated_svd_impl(xt, dims, false)
}

fn truncated_svd_impl(xt: &Mat<f64>, dims: &Dims, strict: bool) -> Result<SvdTriplet> {
    let found = (xt.nrows(), xt.ncols());
    if found != (dims.rows, dims.cols) {
        return Err(Error::ShapeMismatch { expected: (dims.rows, dims.cols), found });
    }
    let Dims { rows, cols, sub_rows: m, sub_cols: n } = *dims;
    let block = xt.get(..m, ..n).to_owned();
    let (ub, svals, vb) = full_svd(&block)?;
    if strict {
        let (max, min) = (svals[0], svals[n - 1]);
        if !(min > 1e-12 * max) {
            return Err(Error::DegenerateSample(format!(
                "truncated block is rank deficient (smallest singular value {min:e}, largest {max:e})"
            )));
        }
    }
    let mut left = Mat::from_fn(rows, rows, |i, j| {
        if i < m && j < m {
            ub[(i, j)]
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    let mut right = Mat::from_fn(cols, cols, |i, j| {
        if i < n && j < n {
            vb[(i, j)]
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    canonicalize(&mut left, &mut right, n);
    let mut all = svals;
    all.resize(cols, 0.0);
    Ok(SvdTriplet { left, svals: all, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::matrix::{sample_ensemble, MatrixSpec};

    fn orthonormality_error(m: &Mat<f64>) -> f64 {
        let g = m.transpose() * m;
        let mut err: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - target).abs());
            }
        }
        err
    }

    #[test]
    fn frames_orthonormal_and_reconstruct() {
        let dims = Dims::new(9, 7, 6, 4).unwrap();
        let (x, xt) = sample_ensemble(&MatrixSpec::zero(dims), 1.0, 11).unwrap();
        let full = svd_full(&x).unwrap();
        let tr = svd_truncated(&xt, &dims).unwrap();
        for f in [&full.left, &full.right, &tr.left, &tr.right] {
            assert!(orthonormality_error(f) < 1e-10);
        }
        assert!(full.svals.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..9 {
            for j in 0..7 {
                let rec: f64 = (0..7).map(|k| full.left[(i, k)] * full.svals[k] * full.right[(j, k)]).sum();
                assert!((rec - x[(i, j)]).abs() < 1e-12);
                let rec: f64 = (0..7).map(|k| tr.left[(i, k)] * tr.svals[k] * tr.right[(j, k)]).sum();
                assert!((rec - xt[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn null_space_convention() {
        let dims = Dims::new(4, 3, 2, 2).unwrap();
        let (_, xt) = sample_ensemble(&MatrixSpec::zero(dims), 1.0, 5).unwrap();
        let tr = svd_truncated(&xt, &dims).unwrap();
        for k in 2..4 {
            for i in 0..4 {
                assert_eq!(tr.left[(i, k)], if i == k { 1.0 } else { 0.0 });
            }
        }
        for i in 0..3 {
            assert_eq!(tr.right[(i, 2)], if i == 2 { 1.0 } else { 0.0 });
        }
        assert_eq!(tr.svals[2], 0.0);
    }

    #[test]
    fn completion_stays_inside_block_rows() {
        let dims = Dims::new(8, 6, 5, 2).unwrap();
        let (_, xt) = sample_ensemble(&MatrixSpec::zero(dims), 1.0, 9).unwrap();
        let tr = svd_truncated(&xt, &dims).unwrap();
        for k in 2..5 {
            for i in 5..8 {
                assert_eq!(tr.left[(i, k)], 0.0);
            }
        }
        assert!(orthonormality_error(&tr.left) < 1e-10);
    }

    #[test]
    fn signs_are_canonical() {
        let dims = Dims::new(6, 5, 4, 3).unwrap();
        let (x, xt) = sample_ensemble(&MatrixSpec::zero(dims), 2.0, 1).unwrap();
        for s in [svd_full(&x).unwrap(), svd_truncated(&xt, &dims).unwrap()] {
            for k in 0..s.right.ncols() {
                assert!(first_significant(&s.right, k) > 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient_block_rejected() {
        let dims = Dims::new(4, 3, 2, 2).unwrap();
        let mut xt = Mat::zeros(4, 3);
        xt[(0, 0)] = 1.0;
        xt[(0, 1)] = 1.0;
        assert!(matches!(svd_truncated(&xt, &dims), Err(Error::DegenerateSample(_))));
        assert!(svd_truncated_lenient(&xt, &dims).is_ok());
    }
}
