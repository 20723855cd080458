//! Monte Carlo harness: sampling `X_t = A + B_t/√N` and its truncation,
//! singular value decompositions with a fixed null-space basis, and overlap
//! estimators.

pub mod correlation;
pub mod matrix;
pub mod montecarlo;
pub mod overlaps;
pub mod svd;

use crate::error::{invalid, Result};
use crate::spectral::ShapeRatios;

pub use correlation::{correlation_identity_test, CorrelationReport};
pub use matrix::{read_matrix_file, sample_ensemble, sample_with_rng, write_matrix_file, MatrixKind, MatrixSpec};
pub use montecarlo::{
    mc_kernel_overlaps, mc_rescaled_overlaps, KernelTarget, McConfig, OverlapEstimate, Selection, Target,
    TargetEstimate,
};
pub use overlaps::{overlap_matrices, OverlapTables};
pub use svd::{svd_full, svd_truncated, SvdTriplet};

/// Finite sizes: `X` is `rows × cols` (`M × N`), its truncation keeps the
/// top-left `sub_rows × sub_cols` (`m × n`) block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
    pub sub_rows: usize,
    pub sub_cols: usize,
}

impl Dims {
    pub fn new(rows: usize, cols: usize, sub_rows: usize, sub_cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || sub_rows == 0 || sub_cols == 0 {
            return Err(invalid("all dimensions must be positive"));
        }
        if cols > rows {
            return Err(invalid(format!("N = {cols} exceeds M = {rows}")));
        }
        if sub_cols > cols {
            return Err(invalid(format!("n = {sub_cols} exceeds N = {cols}")));
        }
        if sub_rows > rows {
            return Err(invalid(format!("m = {sub_rows} exceeds M = {rows}")));
        }
        if sub_cols > sub_rows {
            return Err(invalid(format!("n = {sub_cols} exceeds m = {sub_rows}")));
        }
        Ok(Self { rows, cols, sub_rows, sub_cols })
    }

    /// `N = round(qM)`, `n = round(αN)`, `m = round(βM)`.
    pub fn from_ratios(rows: usize, r: &ShapeRatios) -> Result<Self> {
        let cols = (r.q * rows as f64).round() as usize;
        let sub_cols = (r.alpha * cols as f64).round() as usize;
        let sub_rows = (r.beta * rows as f64).round() as usize;
        Self::new(rows, cols, sub_rows, sub_cols)
    }

    /// Ratios realised by these sizes, at time `t`.
    pub fn ratios(&self, t: f64) -> Result<ShapeRatios> {
        ShapeRatios::new(
            self.cols as f64 / self.rows as f64,
            self.sub_cols as f64 / self.cols as f64,
            self.sub_rows as f64 / self.rows as f64,
            t,
        )
    }
}
