//! Initial matrices, their on-disk formats, and sampling of `(X_t, X̃_t)`.
//!
//! Two file formats are understood, selected by extension:
//!
//! * `.csv`: a header line `M,N` followed by `M` lines of `N` comma-separated
//!   values (row-major).
//! * anything else: a 16-byte header of two little-endian `u64` (`M`, `N`)
//!   followed by `M·N` little-endian `f64` in row-major order.

use std::fs;
use std::path::Path;

use faer::Mat;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Dims;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixKind {
    Zero,
    /// Leading diagonal entries; the rest of the matrix is zero.
    Diagonal(Vec<f64>),
    Dense(Mat<f64>),
}

/// The initial matrix `A` together with the ensemble sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpec {
    pub kind: MatrixKind,
    pub dims: Dims,
}

impl MatrixSpec {
    pub fn zero(dims: Dims) -> Self {
        Self { kind: MatrixKind::Zero, dims }
    }

    pub fn diagonal(values: Vec<f64>, dims: Dims) -> Result<Self> {
        if values.len() > dims.cols {
            return Err(invalid(format!("{} diagonal entries exceed min(M, N) = {}", values.len(), dims.cols)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("diagonal entries must be finite"));
        }
        Ok(Self { kind: MatrixKind::Diagonal(values), dims })
    }

    pub fn dense(a: Mat<f64>, dims: Dims) -> Result<Self> {
        let found = (a.nrows(), a.ncols());
        if found != (dims.rows, dims.cols) {
            return Err(Error::ShapeMismatch { expected: (dims.rows, dims.cols), found });
        }
        Ok(Self { kind: MatrixKind::Dense(a), dims })
    }

    pub fn from_file(path: &Path, dims: Dims) -> Result<Self> {
        Self::dense(read_matrix_file(path)?, dims)
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            MatrixKind::Zero => true,
            MatrixKind::Diagonal(d) => d.iter().all(|&x| x == 0.0),
            MatrixKind::Dense(a) => (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)] == 0.0)),
        }
    }

    pub fn to_mat(&self) -> Mat<f64> {
        let Dims { rows, cols, .. } = self.dims;
        match &self.kind {
            MatrixKind::Zero => Mat::zeros(rows, cols),
            MatrixKind::Diagonal(d) => Mat::from_fn(rows, cols, |i, j| if i == j && i < d.len() { d[i] } else { 0.0 }),
            MatrixKind::Dense(a) => a.clone(),
        }
    }
}

/// Copy of `x` with every entry outside the top-left `m × n` block zeroed.
pub fn truncate(x: &Mat<f64>, dims: &Dims) -> Mat<f64> {
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| if i < dims.sub_rows && j < dims.sub_cols { x[(i, j)] } else { 0.0 })
}

/// `X = A + √(t/N)·Z` with i.i.d. standard normal `Z`, and its truncation.
pub fn sample_with_rng<R: Rng + ?Sized>(spec: &MatrixSpec, t: f64, rng: &mut R) -> Result<(Mat<f64>, Mat<f64>)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("t = {t} must be finite and >= 0")));
    }
    let a = spec.to_mat();
    let x = if t == 0.0 {
        a
    } else {
        let sd = (t / spec.dims.cols as f64).sqrt();
        let mut x = a;
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                let z: f64 = rng.sample(StandardNormal);
                x[(i, j)] += sd * z;
            }
        }
        x
    };
    let xt = truncate(&x, &spec.dims);
    Ok((x, xt))
}

/// [`sample_with_rng`] driven by a ChaCha8 stream seeded with `seed`.
pub fn sample_ensemble(spec: &MatrixSpec, t: f64, seed: u64) -> Result<(Mat<f64>, Mat<f64>)> {
    sample_with_rng(spec, t, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn read_matrix_file(path: &Path) -> Result<Mat<f64>> {
    if is_csv(path) {
        parse_csv(&fs::read_to_string(path)?)
    } else {
        parse_binary(&fs::read(path)?)
    }
}

pub fn write_matrix_file(path: &Path, a: &Mat<f64>) -> Result<()> {
    if is_csv(path) {
        let mut out = format!("{},{}\n", a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:e}", a[(i, j)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        fs::write(path, out)?;
    } else {
        let mut out = Vec::with_capacity(16 + 8 * a.nrows() * a.ncols());
        out.extend_from_slice(&(a.nrows() as u64).to_le_bytes());
        out.extend_from_slice(&(a.ncols() as u64).to_le_bytes());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                out.extend_from_slice(&a[(i, j)].to_le_bytes());
            }
        }
        fs::write(path, out)?;
    }
    Ok(())
}

fn parse_dim(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad dimension {s:?} in header")))
}

fn parse_csv(text: &str) -> Result<Mat<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(Error::Parse(format!("header must be `M,N`, found {header:?}")));
    }
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut a = Mat::zeros(rows, cols);
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(Error::Parse(format!("more than {rows} data rows")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Parse(format!("row {} has {} fields, expected {cols}", i + 1, fields.len())));
        }
        for (j, f) in fields.iter().enumerate() {
            a[(i, j)] = f.trim().parse().map_err(|_| Error::Parse(format!("bad number {f:?} at row {}", i + 1)))?;
        }
        count += 1;
    }
    if count != rows {
        return Err(Error::Parse(format!("expected {rows} data rows, found {count}")));
    }
    Ok(a)
}

fn parse_binary(bytes: &[u8]) -> Result<Mat<f64>> {
    if bytes.len() < 16 {
        return Err(Error::Parse("binary file shorter than its 16-byte header".into()));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(0) as usize, word(1) as usize);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| Error::Parse("header dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Parse(format!("expected {expected} bytes for {rows}x{cols}, found {}", bytes.len())));
    }
    let payload = &bytes[16..];
    Ok(Mat::from_fn(rows, cols, |i, j| {
        let k = 8 * (i * cols + j);
        f64::from_le_bytes(payload[k..k + 8].try_into().expect("8 bytes"))
    }))
}
