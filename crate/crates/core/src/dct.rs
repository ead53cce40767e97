//! Orthonormal type-II discrete cosine transform.
//!
//! Everything here goes through explicit basis matrices: row `k` of the
//! `n x n` basis holds `alpha_k * cos(pi/n * (m + 1/2) * k)` with
//! `alpha_0 = sqrt(1/n)` and `alpha_k = sqrt(2/n)` otherwise. The basis is
//! orthogonal, so the 2D transform `A_m * M * A_n^T` preserves energy and is
//! inverted by `A_m^T * C * A_n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// Size of the retained low-frequency block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub k1: usize,
    pub k2: usize,
}

impl TruncationSpec {
    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        if k1 == 0 || k2 == 0 {
            return Err(Error::Dimension(format!(
                "truncation block must be positive, got {k1}x{k2}"
            )));
        }
        Ok(Self { k1, k2 })
    }

    pub fn len(&self) -> usize {
        self.k1 * self.k2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the block fits inside a `rows x cols` source.
    pub fn check_fits(&self, rows: usize, cols: usize) -> Result<()> {
        if self.k1 > rows || self.k2 > cols {
            return Err(Error::Dimension(format!(
                "cannot keep {}x{} block of a {rows}x{cols} matrix",
                self.k1, self.k2
            )));
        }
        Ok(())
    }
}

/// First `rows` rows of the `n x n` basis.
fn basis_rows(n: usize, rows: usize) -> RealMatrix {
    let dc = (1.0 / n as f64).sqrt();
    let ac = (2.0 / n as f64).sqrt();
    // cos(pi (2m+1) k / 2n) only takes the 4n values cos(pi j / 2n)
    let period = 4 * n;
    let table: Vec<f64> = (0..period)
        .map(|j| (PI * j as f64 / (2 * n) as f64).cos())
        .collect();
    RealMatrix::from_fn(rows, n, |k, m| {
        let alpha = if k == 0 { dc } else { ac };
        alpha * table[((2 * m + 1) * k) % period]
    })
}

/// The `n x n` orthonormal DCT-II basis matrix.
///
/// # Panics
/// Panics if `n == 0`.
pub fn dct_basis(n: usize) -> RealMatrix {
    assert!(n >= 1, "DCT length must be positive");
    basis_rows(n, n)
}

fn ensure_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("non-finite value in DCT input".into()))
    }
}

/// 1D orthonormal DCT-II of `x`.
pub fn dct1(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidInput("DCT of an empty vector".into()));
    }
    ensure_finite(x)?;
    let basis = dct_basis(x.len());
    Ok((0..x.len())
        .map(|k| basis.row(k).iter().zip(x).map(|(a, v)| a * v).sum())
        .collect())
}

/// 2D orthonormal DCT-II: `A_m * M * A_n^T`.
pub fn dct2(m: &RealMatrix) -> Result<RealMatrix> {
    ensure_finite(m.as_slice())?;
    let left = dct_basis(m.rows()).matmul(m)?;
    left.matmul_transposed(&dct_basis(m.cols()))
}

/// Inverse of [`dct2`]: `A_m^T * C * A_n`. Only used to check reconstructions.
pub fn idct2(c: &RealMatrix) -> Result<RealMatrix> {
    ensure_finite(c.as_slice())?;
    let left = dct_basis(c.rows()).transpose().matmul(c)?;
    left.matmul(&dct_basis(c.cols()))
}

/// Copies the top-left `k1 x k2` block of `c`.
pub fn truncate(c: &RealMatrix, spec: TruncationSpec) -> Result<RealMatrix> {
    spec.check_fits(c.rows(), c.cols())?;
    Ok(c.top_left(spec.k1, spec.k2))
}

/// Zeroes the `floor(p * len)` entries of smallest magnitude. Among equal
/// magnitudes the earlier entry in row-major order goes first.
pub fn sparsify(c: &RealMatrix, p: f64) -> Result<RealMatrix> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "sparsify fraction must lie in [0, 1), got {p}"
        )));
    }
    let values = c.as_slice();
    let drop = (p * values.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..values.len()).collect();
    // sort_by is stable, which gives the row-major tie rule.
    order.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()));
    let mut out = values.to_vec();
    for &i in &order[..drop] {
        out[i] = 0.0;
    }
    RealMatrix::from_vec(c.rows(), c.cols(), out)
}

/// Precomputed partial bases for repeatedly extracting the same
/// low-frequency block from same-shaped inputs.
///
/// Produces exactly `truncate(dct2(m), spec)` but only evaluates the
/// retained rows of each basis, so a 6x450 history costs a few thousand
/// multiply-adds instead of a full 450-point transform.
#[derive(Debug, Clone)]
pub struct BlockCompressor {
    rows: usize,
    cols: usize,
    spec: TruncationSpec,
    row_basis: RealMatrix,
    col_basis: RealMatrix,
}

impl BlockCompressor {
    pub fn new(rows: usize, cols: usize, spec: TruncationSpec) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("input shape must be positive".into()));
        }
        spec.check_fits(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            spec,
            row_basis: basis_rows(rows, spec.k1),
            col_basis: basis_rows(cols, spec.k2),
        })
    }

    pub fn spec(&self) -> TruncationSpec {
        self.spec
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn compress(&self, m: &RealMatrix) -> Result<RealMatrix> {
        if m.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension(format!(
                "compressor expects {}x{}, got {}x{}",
                self.rows,
                self.cols,
                m.rows(),
                m.cols()
            )));
        }
        ensure_finite(m.as_slice())?;
        // (k2 x cols) * (cols x rows) first keeps the intermediate small.
        let partial = m.matmul_transposed(&self.col_basis)?;
        self.row_basis.matmul(&partial)
    }
}
