//! Row centering and SVD projection of the stacked wavelet coefficients.
//!
//! With the centered stack factored as `H = L S Rᵀ`, the compressed features are
//! `Ĥ = [l₁ … l_k]ᵀ H = [σ₁r₁ … σ_k r_k]ᵀ`, a `k × n` matrix. New patients are
//! projected with the training row means and basis.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SVD_EPS: f64 = 1e-14;
const SVD_MAX_ITER: usize = 10_000;

/// Subtracts each row's mean from that row.
pub fn center_rows(h: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = h.ncols().max(1) as f64;
    let means = DVector::from_iterator(h.nrows(), h.row_iter().map(|r| r.sum() / n));
    let mut centered = h.clone();
    for (mut row, mean) in centered.row_iter_mut().zip(means.iter()) {
        row.add_scalar_mut(-mean);
    }
    (centered, means)
}

/// Singular triplets sorted by descending singular value, with each left
/// vector's largest-magnitude entry made positive (first index on ties).
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub left: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub right: DMatrix<f64>,
}

pub fn sorted_svd(matrix: &DMatrix<f64>) -> Result<SortedSvd> {
    let svd = SVD::try_new(matrix.clone(), true, true, SVD_EPS, SVD_MAX_ITER).ok_or(Error::SvdNonConvergence)?;
    let u = svd.u.ok_or(Error::SvdNonConvergence)?;
    let v_t = svd.v_t.ok_or(Error::SvdNonConvergence)?;
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let mut left = u.select_columns(&order);
    let mut right = v_t.transpose().select_columns(&order);
    for c in 0..left.ncols() {
        let mut pivot = 0;
        for (i, v) in left.column(c).iter().enumerate() {
            if v.abs() > left[(pivot, c)].abs() {
                pivot = i;
            }
        }
        if left[(pivot, c)] < 0.0 {
            left.column_mut(c).neg_mut();
            right.column_mut(c).neg_mut();
        }
    }
    Ok(SortedSvd { left, singular_values: order.iter().map(|&i| sigma[i].max(0.0)).collect(), right })
}

/// Fitted compression: retained basis and the training projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedFeatures {
    /// `Ĥ`, `k × n`.
    pub features: DMatrix<f64>,
    /// `[l₁ … l_k]`, `Tm × k`.
    pub basis: DMatrix<f64>,
    /// Leading `k` singular values, descending.
    pub singular_values: Vec<f64>,
    /// Every singular value of the centered training stack, descending.
    pub spectrum: Vec<f64>,
    pub row_means: DVector<f64>,
}

impl CompressedFeatures {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Share of centered energy kept by the first `k` components.
    pub fn retained_energy(&self, k: usize) -> f64 {
        let total: f64 = self.spectrum.iter().map(|s| s * s).sum();
        if total == 0.0 {
            return 1.0;
        }
        self.spectrum.iter().take(k).map(|s| s * s).sum::<f64>() / total
    }

    /// `basisᵀ (h − row_means)`.
    pub fn project(&self, h_new: &[f64]) -> Result<DVector<f64>> {
        if h_new.len() != self.basis.nrows() {
            return Err(Error::DimensionMismatch { expected: self.basis.nrows(), actual: h_new.len() });
        }
        let centered = DVector::from_column_slice(h_new) - &self.row_means;
        Ok(self.basis.tr_mul(&centered))
    }

    /// Projects every column of a stack.
    pub fn project_columns(&self, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if h.nrows() != self.basis.nrows() {
            return Err(Error::DimensionMismatch { expected: self.basis.nrows(), actual: h.nrows() });
        }
        let mut centered = h.clone();
        for mut col in centered.column_iter_mut() {
            col -= &self.row_means;
        }
        Ok(self.basis.tr_mul(&centered))
    }
}

/// Centers `h`, factors it and keeps the leading `k` left singular vectors.
pub fn fit_compressor(h: &DMatrix<f64>, k: usize) -> Result<CompressedFeatures> {
    let (rows, cols) = h.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("cannot compress an empty matrix".into()));
    }
    let max_k = rows.min(cols);
    if k < 1 || k > max_k {
        return Err(Error::InvalidArgument(format!("rank k = {k} must lie in 1..={max_k} for a {rows} x {cols} stack")));
    }
    let (centered, row_means) = center_rows(h);
    let svd = sorted_svd(&centered)?;
    let basis = svd.left.columns(0, k).into_owned();
    let features = basis.tr_mul(&centered);
    Ok(CompressedFeatures {
        features,
        basis,
        singular_values: svd.singular_values[..k].to_vec(),
        spectrum: svd.singular_values,
        row_means,
    })
}
