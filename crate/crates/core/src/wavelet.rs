//! Mexican-hat continuous wavelet expansion of gene-ordered expression vectors.
//!
//! A patient's expression vector `x` (length m, ordered by gene) is treated as
//! a signal sampled at unit spacing. Its wavelet coefficients at scale `s` and
//! position `τ` are the Riemann sum
//!
//! ```text
//! W(s, τ) = 1/√s · Σ_{t=1..m} x(t) · ψ((t − τ) / s)
//! ```
//!
//! with zero padding outside `1..m`. The Mexican hat is real, so no conjugate
//! is needed. Each patient yields a `T × m` coefficient matrix which is
//! flattened column-major into one column of the stacked matrix `H` (`Tm × n`).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mother wavelet of width `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MexicanHat {
    sigma: f64,
}

impl Default for MexicanHat {
    fn default() -> Self {
        MexicanHat { sigma: 1.0 }
    }
}

impl MexicanHat {
    pub fn new(sigma: f64) -> Result<MexicanHat> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavelet width must be positive, got {sigma}")));
        }
        Ok(MexicanHat { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `2 / (√(3σ) π^¼) · (1 − k²/σ²) · exp(−k² / 2σ²)`, unit L2 norm.
    pub fn eval(&self, k: f64) -> f64 {
        let s = self.sigma;
        let norm = 2.0 / ((3.0 * s).sqrt() * PI.powf(0.25));
        let r = k * k / (s * s);
        norm * (1.0 - r) * (-r / 2.0).exp()
    }
}

pub fn mexican_hat(k: f64, params: &MexicanHat) -> f64 {
    params.eval(k)
}

/// Single CWT coefficient of `x` at `scale` and 1-based `position`.
pub fn cwt_single(x: &[f64], scale: f64, position: f64, hat: &MexicanHat) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!("signal needs at least 2 samples, got {}", x.len())));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    Ok(coefficient(x, scale, position, hat))
}

fn coefficient(x: &[f64], scale: f64, position: f64, hat: &MexicanHat) -> f64 {
    let sum: f64 = x
        .iter()
        .enumerate()
        .map(|(i, &v)| v * hat.eval(((i + 1) as f64 - position) / scale))
        .sum();
    sum / scale.sqrt()
}

/// How the `T` rows of a patient's coefficient matrix are formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ScaleMode {
    /// Row `j` is scale `s = j` (1-based) evaluated at positions `1..m`.
    Multi,
    /// One fixed scale; row `j` holds position `w + j − 1` for each window start `w = 1..m`.
    Fixed { scale: f64 },
}

impl Default for ScaleMode {
    fn default() -> Self {
        ScaleMode::Multi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletConfig {
    /// `T`: number of coefficient rows per gene position.
    pub window: usize,
    pub hat: MexicanHat,
    pub scale_mode: ScaleMode,
}

impl WaveletConfig {
    pub fn new(window: usize) -> WaveletConfig {
        WaveletConfig { window, hat: MexicanHat::default(), scale_mode: ScaleMode::Multi }
    }

    fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::InvalidArgument("window size must be at least 1".into()));
        }
        if let ScaleMode::Fixed { scale } = self.scale_mode {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidArgument(format!("fixed scale must be positive, got {scale}")));
            }
        }
        Ok(())
    }
}

/// `T × m` coefficient matrix for one patient.
pub fn expand_patient(x: &[f64], config: &WaveletConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!("signal needs at least 2 samples, got {}", x.len())));
    }
    let (t, m) = (config.window, x.len());
    let hat = &config.hat;
    Ok(match config.scale_mode {
        ScaleMode::Multi => DMatrix::from_fn(t, m, |row, pos| coefficient(x, (row + 1) as f64, (pos + 1) as f64, hat)),
        ScaleMode::Fixed { scale } => {
            DMatrix::from_fn(t, m, |row, start| coefficient(x, scale, (start + row + 1) as f64, hat))
        }
    })
}

/// Placement of a patient's `T × m` matrix inside its stacked column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackLayout {
    pub rows: usize,
    pub cols: usize,
}

impl StackLayout {
    /// Column-major: entry `(row, col)` lands at `col * rows + row`.
    pub fn index(&self, row: usize, col: usize) -> usize {
        col * self.rows + row
    }
}

/// Stacked wavelet coefficients `H` (`Tm × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletStack {
    pub coefficients: DMatrix<f64>,
    pub window_size: usize,
    pub genes_per_patient: usize,
    pub layout: StackLayout,
}

/// Flattened coefficients of one patient, in stack layout.
pub fn expand_vector(x: &[f64], config: &WaveletConfig) -> Result<Vec<f64>> {
    // nalgebra storage is column-major, matching StackLayout.
    Ok(expand_patient(x, config)?.as_slice().to_vec())
}

pub fn expand_cohort(expression: &DMatrix<f64>, config: &WaveletConfig) -> Result<WaveletStack> {
    config.validate()?;
    let (m, n) = expression.shape();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| expand_vector(expression.column(j).as_slice(), config))
        .collect::<Result<_>>()?;
    let rows = config.window * m;
    let mut coefficients = DMatrix::zeros(rows, n);
    for (j, col) in columns.iter().enumerate() {
        coefficients.column_mut(j).copy_from_slice(col);
    }
    Ok(WaveletStack {
        coefficients,
        window_size: config.window,
        genes_per_patient: m,
        layout: StackLayout { rows: config.window, cols: m },
    })
}
