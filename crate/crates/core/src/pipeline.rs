//! End-to-end model: wavelet expansion, SVD compression and the classifier,
//! fitted on labeled training columns and applied to new patients.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compress::{center_rows, fit_compressor, CompressedFeatures};
use crate::dataio::Cohort;
use crate::error::{Error, Result};
use crate::neuralnet::{init_model, train, NetConfig, NetModel};
use crate::survival::Risk;
use crate::wavelet::{expand_cohort, expand_vector, WaveletConfig};

/// Which features reach the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Wavelet expansion followed by SVD compression to `rank` components.
    WaveletSvd,
    /// Row-centered expression values, no expansion or compression.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub wavelet: WaveletConfig,
    /// `k`: retained singular vectors.
    pub rank: usize,
    /// `P`: share of each class used for gradient steps; the rest drives early stopping.
    pub train_fraction: f64,
    /// `h`: hidden units.
    pub hidden_units: usize,
    /// `Th`: outputs above this are high risk.
    pub threshold: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub feature_mode: FeatureMode,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            wavelet: WaveletConfig::new(5),
            rank: 7,
            train_fraction: 0.8,
            hidden_units: 3,
            threshold: 0.5,
            learning_rate: 0.05,
            max_epochs: 5000,
            patience: 200,
            feature_mode: FeatureMode::WaveletSvd,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Classifier input width for a cohort with `n_genes` genes.
    pub fn input_dim(&self, n_genes: usize) -> usize {
        match self.feature_mode {
            FeatureMode::WaveletSvd => self.rank,
            FeatureMode::Raw => n_genes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("train fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if self.feature_mode == FeatureMode::WaveletSvd && self.hidden_units > self.rank {
            return Err(Error::InvalidArgument(format!(
                "hidden units ({}) must not exceed rank ({})",
                self.hidden_units, self.rank
            )));
        }
        if self.wavelet.window == 0 {
            return Err(Error::InvalidArgument("window size must be at least 1".into()));
        }
        Ok(())
    }

    /// Non-fatal advice about the configuration.
    pub fn warnings(&self, n_genes: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.feature_mode == FeatureMode::WaveletSvd && self.rank >= n_genes {
            out.push(format!("rank {} is not below the gene count {n_genes}; smaller ranks usually classify better", self.rank));
        }
        out
    }

    fn net_config(&self, input_dim: usize, seed: u64) -> NetConfig {
        NetConfig {
            input_dim,
            hidden_units: self.hidden_units,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
        }
    }
}

/// Per-patient expression columns with their risk labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub ids: Vec<String>,
    /// Genes × patients.
    pub expression: DMatrix<f64>,
    pub labels: Vec<Risk>,
}

impl LabeledData {
    pub fn new(ids: Vec<String>, expression: DMatrix<f64>, labels: Vec<Risk>) -> Result<LabeledData> {
        if ids.len() != expression.ncols() {
            return Err(Error::DimensionMismatch { expected: expression.ncols(), actual: ids.len() });
        }
        if labels.len() != expression.ncols() {
            return Err(Error::DimensionMismatch { expected: expression.ncols(), actual: labels.len() });
        }
        Ok(LabeledData { ids, expression, labels })
    }

    pub fn from_cohort(cohort: &Cohort, labels: Vec<Risk>) -> Result<LabeledData> {
        LabeledData::new(cohort.patient_ids(), cohort.expression().clone(), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_genes(&self) -> usize {
        self.expression.nrows()
    }

    pub fn count(&self, risk: Risk) -> usize {
        self.labels.iter().filter(|&&r| r == risk).count()
    }

    pub fn select(&self, columns: &[usize]) -> LabeledData {
        LabeledData {
            ids: columns.iter().map(|&j| self.ids[j].clone()).collect(),
            expression: self.expression.select_columns(columns),
            labels: columns.iter().map(|&j| self.labels[j]).collect(),
        }
    }
}

/// Pre-classifier features for each expression column: the wavelet stack, or
/// the expression itself in raw mode.
pub fn feature_stack(expression: &DMatrix<f64>, config: &PipelineConfig) -> Result<DMatrix<f64>> {
    match config.feature_mode {
        FeatureMode::WaveletSvd => Ok(expand_cohort(expression, &config.wavelet)?.coefficients),
        FeatureMode::Raw => Ok(expression.clone()),
    }
}

/// Fitted feature map applied before the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureTransform {
    Compressed(CompressedFeatures),
    Centered { row_means: DVector<f64> },
}

impl FeatureTransform {
    fn apply(&self, column: &[f64]) -> Result<DVector<f64>> {
        match self {
            FeatureTransform::Compressed(c) => c.project(column),
            FeatureTransform::Centered { row_means } => {
                if column.len() != row_means.len() {
                    return Err(Error::DimensionMismatch { expected: row_means.len(), actual: column.len() });
                }
                Ok(DVector::from_column_slice(column) - row_means)
            }
        }
    }

    pub fn row_means(&self) -> &DVector<f64> {
        match self {
            FeatureTransform::Compressed(c) => &c.row_means,
            FeatureTransform::Centered { row_means } => row_means,
        }
    }
}

/// Stratified split of `labels` into gradient-step and early-stopping indices.
///
/// Each class contributes `round(P · count)` patients to the training side,
/// keeping at least one on each side when the class has two or more members.
/// A singleton class stays on the training side.
pub fn stratified_split(labels: &[Risk], train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for class in [Risk::Low, Risk::High] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let count = members.len();
        let n_train = if count <= 1 { count } else { ((train_fraction * count as f64).round() as usize).clamp(1, count - 1) };
        train_idx.extend_from_slice(&members[..n_train]);
        val_idx.extend_from_slice(&members[n_train..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    (train_idx, val_idx)
}

fn targets(labels: &[Risk], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| labels[i].target()).collect()
}

/// A trained pipeline that scores raw expression vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub n_genes: usize,
    pub transform: FeatureTransform,
    pub net: NetModel,
}

impl FittedPipeline {
    /// Fits on the columns of a precomputed feature stack (see [`feature_stack`]).
    pub fn fit_stack(stack: &DMatrix<f64>, labels: &[Risk], n_genes: usize, config: &PipelineConfig, seed: u64) -> Result<FittedPipeline> {
        config.validate()?;
        if stack.ncols() != labels.len() {
            return Err(Error::DimensionMismatch { expected: stack.ncols(), actual: labels.len() });
        }
        if !labels.contains(&Risk::Low) {
            return Err(Error::SingleClass("high risk"));
        }
        if !labels.contains(&Risk::High) {
            return Err(Error::SingleClass("low risk"));
        }
        let (transform, features) = match config.feature_mode {
            FeatureMode::WaveletSvd => {
                let c = fit_compressor(stack, config.rank)?;
                let f = c.features.clone();
                (FeatureTransform::Compressed(c), f)
            }
            FeatureMode::Raw => {
                let (centered, row_means) = center_rows(stack);
                (FeatureTransform::Centered { row_means }, centered)
            }
        };
        let (train_idx, val_idx) = stratified_split(labels, config.train_fraction, seed);
        let net = init_model(config.net_config(features.nrows(), seed))?;
        let net = train(
            net,
            &features.select_columns(&train_idx),
            &targets(labels, &train_idx),
            &features.select_columns(&val_idx),
            &targets(labels, &val_idx),
        )?;
        Ok(FittedPipeline { config: *config, n_genes, transform, net })
    }

    pub fn fit(data: &LabeledData, config: &PipelineConfig, seed: u64) -> Result<FittedPipeline> {
        let stack = feature_stack(&data.expression, config)?;
        FittedPipeline::fit_stack(&stack, &data.labels, data.n_genes(), config, seed)
    }

    /// Classifier input for an already-expanded feature column.
    pub fn features_from_stack(&self, column: &[f64]) -> Result<DVector<f64>> {
        self.transform.apply(column)
    }

    pub fn score_stack_column(&self, column: &[f64]) -> Result<f64> {
        let z = self.transform.apply(column)?;
        self.net.predict(z.as_slice())
    }

    /// Risk score in (0, 1) for one patient's expression vector; large means high risk.
    pub fn score(&self, expression: &[f64]) -> Result<f64> {
        if expression.len() != self.n_genes {
            return Err(Error::DimensionMismatch { expected: self.n_genes, actual: expression.len() });
        }
        match self.config.feature_mode {
            FeatureMode::WaveletSvd => self.score_stack_column(&expand_vector(expression, &self.config.wavelet)?),
            FeatureMode::Raw => self.score_stack_column(expression),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<FittedPipeline> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }
}
