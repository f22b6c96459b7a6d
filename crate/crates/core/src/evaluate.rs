//! Thresholding, TPR/FPR, ROC analysis and the two evaluation protocols.
//!
//! The positive class is **low risk**: TPR is the share of truly low-risk
//! patients predicted low risk, FPR the share of truly high-risk patients
//! predicted low risk. A score above the threshold means high risk, so the ROC
//! sweep counts patients with `score <= threshold` as predicted positive.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{feature_stack, FittedPipeline, LabeledData, PipelineConfig};
use crate::survival::Risk;

/// High risk iff `score > threshold`.
pub fn classify(score: f64, threshold: f64) -> Risk {
    if score > threshold {
        Risk::High
    } else {
        Risk::Low
    }
}

fn class_counts(truths: &[Risk]) -> Result<(usize, usize)> {
    let low = truths.iter().filter(|&&t| t == Risk::Low).count();
    let high = truths.len() - low;
    if low == 0 {
        return Err(Error::SingleClass("high risk"));
    }
    if high == 0 {
        return Err(Error::SingleClass("low risk"));
    }
    Ok((low, high))
}

/// `(tpr, fpr)` with low risk as the positive class.
pub fn rates(predictions: &[Risk], truths: &[Risk]) -> Result<(f64, f64)> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), actual: predictions.len() });
    }
    let (low, high) = class_counts(truths)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    for (p, t) in predictions.iter().zip(truths) {
        match (p, t) {
            (Risk::Low, Risk::Low) => tp += 1,
            (Risk::Low, Risk::High) => fp += 1,
            _ => {}
        }
    }
    Ok((tp as f64 / low as f64, fp as f64 / high as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)`, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Threshold producing each point.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// Trapezoidal area under `(fpr, tpr)` points.
pub fn trapezoid_auc(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

/// Threshold sweep over 0, every distinct score, and 1. Scores must lie in (0, 1).
pub fn roc(scores: &[f64], truths: &[Risk]) -> Result<RocCurve> {
    if scores.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), actual: scores.len() });
    }
    let (low, high) = class_counts(truths)?;
    if let Some(bad) = scores.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
        return Err(Error::InvalidArgument(format!("scores must lie in (0, 1), found {bad}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            match truths[order[i]] {
                Risk::Low => tp += 1,
                Risk::High => fp += 1,
            }
            i += 1;
        }
        points.push((fp as f64 / high as f64, tp as f64 / low as f64));
        thresholds.push(s);
    }
    points.push((1.0, 1.0));
    thresholds.push(1.0);
    let auc = trapezoid_auc(&points);
    Ok(RocCurve { points, thresholds, auc })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    LeaveOneOut,
    RegularSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub kind: ProtocolKind,
    /// Regular split only: keep this many randomly chosen high-risk training patients.
    pub undersample_high_risk_to: Option<usize>,
    /// Seed for undersampling.
    pub seed: u64,
}

impl EvalProtocol {
    pub fn leave_one_out() -> EvalProtocol {
        EvalProtocol { kind: ProtocolKind::LeaveOneOut, undersample_high_risk_to: None, seed: 0 }
    }

    pub fn regular(undersample_high_risk_to: Option<usize>, seed: u64) -> EvalProtocol {
        EvalProtocol { kind: ProtocolKind::RegularSplit, undersample_high_risk_to, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientScore {
    pub patient_id: String,
    pub score: f64,
    pub truth: Risk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFold {
    pub patient_id: String,
    pub reason: String,
}

/// Folds beyond this share skipped mark the report as unreliable.
pub const MAX_SKIPPED_FOLD_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scores: Vec<PatientScore>,
    pub roc: RocCurve,
    pub operating_point: OperatingPoint,
    pub skipped_folds: Vec<SkippedFold>,
    /// More than [`MAX_SKIPPED_FOLD_SHARE`] of folds were skipped.
    pub too_many_skipped: bool,
    /// Regular split only: ids of the training patients actually used.
    pub retained_training: Option<Vec<String>>,
}

impl EvalReport {
    fn assemble(scores: Vec<PatientScore>, threshold: f64, skipped: Vec<SkippedFold>, retained: Option<Vec<String>>) -> Result<EvalReport> {
        let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
        let truths: Vec<Risk> = scores.iter().map(|s| s.truth).collect();
        let roc = roc(&values, &truths)?;
        let predictions: Vec<Risk> = values.iter().map(|&s| classify(s, threshold)).collect();
        let (tpr, fpr) = rates(&predictions, &truths)?;
        let total = scores.len() + skipped.len();
        let too_many_skipped = skipped.len() as f64 > MAX_SKIPPED_FOLD_SHARE * total as f64;
        Ok(EvalReport {
            scores,
            roc,
            operating_point: OperatingPoint { threshold, tpr, fpr },
            skipped_folds: skipped,
            too_many_skipped,
            retained_training: retained,
        })
    }

    /// `(tpr, fpr)` at another threshold, from the stored scores.
    pub fn rates_at(&self, threshold: f64) -> Result<(f64, f64)> {
        let predictions: Vec<Risk> = self.scores.iter().map(|s| classify(s.score, threshold)).collect();
        let truths: Vec<Risk> = self.scores.iter().map(|s| s.truth).collect();
        rates(&predictions, &truths)
    }
}

/// Outcome of holding out one patient.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub model: FittedPipeline,
    pub score: f64,
}

/// Fits on every patient but `held_out` using a precomputed feature stack.
fn run_fold(stack: &nalgebra::DMatrix<f64>, data: &LabeledData, held_out: usize, config: &PipelineConfig) -> Result<FoldOutcome> {
    let train_cols: Vec<usize> = (0..data.len()).filter(|&j| j != held_out).collect();
    let labels: Vec<Risk> = train_cols.iter().map(|&j| data.labels[j]).collect();
    let seed = config.seed.wrapping_add(held_out as u64);
    let model = FittedPipeline::fit_stack(&stack.select_columns(&train_cols), &labels, data.n_genes(), config, seed)?;
    let score = model.score_stack_column(stack.column(held_out).as_slice())?;
    Ok(FoldOutcome { model, score })
}

/// Fold `held_out` of leave-one-out: the full pipeline fitted without that patient.
pub fn leave_one_out_fold(data: &LabeledData, held_out: usize, config: &PipelineConfig) -> Result<FoldOutcome> {
    if held_out >= data.len() {
        return Err(Error::InvalidArgument(format!("fold {held_out} out of range for {} patients", data.len())));
    }
    let stack = feature_stack(&data.expression, config)?;
    run_fold(&stack, data, held_out, config)
}

/// Leave-one-out: `n` independent fits, each scoring its held-out patient.
/// Folds run in parallel on the current rayon pool; fold `i` uses seed
/// `config.seed + i`.
pub fn leave_one_out(data: &LabeledData, config: &PipelineConfig) -> Result<EvalReport> {
    leave_one_out_until(data, config, None)
}

pub(crate) fn leave_one_out_until(data: &LabeledData, config: &PipelineConfig, deadline: Option<Instant>) -> Result<EvalReport> {
    config.validate()?;
    if data.len() < 3 {
        return Err(Error::InvalidArgument(format!("leave-one-out needs at least 3 patients, got {}", data.len())));
    }
    class_counts(&data.labels)?;
    // Expansion is per patient, so one stack serves every fold.
    let stack = feature_stack(&data.expression, config)?;

    let outcomes: Vec<Result<Option<f64>>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            if deadline.is_some_and(|d| Instant::now() > d) {
                return Err(Error::TimedOut);
            }
            match run_fold(&stack, data, i, config) {
                Ok(fold) => Ok(Some(fold.score)),
                Err(Error::SingleClass(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Some(score) => scores.push(PatientScore { patient_id: data.ids[i].clone(), score, truth: data.labels[i] }),
            None => skipped.push(SkippedFold {
                patient_id: data.ids[i].clone(),
                reason: "training set without both risk classes".into(),
            }),
        }
    }
    EvalReport::assemble(scores, config.threshold, skipped, None)
}

/// High-risk columns kept after undersampling, plus every low-risk column, in original order.
pub fn undersample(labels: &[Risk], keep_high: Option<usize>, seed: u64) -> Result<Vec<usize>> {
    let high: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Risk::High).collect();
    let keep = keep_high.unwrap_or(high.len());
    if keep > high.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {keep} high-risk patients, only {} available",
            high.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Stream 0 initializes networks and stream 1 draws the early-stopping split.
    rng.set_stream(2);
    let mut kept: Vec<usize> = sample(&mut rng, high.len(), keep).into_iter().map(|i| high[i]).collect();
    kept.extend((0..labels.len()).filter(|&i| labels[i] == Risk::Low));
    kept.sort_unstable();
    Ok(kept)
}

/// Single fit on an undersampled training cohort, scored on a disjoint evaluation cohort.
/// High-risk training patients not retained are left out entirely.
pub fn regular_split(train: &LabeledData, evaluation: &LabeledData, config: &PipelineConfig, protocol: &EvalProtocol) -> Result<EvalReport> {
    regular_split_until(train, evaluation, config, protocol, None)
}

pub(crate) fn regular_split_until(
    train: &LabeledData,
    evaluation: &LabeledData,
    config: &PipelineConfig,
    protocol: &EvalProtocol,
    deadline: Option<Instant>,
) -> Result<EvalReport> {
    config.validate()?;
    if protocol.kind != ProtocolKind::RegularSplit {
        return Err(Error::InvalidArgument("regular_split needs a regular-split protocol".into()));
    }
    if let Some(id) = evaluation.ids.iter().find(|id| train.ids.contains(id)) {
        return Err(Error::InvalidArgument(format!("patient {id} is in both the training and evaluation sets")));
    }
    if evaluation.n_genes() != train.n_genes() {
        return Err(Error::DimensionMismatch { expected: train.n_genes(), actual: evaluation.n_genes() });
    }
    let kept = undersample(&train.labels, protocol.undersample_high_risk_to, protocol.seed)?;
    let retained = train.select(&kept);
    if deadline.is_some_and(|d| Instant::now() > d) {
        return Err(Error::TimedOut);
    }
    let model = FittedPipeline::fit(&retained, config, config.seed)?;
    let scores = (0..evaluation.len())
        .map(|j| {
            Ok(PatientScore {
                patient_id: evaluation.ids[j].clone(),
                score: model.score(evaluation.expression.column(j).as_slice())?,
                truth: evaluation.labels[j],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::assemble(scores, config.threshold, Vec::new(), Some(retained.ids))
}

/// Runs whichever protocol `protocol` names. The regular split needs an evaluation set.
pub fn evaluate(data: &LabeledData, evaluation: Option<&LabeledData>, config: &PipelineConfig, protocol: &EvalProtocol) -> Result<EvalReport> {
    evaluate_until(data, evaluation, config, protocol, None)
}

pub(crate) fn evaluate_until(
    data: &LabeledData,
    evaluation: Option<&LabeledData>,
    config: &PipelineConfig,
    protocol: &EvalProtocol,
    deadline: Option<Instant>,
) -> Result<EvalReport> {
    match protocol.kind {
        ProtocolKind::LeaveOneOut => leave_one_out_until(data, config, deadline),
        ProtocolKind::RegularSplit => {
            let evaluation = evaluation
                .ok_or_else(|| Error::InvalidArgument("the regular split needs an explicit evaluation set".into()))?;
            regular_split_until(data, evaluation, config, protocol, deadline)
        }
    }
}
