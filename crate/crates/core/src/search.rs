//! Exhaustive grid search over window size, rank, train fraction, hidden units
//! and threshold, plus the with/without expansion ablation.
//!
//! Each `(T, k, P, h)` combination is evaluated once; every threshold is then
//! read off the same scores, so the threshold axis costs nothing extra.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{evaluate_until, EvalProtocol, EvalReport};
use crate::pipeline::{FeatureMode, LabeledData, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub windows: Vec<usize>,
    pub ranks: Vec<usize>,
    pub train_fractions: Vec<f64>,
    /// Combinations with more hidden units than rank are dropped.
    pub hidden_units: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            windows: vec![3, 5, 7],
            ranks: vec![3, 5, 7, 9],
            train_fractions: vec![0.7, 0.8],
            hidden_units: (3..=9).collect(),
            thresholds: (10..=19).map(|i| i as f64 * 0.05).collect(),
            seed: 0,
        }
    }
}

/// One `(T, k, P, h)` combination; thresholds are swept separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub window: usize,
    pub rank: usize,
    pub train_fraction: f64,
    pub hidden_units: usize,
}

impl SearchSpace {
    /// Every `(T, k, P, h)` with `h <= k`, in a fixed order.
    pub fn combinations(&self) -> Vec<Combination> {
        let mut out = Vec::new();
        for &window in &self.windows {
            for &rank in &self.ranks {
                for &train_fraction in &self.train_fractions {
                    for &hidden_units in self.hidden_units.iter().filter(|&&h| h <= rank) {
                        out.push(Combination { window, rank, train_fraction, hidden_units });
                    }
                }
            }
        }
        out
    }

    /// Number of full `(T, k, P, h, Th)` tuples.
    pub fn size(&self) -> usize {
        self.combinations().len() * self.thresholds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.size() == 0 {
            return Err(Error::EmptySearchSpace);
        }
        if let Some(th) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidArgument(format!("threshold {th} outside (0, 1)")));
        }
        Ok(())
    }
}

/// What the search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case")]
pub enum Objective {
    /// TPR − FPR.
    Youden,
    /// Highest TPR among points with FPR at most `max_fpr`.
    MaxTprAtFpr { max_fpr: f64 },
}

impl Objective {
    /// Larger is better. Infeasible points of the constrained objective fall below every feasible one.
    pub fn value(&self, tpr: f64, fpr: f64) -> f64 {
        match *self {
            Objective::Youden => tpr - fpr,
            Objective::MaxTprAtFpr { max_fpr } => {
                if fpr <= max_fpr {
                    tpr
                } else {
                    -fpr
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tpr: f64,
    pub fpr: f64,
    pub auc: f64,
}

impl Metrics {
    pub fn youden(&self) -> f64 {
        self.tpr - self.fpr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok(Metrics),
    Failed(String),
    TimedOut,
}

impl RowStatus {
    pub fn label(&self) -> String {
        match self {
            RowStatus::Ok(_) => "ok".into(),
            RowStatus::Failed(reason) => format!("failed: {reason}"),
            RowStatus::TimedOut => "timed_out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub combination: Combination,
    pub threshold: f64,
    pub status: RowStatus,
}

impl LeaderboardRow {
    pub fn metrics(&self) -> Option<&Metrics> {
        match &self.status {
            RowStatus::Ok(m) => Some(m),
            _ => None,
        }
    }
}

/// Orders evaluated rows best first: objective, then higher TPR, lower k,
/// lower h, lower T, and finally lower P and lower threshold so the order is total.
pub fn compare_rows(objective: &Objective, a: &LeaderboardRow, b: &LeaderboardRow) -> Ordering {
    let (ma, mb) = match (a.metrics(), b.metrics()) {
        (Some(ma), Some(mb)) => (ma, mb),
        (Some(_), None) => return Ordering::Less,
        (None, Some(_)) => return Ordering::Greater,
        (None, None) => return Ordering::Equal,
    };
    let (ca, cb) = (&a.combination, &b.combination);
    objective
        .value(mb.tpr, mb.fpr)
        .total_cmp(&objective.value(ma.tpr, ma.fpr))
        .then(mb.tpr.total_cmp(&ma.tpr))
        .then(ca.rank.cmp(&cb.rank))
        .then(ca.hidden_units.cmp(&cb.hidden_units))
        .then(ca.window.cmp(&cb.window))
        .then(ca.train_fraction.total_cmp(&cb.train_fraction))
        .then(a.threshold.total_cmp(&b.threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: LeaderboardRow,
    /// The pipeline configuration of `best`, ready to reuse.
    pub best_config: PipelineConfig,
    pub best_metrics: Metrics,
    /// Evaluated rows, best first.
    pub leaderboard: Vec<LeaderboardRow>,
    /// Rows that failed or ran out of time, each with its reason.
    pub failures: Vec<LeaderboardRow>,
    pub objective: Objective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Supplies everything the space does not vary: wavelet shape, learning rate, epochs, patience.
    pub base: PipelineConfig,
    pub protocol: EvalProtocol,
    pub objective: Objective,
    /// Wall-clock cap per combination; late combinations are marked timed out.
    pub budget: Option<Duration>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            base: PipelineConfig::default(),
            protocol: EvalProtocol::leave_one_out(),
            objective: Objective::Youden,
            budget: None,
        }
    }
}

fn config_for(base: &PipelineConfig, c: &Combination, threshold: f64, seed: u64) -> PipelineConfig {
    let mut config = *base;
    config.wavelet.window = c.window;
    config.rank = c.rank;
    config.train_fraction = c.train_fraction;
    config.hidden_units = c.hidden_units;
    config.threshold = threshold;
    config.seed = seed;
    config
}

/// Evaluates every combination in `space` under `options.protocol`.
///
/// All combinations share the space seed, so they differ only in their
/// hyperparameters. A failing combination is recorded and the sweep continues.
pub fn grid_search(data: &LabeledData, evaluation: Option<&LabeledData>, space: &SearchSpace, options: &SearchOptions) -> Result<SearchResult> {
    space.validate()?;
    let mut leaderboard = Vec::new();
    let mut failures = Vec::new();
    for c in space.combinations() {
        let config = config_for(&options.base, &c, space.thresholds[0], space.seed);
        let deadline = options.budget.map(|b| Instant::now() + b);
        let outcome = evaluate_until(data, evaluation, &config, &options.protocol, deadline);
        for &threshold in &space.thresholds {
            let status = match &outcome {
                Ok(report) => row_metrics(report, threshold).map_or_else(|e| RowStatus::Failed(e.to_string()), RowStatus::Ok),
                Err(Error::TimedOut) => RowStatus::TimedOut,
                Err(e) => RowStatus::Failed(e.to_string()),
            };
            let row = LeaderboardRow { combination: c, threshold, status };
            if row.metrics().is_some() {
                leaderboard.push(row);
            } else {
                failures.push(row);
            }
        }
    }
    let objective = options.objective;
    leaderboard.sort_by(|a, b| compare_rows(&objective, a, b));
    let best = leaderboard
        .first()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("all {} combinations failed", failures.len())))?;
    let best_metrics = *best.metrics().expect("leaderboard rows carry metrics");
    let best_config = config_for(&options.base, &best.combination, best.threshold, space.seed);
    Ok(SearchResult { best, best_config, best_metrics, leaderboard, failures, objective })
}

fn row_metrics(report: &EvalReport, threshold: f64) -> Result<Metrics> {
    let (tpr, fpr) = report.rates_at(threshold)?;
    Ok(Metrics { tpr, fpr, auc: report.roc.auc })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ablation {
    pub auc_with: f64,
    pub auc_without: f64,
    pub with_expansion: EvalReport,
    pub without_expansion: EvalReport,
}

/// Runs `config` as given and again on raw centered expression, with the same protocol and seeds.
pub fn ablation(data: &LabeledData, evaluation: Option<&LabeledData>, config: &PipelineConfig, protocol: &EvalProtocol) -> Result<Ablation> {
    let with_config = PipelineConfig { feature_mode: FeatureMode::WaveletSvd, ..*config };
    let raw_config = PipelineConfig { feature_mode: FeatureMode::Raw, ..*config };
    let with_expansion = evaluate_until(data, evaluation, &with_config, protocol, None)?;
    let without_expansion = evaluate_until(data, evaluation, &raw_config, protocol, None)?;
    Ok(Ablation {
        auc_with: with_expansion.roc.auc,
        auc_without: without_expansion.roc.auc,
        with_expansion,
        without_expansion,
    })
}
