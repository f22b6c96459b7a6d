//! Kaplan-Meier estimation under right-censoring and the five-year risk rule.
//!
//! Patients who survive past five years are low risk and patients who die
//! before five years are high risk. A patient censored before five years is
//! labeled from the fitted curve: the probability of reaching five years given
//! survival up to the censoring time,
//!
//! ```text
//! P(ST >= 5y | ST >= t) = (1 - P(ST <= 5y)) / (1 - P(ST <= t))
//! ```
//!
//! is compared with [`LOW_RISK_MIN_CONDITIONAL`]. Equality counts as low risk.

use serde::{Deserialize, Serialize};

use crate::dataio::{ClinicalRecord, Cohort};
use crate::error::{Error, Result};

/// Five years expressed in days (5 × 365.25, rounded).
pub const FIVE_YEARS_DAYS: f64 = 1826.0;

/// Minimum conditional five-year survival for a censored patient to be low risk.
pub const LOW_RISK_MIN_CONDITIONAL: f64 = 0.75;

/// Policy for a survival time exactly equal to [`FIVE_YEARS_DAYS`]: low risk.
pub const HORIZON_EQUALITY_IS_LOW_RISK: bool = true;

/// Binary risk class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Risk {
    Low,
    High,
}

impl Risk {
    /// Network target encoding: high risk is 1 so that a large output means high risk.
    pub fn target(self) -> f64 {
        match self {
            Risk::Low => 0.0,
            Risk::High => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Risk::Low => "low",
            Risk::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<Risk> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" | "lowrisk" | "low_risk" => Some(Risk::Low),
            "high" | "highrisk" | "high_risk" => Some(Risk::High),
            _ => None,
        }
    }
}

/// How a label was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelBasis {
    /// Observed past five years, or died before five years.
    DirectRule,
    /// Censored before five years; decided by the conditional survival probability.
    ConditionalCdf,
    /// Censored before five years where the curve has already reached 1, so the
    /// conditional probability does not exist. Labeled high risk.
    UndefinedConditional,
}

impl LabelBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelBasis::DirectRule => "direct",
            LabelBasis::ConditionalCdf => "conditional_cdf",
            LabelBasis::UndefinedConditional => "undefined_conditional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskLabel {
    pub risk: Risk,
    pub basis: LabelBasis,
    /// Present exactly when `basis` is [`LabelBasis::ConditionalCdf`].
    pub conditional_prob: Option<f64>,
}

/// Kaplan-Meier estimate of the survival-time CDF, `P(ST <= t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    event_times: Vec<f64>,
    cdf: Vec<f64>,
    n_at_risk: Vec<usize>,
    n_events: Vec<usize>,
}

/// Survival kept as an exact fraction while it fits, so small cohorts give
/// exactly rounded step values.
#[derive(Clone, Copy)]
enum Survival {
    Exact { num: u128, den: u128 },
    Float(f64),
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Survival {
    fn times(self, survivors: usize, at_risk: usize) -> Survival {
        match self {
            Survival::Exact { num, den } => {
                let (s, r) = (survivors as u128, at_risk as u128);
                match (num.checked_mul(s), den.checked_mul(r)) {
                    (Some(n), Some(d)) => {
                        let g = gcd(n, d).max(1);
                        Survival::Exact { num: n / g, den: d / g }
                    }
                    _ => Survival::Float(num as f64 / den as f64 * (s as f64 / r as f64)),
                }
            }
            Survival::Float(v) => Survival::Float(v * (1.0 - (at_risk - survivors) as f64 / at_risk as f64)),
        }
    }

    fn cdf(self) -> f64 {
        match self {
            Survival::Exact { num, den } => (den - num) as f64 / den as f64,
            Survival::Float(v) => (1.0 - v).clamp(0.0, 1.0),
        }
    }
}

impl KmCurve {
    /// Product-limit fit. Censored observations leave the risk set without a
    /// step; at tied times events are counted before censorings.
    pub fn fit(records: &[ClinicalRecord]) -> Result<KmCurve> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("no clinical records".into()));
        }
        if records.iter().all(|r| r.censored) {
            return Err(Error::NoEvents);
        }
        for r in records {
            if !(r.survival_time.is_finite() && r.survival_time >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "patient {}: survival time {} is not a non-negative number",
                    r.patient_id, r.survival_time
                )));
            }
        }

        let mut obs: Vec<(f64, bool)> = records.iter().map(|r| (r.survival_time, r.censored)).collect();
        obs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut curve = KmCurve {
            event_times: Vec::new(),
            cdf: Vec::new(),
            n_at_risk: Vec::new(),
            n_events: Vec::new(),
        };
        let mut survival = Survival::Exact { num: 1, den: 1 };
        let mut at_risk = obs.len();
        let mut i = 0;
        while i < obs.len() {
            let t = obs[i].0;
            let mut events = 0;
            let mut censored = 0;
            while i < obs.len() && obs[i].0 == t {
                if obs[i].1 {
                    censored += 1;
                } else {
                    events += 1;
                }
                i += 1;
            }
            if events > 0 {
                survival = survival.times(at_risk - events, at_risk);
                curve.event_times.push(t);
                curve.cdf.push(survival.cdf());
                curve.n_at_risk.push(at_risk);
                curve.n_events.push(events);
            }
            at_risk -= events + censored;
        }
        Ok(curve)
    }

    /// Builds a curve from explicit steps, e.g. to probe the labeling rule.
    pub fn from_steps(event_times: Vec<f64>, cdf: Vec<f64>) -> Result<KmCurve> {
        if event_times.len() != cdf.len() {
            return Err(Error::DimensionMismatch {
                expected: event_times.len(),
                actual: cdf.len(),
            });
        }
        if event_times.windows(2).any(|w| !(w[0] < w[1])) || event_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidArgument("event times must be non-negative and strictly increasing".into()));
        }
        if cdf.windows(2).any(|w| w[0] > w[1]) || cdf.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("cdf must be non-decreasing within [0, 1]".into()));
        }
        let n = event_times.len();
        Ok(KmCurve {
            event_times,
            cdf,
            n_at_risk: vec![0; n],
            n_events: vec![0; n],
        })
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn n_at_risk(&self) -> &[usize] {
        &self.n_at_risk
    }

    pub fn n_events(&self) -> &[usize] {
        &self.n_events
    }

    /// Right-continuous evaluation of `P(ST <= t)`.
    pub fn cdf_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("time must be non-negative, got {t}")));
        }
        let idx = self.event_times.partition_point(|&e| e <= t);
        Ok(if idx == 0 { 0.0 } else { self.cdf[idx - 1] })
    }

    /// `P(ST >= horizon | ST >= t)` for `0 <= t < horizon`.
    pub fn conditional_survival(&self, t: f64, horizon: f64) -> Result<f64> {
        if !(t < horizon) {
            return Err(Error::InvalidArgument(format!(
                "conditioning time {t} must precede horizon {horizon}"
            )));
        }
        let at_t = self.cdf_at(t)?;
        if at_t >= 1.0 {
            return Err(Error::UndefinedConditional { t });
        }
        let at_horizon = self.cdf_at(horizon)?;
        Ok(((1.0 - at_horizon) / (1.0 - at_t)).clamp(0.0, 1.0))
    }
}

/// Applies the five-year rule to one patient against a cohort-wide curve.
pub fn label_patient(curve: &KmCurve, record: &ClinicalRecord) -> Result<RiskLabel> {
    let t = record.survival_time;
    let past_horizon = t > FIVE_YEARS_DAYS || (HORIZON_EQUALITY_IS_LOW_RISK && t == FIVE_YEARS_DAYS);
    if past_horizon {
        return Ok(RiskLabel { risk: Risk::Low, basis: LabelBasis::DirectRule, conditional_prob: None });
    }
    if !record.censored {
        return Ok(RiskLabel { risk: Risk::High, basis: LabelBasis::DirectRule, conditional_prob: None });
    }
    match curve.conditional_survival(t, FIVE_YEARS_DAYS) {
        Ok(p) => Ok(RiskLabel {
            risk: if p >= LOW_RISK_MIN_CONDITIONAL { Risk::Low } else { Risk::High },
            basis: LabelBasis::ConditionalCdf,
            conditional_prob: Some(p),
        }),
        Err(Error::UndefinedConditional { .. }) => Ok(RiskLabel {
            risk: Risk::High,
            basis: LabelBasis::UndefinedConditional,
            conditional_prob: None,
        }),
        Err(e) => Err(e),
    }
}

/// Fits one curve on all records and labels each of them.
pub fn label_records(records: &[ClinicalRecord]) -> Result<(Vec<RiskLabel>, KmCurve)> {
    let curve = KmCurve::fit(records)?;
    let labels = records.iter().map(|r| label_patient(&curve, r)).collect::<Result<Vec<_>>>()?;
    Ok((labels, curve))
}

pub fn label_cohort(cohort: &Cohort) -> Result<(Vec<RiskLabel>, KmCurve)> {
    label_records(cohort.patients())
}
