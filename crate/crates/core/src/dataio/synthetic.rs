//! Seeded synthetic cohorts with a known risk split.
//!
//! Every patient gets i.i.d. Gaussian noise across genes. Low-risk patients
//! additionally carry a smooth Gaussian bump over a contiguous band of gene
//! indices, which is the kind of localized structure the wavelet stage picks
//! up. By default each low-risk patient's bump has a random sign, so the two
//! classes share the same mean and differ only in band energy. Survival times are drawn so that the five-year labeling rule recovers
//! the generating labels exactly.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ClinicalRecord, Cohort};
use crate::error::{Error, Result};
use crate::survival::{label_records, Risk, FIVE_YEARS_DAYS};

/// Class signal added to low-risk expression vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEffect {
    /// Band center as a fraction of the gene axis, in `[0, 1]`.
    pub center: f64,
    /// Standard deviation of the bump, in genes.
    pub width: f64,
    /// Peak height of the bump, in expression units.
    pub amplitude: f64,
    /// Flip the bump's sign per patient with probability one half.
    pub random_polarity: bool,
}

impl Default for SpectralEffect {
    fn default() -> Self {
        SpectralEffect { center: 0.5, width: 3.0, amplitude: 0.25, random_polarity: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_genes: usize,
    pub n_patients: usize,
    pub low_risk_fraction: f64,
    pub effect: SpectralEffect,
    /// Fraction of patients marked censored, in `[0, 1)`.
    pub censored_fraction: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    pub true_labels: Vec<Risk>,
}

const LOW_RISK_DAYS: (f64, f64) = (1900.0, 4500.0);
const HIGH_RISK_DAYS: (f64, f64) = (60.0, 1750.0);
const MAX_CENSOR_ADJUSTMENTS: usize = 64;

impl SyntheticSpec {
    pub fn new(n_genes: usize, n_patients: usize, low_risk_fraction: f64, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_genes,
            n_patients,
            low_risk_fraction,
            effect: SpectralEffect::default(),
            censored_fraction: 0.3,
            noise_sd: 0.1,
            seed,
        }
    }

    pub fn with_effect(mut self, effect: SpectralEffect) -> Self {
        self.effect = effect;
        self
    }

    pub fn with_censored_fraction(mut self, fraction: f64) -> Self {
        self.censored_fraction = fraction;
        self
    }

    pub fn with_noise_sd(mut self, sd: f64) -> Self {
        self.noise_sd = sd;
        self
    }

    pub fn n_low_risk(&self) -> usize {
        (self.low_risk_fraction * self.n_patients as f64).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n_genes < 8 || self.n_patients < 10 {
            return Err(Error::InvalidArgument(format!(
                "synthetic cohorts need at least 8 genes and 10 patients, got {} x {}",
                self.n_genes, self.n_patients
            )));
        }
        if !(self.low_risk_fraction > 0.0 && self.low_risk_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "low-risk fraction must lie in (0, 1), got {}",
                self.low_risk_fraction
            )));
        }
        let n_low = self.n_low_risk();
        if n_low == 0 || n_low == self.n_patients {
            return Err(Error::InvalidArgument(format!(
                "low-risk fraction {} of {} patients leaves a single class",
                self.low_risk_fraction, self.n_patients
            )));
        }
        if !(0.0..1.0).contains(&self.censored_fraction) {
            return Err(Error::InvalidArgument(format!(
                "censored fraction must lie in [0, 1), got {}",
                self.censored_fraction
            )));
        }
        let e = &self.effect;
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite())
            || !(0.0..=1.0).contains(&e.center)
            || !(e.width > 0.0)
            || !e.amplitude.is_finite()
        {
            return Err(Error::InvalidArgument("invalid noise level or effect descriptor".into()));
        }
        Ok(())
    }

    /// Bump profile over gene indices `0..n_genes`.
    pub fn effect_profile(&self) -> Vec<f64> {
        let e = &self.effect;
        let center = e.center * (self.n_genes - 1) as f64;
        (0..self.n_genes)
            .map(|i| {
                let d = i as f64 - center;
                e.amplitude * (-d * d / (2.0 * e.width * e.width)).exp()
            })
            .collect()
    }

    pub fn generate(&self) -> Result<SyntheticCohort> {
        self.validate()?;
        let (m, n) = (self.n_genes, self.n_patients);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut labels = vec![Risk::High; n];
        for &j in &order[..self.n_low_risk()] {
            labels[j] = Risk::Low;
        }

        let profile = self.effect_profile();
        let signs: Vec<f64> =
            (0..n).map(|_| if self.effect.random_polarity && rng.random::<bool>() { -1.0 } else { 1.0 }).collect();
        let mut expression = DMatrix::zeros(m, n);
        for j in 0..n {
            for i in 0..m {
                let noise: f64 = rng.sample(StandardNormal);
                let signal = if labels[j] == Risk::Low { signs[j] * profile[i] } else { 0.0 };
                expression[(i, j)] = self.noise_sd * noise + signal;
            }
        }

        let latent: Vec<f64> = labels
            .iter()
            .map(|risk| {
                let (lo, hi) = match risk {
                    Risk::Low => LOW_RISK_DAYS,
                    Risk::High => HIGH_RISK_DAYS,
                };
                rng.random_range(lo..hi).round()
            })
            .collect();

        let n_censored = ((self.censored_fraction * n as f64).round() as usize).min(n - 1);
        order.shuffle(&mut rng);
        let mut censored = vec![false; n];
        for &j in &order[..n_censored] {
            censored[j] = true;
        }

        let mut times: Vec<f64> = (0..n)
            .map(|j| match (censored[j], labels[j]) {
                (false, _) => latent[j],
                // Still observed past five years, so the direct rule applies.
                (true, Risk::Low) => rng.random_range(FIVE_YEARS_DAYS..=latent[j]).round(),
                (true, Risk::High) => (latent[j] * rng.random::<f64>()).round().max(1.0),
            })
            .collect();

        let ids: Vec<String> = (1..=n).map(|j| format!("P{j:03}")).collect();
        let records = |times: &[f64], censored: &[bool]| -> Vec<ClinicalRecord> {
            (0..n)
                .map(|j| ClinicalRecord { patient_id: ids[j].clone(), survival_time: times[j], censored: censored[j] })
                .collect()
        };

        // Censored high-risk patients may look low risk from the curve if censored
        // late; move them earlier, and as a last resort reveal their event time.
        for attempt in 0..=MAX_CENSOR_ADJUSTMENTS {
            let (fitted, _) = label_records(&records(&times, &censored))?;
            let mismatched: Vec<usize> = (0..n).filter(|&j| fitted[j].risk != labels[j]).collect();
            if mismatched.is_empty() {
                break;
            }
            for j in mismatched {
                if attempt == MAX_CENSOR_ADJUSTMENTS {
                    censored[j] = false;
                    times[j] = latent[j];
                } else {
                    times[j] = (times[j] / 2.0).floor().max(1.0);
                }
            }
        }

        let patients = records(&times, &censored);
        let (fitted, _) = label_records(&patients)?;
        if fitted.iter().zip(&labels).any(|(f, l)| f.risk != *l) {
            return Err(Error::InvalidArgument(
                "censoring pattern could not be made consistent with the labels; lower the censored fraction".into(),
            ));
        }

        let gene_ids = (1..=m).map(|i| format!("G{i:03}")).collect();
        let cohort = Cohort::new(expression, gene_ids, patients)?;
        Ok(SyntheticCohort { cohort, true_labels: labels })
    }
}

/// Synthetic cohort with default noise and censoring.
pub fn generate_synthetic_cohort(
    n_genes: usize,
    n_patients: usize,
    low_risk_fraction: f64,
    effect: SpectralEffect,
    seed: u64,
) -> Result<SyntheticCohort> {
    SyntheticSpec::new(n_genes, n_patients, low_risk_fraction, seed).with_effect(effect).generate()
}
