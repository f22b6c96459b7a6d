//! Risk stratification from gene expression: Kaplan-Meier labeling, Mexican-hat
//! wavelet expansion, SVD compression and a small neural classifier, with
//! leave-one-out and undersampled-split evaluation.
//!
//! ```
//! use riskwave::{generate_synthetic_cohort, label_cohort, SpectralEffect};
//!
//! let synthetic = generate_synthetic_cohort(16, 30, 0.2, SpectralEffect::default(), 1).unwrap();
//! let (labels, curve) = label_cohort(&synthetic.cohort).unwrap();
//! assert_eq!(labels.len(), 30);
//! assert!(curve.cdf_values().windows(2).all(|w| w[0] <= w[1]));
//! ```
//!
//! The guide in `book/` walks through each stage; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod compress;
pub mod dataio;
pub mod error;
pub mod evaluate;
pub mod neuralnet;
pub mod pipeline;
pub mod plot;
pub mod search;
pub mod survival;
pub mod wavelet;

pub use compress::{center_rows, fit_compressor, sorted_svd, CompressedFeatures};
pub use dataio::{
    generate_synthetic_cohort, load_cohort, read_clinical, read_expression, ClinicalRecord, Cohort, SpectralEffect,
    SyntheticCohort, SyntheticSpec,
};
pub use error::{Error, Result};
pub use evaluate::{classify, leave_one_out, rates, regular_split, roc, EvalProtocol, EvalReport, RocCurve};
pub use neuralnet::{init_model, train, NetConfig, NetModel};
pub use pipeline::{FeatureMode, FittedPipeline, LabeledData, PipelineConfig};
pub use search::{ablation, grid_search, Objective, SearchOptions, SearchResult, SearchSpace};
pub use survival::{label_cohort, label_patient, KmCurve, Risk, RiskLabel};
pub use wavelet::{expand_cohort, MexicanHat, ScaleMode, WaveletConfig, WaveletStack};

/// Matrix types used throughout the API.
pub use nalgebra;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/survival.md")]
    mod survival {}
    #[doc = include_str!("../../../book/src/wavelet.md")]
    mod wavelet {}
    #[doc = include_str!("../../../book/src/compression.md")]
    mod compression {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
