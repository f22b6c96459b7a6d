//! Command-line arguments. Every subcommand's arguments serialize into the
//! run manifest, minus the output directory and thread count, which do not
//! affect results.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "riskwave", version, about = "Five-year risk classification from expression profiles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Generate a synthetic cohort with known risk classes.
    Simulate(SimulateArgs),
    /// Fit the Kaplan-Meier curve and assign five-year risk labels.
    Label(LabelArgs),
    /// Write the wavelet stack, its compression and the singular values.
    Featurize(FeaturizeArgs),
    /// Fit the pipeline on every labeled patient and save the model.
    Train(TrainArgs),
    /// Score patients out of sample (leave-one-out or a regular split).
    Evaluate(EvaluateArgs),
    /// Grid search over window, rank, train fraction, hidden units and threshold.
    Search(SearchArgs),
    /// Label, evaluate and train in one go.
    Pipeline(PipelineArgs),
    /// Repeat the command recorded in a manifest and compare output hashes.
    Rerun(RerunArgs),
}

impl Command {
    pub fn output(&self) -> &Output {
        match self {
            Command::Simulate(a) => &a.output,
            Command::Label(a) => &a.output,
            Command::Featurize(a) => &a.output,
            Command::Train(a) => &a.output,
            Command::Evaluate(a) => &a.output,
            Command::Search(a) => &a.output,
            Command::Pipeline(a) => &a.output,
            Command::Rerun(a) => &a.output,
        }
    }

    pub fn output_mut(&mut self) -> &mut Output {
        match self {
            Command::Simulate(a) => &mut a.output,
            Command::Label(a) => &mut a.output,
            Command::Featurize(a) => &mut a.output,
            Command::Train(a) => &mut a.output,
            Command::Evaluate(a) => &mut a.output,
            Command::Search(a) => &mut a.output,
            Command::Pipeline(a) => &mut a.output,
            Command::Rerun(a) => &mut a.output,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct Output {
    /// Directory receiving every file the command writes.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Inputs {
    /// Expression CSV: `gene_id` then one column per patient.
    #[arg(long)]
    pub expression: PathBuf,
    /// Clinical CSV: `patient_id,survival_time_days,censored`.
    #[arg(long)]
    pub clinical: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleModeArg {
    Multi,
    Fixed,
}

/// Pipeline hyperparameters. Unset flags fall back to `--config`, then to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// JSON pipeline configuration to start from (e.g. a search's best_config.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// T: wavelet rows per gene position.
    #[arg(long)]
    pub window: Option<usize>,
    /// k: retained singular vectors.
    #[arg(long)]
    pub rank: Option<usize>,
    /// P: share of each class used for gradient steps.
    #[arg(long)]
    pub train_frac: Option<f64>,
    /// h: hidden units.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Th: scores above it are high risk.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub scale_mode: Option<ScaleModeArg>,
    /// Scale used by `--scale-mode fixed` (default 1).
    #[arg(long)]
    pub fixed_scale: Option<f64>,
    /// Mexican hat width.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Feed centered expression straight to the network (no wavelet, no SVD).
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolArg {
    Loo,
    Regular,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProtocolArgs {
    #[arg(long, value_enum, default_value_t = ProtocolArg::Loo)]
    pub protocol: ProtocolArg,
    /// Regular split: keep this many randomly drawn high-risk training patients.
    #[arg(long)]
    pub undersample: Option<usize>,
    /// Regular split: expression CSV of the evaluation patients.
    #[arg(long, requires = "eval_clinical")]
    pub eval_expression: Option<PathBuf>,
    /// Regular split: clinical CSV of the evaluation patients.
    #[arg(long, requires = "eval_expression")]
    pub eval_clinical: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 40)]
    pub genes: usize,
    #[arg(long, default_value_t = 100)]
    pub patients: usize,
    #[arg(long, default_value_t = 0.17)]
    pub low_risk_fraction: f64,
    #[arg(long)]
    pub censored_fraction: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Peak height of the low-risk bump.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Bump width in genes.
    #[arg(long)]
    pub width: Option<f64>,
    /// Bump center as a fraction of the gene axis.
    #[arg(long)]
    pub center: Option<f64>,
    /// Give every low-risk bump the same sign.
    #[arg(long)]
    pub fixed_polarity: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LabelArgs {
    #[arg(long)]
    pub clinical: PathBuf,
    /// Optional; when given, patients must match the clinical file.
    #[arg(long)]
    pub expression: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub expression: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    /// TPR - FPR.
    Youden,
    /// Highest TPR with FPR at most `--max-fpr`.
    TprAtFpr,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpaceArgs {
    /// Window sizes T to try, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub windows: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub train_fracs: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub hiddens: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Youden)]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.2)]
    pub max_fpr: f64,
    /// Wall-clock seconds allowed per combination. Outputs then depend on machine speed.
    #[arg(long)]
    pub budget_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PipelineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    /// Also evaluate on raw expression and report both AUCs.
    #[arg(long)]
    pub ablation: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// manifest.json written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}
