//! One function per subcommand. Each reads its inputs (hashing them), writes
//! its outputs through [`OutDir`] and leaves a manifest behind.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Duration;

use riskwave::dataio::{write_clinical_to, write_expression_to};
use riskwave::evaluate::{evaluate, EvalReport};
use riskwave::plot::{km_svg, roc_svg};
use riskwave::search::Objective;
use riskwave::survival::{label_patient, FIVE_YEARS_DAYS};
use riskwave::wavelet::expand_cohort;
use riskwave::{
    ablation, classify, fit_compressor, grid_search, label_cohort, load_cohort, read_expression, ClinicalRecord, Cohort,
    EvalProtocol, FeatureMode, FittedPipeline, KmCurve, LabeledData, MexicanHat, Risk, RiskLabel, ScaleMode,
    SearchOptions, SearchSpace, SpectralEffect, SyntheticSpec,
};
use serde_json::{json, Value};

use crate::args::{
    Command, EvaluateArgs, FeaturizeArgs, Inputs, LabelArgs, ModelArgs, ObjectiveArg, PipelineArgs, ProtocolArg,
    ProtocolArgs, RerunArgs, ScaleModeArg, SearchArgs, SimulateArgs, TrainArgs,
};
use crate::output::{num, sha256_hex, CliResult, Failure, InputFile, Manifest, OutDir};

/// A finished command: its manifest plus a few headline numbers for stdout.
pub struct Outcome {
    pub manifest: Manifest,
    pub out: std::path::PathBuf,
    pub summary: Value,
}

struct Run {
    out: OutDir,
    inputs: Vec<InputFile>,
    seed: Option<u64>,
    config: Value,
    summary: Value,
}

impl Run {
    /// Reads and hashes an input file; the bytes are returned for callers that parse them directly.
    fn input(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
        if !self.inputs.iter().any(|f| f.path == path) {
            self.inputs.push(InputFile { path: path.to_path_buf(), sha256: sha256_hex(&bytes) });
        }
        Ok(bytes)
    }
}

pub fn execute(command: &Command) -> CliResult<Outcome> {
    if let Command::Rerun(args) = command {
        return rerun(args);
    }
    let out_path = command.output().out.clone();
    let mut run = Run { out: OutDir::create(&out_path)?, inputs: Vec::new(), seed: None, config: Value::Null, summary: Value::Null };
    match command {
        Command::Simulate(a) => simulate(a, &mut run)?,
        Command::Label(a) => label(a, &mut run)?,
        Command::Featurize(a) => featurize(a, &mut run)?,
        Command::Train(a) => train(a, &mut run)?,
        Command::Evaluate(a) => evaluate_cmd(a, &mut run)?,
        Command::Search(a) => search(a, &mut run)?,
        Command::Pipeline(a) => pipeline(a, &mut run)?,
        Command::Rerun(_) => unreachable!(),
    }
    let manifest = Manifest {
        tool: "riskwave".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.clone(),
        seed: run.seed,
        config: run.config,
        inputs: run.inputs,
        outputs: Default::default(),
    };
    let manifest = run.out.finish(manifest)?;
    Ok(Outcome { manifest, out: out_path, summary: run.summary })
}

fn warn(message: &str) {
    eprintln!("{}", json!({ "warning": message }));
}

fn risk_name(r: Risk) -> String {
    r.as_str().to_string()
}

fn resolve_config(model: &ModelArgs, run: &mut Run) -> CliResult<riskwave::PipelineConfig> {
    let mut c: riskwave::PipelineConfig = match &model.config {
        Some(path) => {
            let bytes = run.input(path)?;
            serde_json::from_slice(&bytes).map_err(|e| Failure::new("parse", format!("{}: {e}", path.display())))?
        }
        None => riskwave::PipelineConfig::default(),
    };
    if let Some(v) = model.seed {
        c.seed = v;
    }
    if let Some(v) = model.window {
        c.wavelet.window = v;
    }
    if let Some(v) = model.rank {
        c.rank = v;
    }
    if let Some(v) = model.train_frac {
        c.train_fraction = v;
    }
    if let Some(v) = model.hidden {
        c.hidden_units = v;
    }
    if let Some(v) = model.threshold {
        c.threshold = v;
    }
    if let Some(v) = model.sigma {
        c.wavelet.hat = MexicanHat::new(v)?;
    }
    c.wavelet.scale_mode = match (model.scale_mode, model.fixed_scale) {
        (Some(ScaleModeArg::Multi), Some(_)) => return Err(Failure::usage("--fixed-scale needs --scale-mode fixed")),
        (Some(ScaleModeArg::Multi), None) => ScaleMode::Multi,
        (Some(ScaleModeArg::Fixed), scale) => ScaleMode::Fixed { scale: scale.unwrap_or(1.0) },
        (None, Some(scale)) => ScaleMode::Fixed { scale },
        (None, None) => c.wavelet.scale_mode,
    };
    if let Some(v) = model.learning_rate {
        c.learning_rate = v;
    }
    if let Some(v) = model.epochs {
        c.max_epochs = v;
    }
    if let Some(v) = model.patience {
        c.patience = v;
    }
    if model.raw {
        c.feature_mode = FeatureMode::Raw;
    }
    c.validate()?;
    run.seed = Some(c.seed);
    run.config = serde_json::to_value(c)?;
    Ok(c)
}

fn load_labeled(inputs: &Inputs, run: &mut Run) -> CliResult<(Cohort, Vec<RiskLabel>, KmCurve)> {
    run.input(&inputs.expression)?;
    run.input(&inputs.clinical)?;
    let cohort = load_cohort(&inputs.expression, &inputs.clinical)?;
    let (labels, curve) = label_cohort(&cohort)?;
    Ok((cohort, labels, curve))
}

fn labeled_data(cohort: &Cohort, labels: &[RiskLabel]) -> CliResult<LabeledData> {
    Ok(LabeledData::from_cohort(cohort, labels.iter().map(|l| l.risk).collect())?)
}

fn write_labels(run: &mut Run, patients: &[ClinicalRecord], labels: &[RiskLabel], curve: &KmCurve) -> CliResult<()> {
    run.out.write_csv(
        "labels.csv",
        &["patient_id", "label", "basis", "conditional_prob"],
        patients.iter().zip(labels).map(|(p, l)| {
            vec![
                p.patient_id.clone(),
                risk_name(l.risk),
                l.basis.as_str().to_string(),
                l.conditional_prob.map(num).unwrap_or_default(),
            ]
        }),
    )?;
    run.out.write_csv(
        "km_curve.csv",
        &["t_days", "cdf", "n_at_risk", "n_events"],
        (0..curve.event_times().len()).map(|i| {
            vec![
                num(curve.event_times()[i]),
                num(curve.cdf_values()[i]),
                curve.n_at_risk()[i].to_string(),
                curve.n_events()[i].to_string(),
            ]
        }),
    )?;
    run.out.write("km_curve.svg", km_svg(curve).as_bytes())
}

fn label_summary(labels: &[RiskLabel], curve: &KmCurve) -> CliResult<Value> {
    let low = labels.iter().filter(|l| l.risk == Risk::Low).count();
    Ok(json!({
        "patients": labels.len(),
        "low_risk": low,
        "high_risk": labels.len() - low,
        "cdf_at_five_years": curve.cdf_at(FIVE_YEARS_DAYS)?,
    }))
}

fn simulate(a: &SimulateArgs, run: &mut Run) -> CliResult<()> {
    let defaults = SpectralEffect::default();
    let effect = SpectralEffect {
        center: a.center.unwrap_or(defaults.center),
        width: a.width.unwrap_or(defaults.width),
        amplitude: a.amplitude.unwrap_or(defaults.amplitude),
        random_polarity: !a.fixed_polarity,
    };
    let mut spec = SyntheticSpec::new(a.genes, a.patients, a.low_risk_fraction, a.seed).with_effect(effect);
    if let Some(f) = a.censored_fraction {
        spec = spec.with_censored_fraction(f);
    }
    if let Some(sd) = a.noise_sd {
        spec = spec.with_noise_sd(sd);
    }
    let synthetic = spec.generate()?;
    let cohort = &synthetic.cohort;

    let mut buf = Vec::new();
    write_expression_to(&mut buf, Path::new("expression.csv"), cohort.gene_ids(), &cohort.patient_ids(), cohort.expression())?;
    run.out.write("expression.csv", &buf)?;
    let mut buf = Vec::new();
    write_clinical_to(&mut buf, Path::new("clinical.csv"), cohort.patients())?;
    run.out.write("clinical.csv", &buf)?;
    run.out.write_csv(
        "true_labels.csv",
        &["patient_id", "label"],
        cohort.patients().iter().zip(&synthetic.true_labels).map(|(p, &r)| vec![p.patient_id.clone(), risk_name(r)]),
    )?;

    run.seed = Some(a.seed);
    run.config = serde_json::to_value(&spec)?;
    run.summary = json!({ "genes": a.genes, "patients": a.patients, "low_risk": spec.n_low_risk() });
    Ok(())
}

fn label(a: &LabelArgs, run: &mut Run) -> CliResult<()> {
    run.input(&a.clinical)?;
    let patients = match &a.expression {
        Some(expression) => {
            run.input(expression)?;
            load_cohort(expression, &a.clinical)?.patients().to_vec()
        }
        None => riskwave::read_clinical(&a.clinical)?,
    };
    let (labels, curve) = riskwave::survival::label_records(&patients)?;
    write_labels(run, &patients, &labels, &curve)?;
    let summary = label_summary(&labels, &curve)?;
    run.out.write_json("summary.json", &summary)?;
    run.summary = summary;
    Ok(())
}

fn featurize(a: &FeaturizeArgs, run: &mut Run) -> CliResult<()> {
    if a.model.raw {
        return Err(Failure::usage("featurize writes wavelet features; --raw does not apply"));
    }
    let config = resolve_config(&a.model, run)?;
    run.input(&a.expression)?;
    let (genes, patients, matrix) = read_expression(&a.expression)?;
    let stack = expand_cohort(&matrix, &config.wavelet)?;
    let compressed = fit_compressor(&stack.coefficients, config.rank)?;

    let mut header = vec!["coefficient"];
    header.extend(patients.iter().map(String::as_str));
    let t = stack.window_size;
    let h = &stack.coefficients;
    run.out.write_csv(
        "stack.csv",
        &header,
        (0..h.nrows()).map(|r| {
            let mut row = vec![format!("{}:{}", genes[r / t], r % t + 1)];
            row.extend(h.row(r).iter().map(|&v| num(v)));
            row
        }),
    )?;
    header[0] = "component";
    let z = &compressed.features;
    run.out.write_csv(
        "compressed.csv",
        &header,
        (0..z.nrows()).map(|r| {
            let mut row = vec![format!("pc{}", r + 1)];
            row.extend(z.row(r).iter().map(|&v| num(v)));
            row
        }),
    )?;
    run.out.write_csv(
        "singular_values.csv",
        &["component", "singular_value", "cumulative_energy"],
        compressed
            .spectrum
            .iter()
            .enumerate()
            .map(|(i, &s)| vec![(i + 1).to_string(), num(s), num(compressed.retained_energy(i + 1))]),
    )?;
    run.summary = json!({
        "stack_rows": h.nrows(),
        "patients": h.ncols(),
        "rank": config.rank,
        "retained_energy": compressed.retained_energy(config.rank),
    });
    Ok(())
}

fn fit_final(run: &mut Run, data: &LabeledData, config: &riskwave::PipelineConfig) -> CliResult<FittedPipeline> {
    let fitted = FittedPipeline::fit(data, config, config.seed)?;
    run.out.write("model.json", format!("{}\n", fitted.to_json()?).as_bytes())?;
    run.out.write_csv(
        "training_log.csv",
        &["epoch", "train_loss", "val_loss"],
        fitted
            .net
            .train_log
            .iter()
            .map(|e| vec![e.epoch.to_string(), num(e.train_loss), e.val_loss.map(num).unwrap_or_default()]),
    )?;
    Ok(fitted)
}

fn train(a: &TrainArgs, run: &mut Run) -> CliResult<()> {
    let (cohort, labels, curve) = load_labeled(&a.inputs, run)?;
    let config = resolve_config(&a.model, run)?;
    config.warnings(cohort.n_genes()).iter().for_each(|w| warn(w));
    write_labels(run, cohort.patients(), &labels, &curve)?;
    let data = labeled_data(&cohort, &labels)?;
    let fitted = fit_final(run, &data, &config)?;
    run.summary = json!({ "patients": data.len(), "epochs": fitted.net.train_log.len() });
    Ok(())
}

/// The protocol plus, for the regular split, the evaluation patients labeled
/// with the training cohort's Kaplan-Meier curve.
fn protocol_and_evaluation(
    p: &ProtocolArgs,
    curve: &KmCurve,
    config: &riskwave::PipelineConfig,
    run: &mut Run,
) -> CliResult<(EvalProtocol, Option<LabeledData>)> {
    match p.protocol {
        ProtocolArg::Loo => {
            if p.undersample.is_some() || p.eval_expression.is_some() {
                return Err(Failure::usage("--undersample and --eval-* apply only to --protocol regular"));
            }
            Ok((EvalProtocol::leave_one_out(), None))
        }
        ProtocolArg::Regular => {
            let (Some(expression), Some(clinical)) = (&p.eval_expression, &p.eval_clinical) else {
                return Err(Failure::usage("--protocol regular needs --eval-expression and --eval-clinical"));
            };
            run.input(expression)?;
            run.input(clinical)?;
            let cohort = load_cohort(expression, clinical)?;
            let labels = cohort
                .patients()
                .iter()
                .map(|r| label_patient(curve, r).map(|l| l.risk))
                .collect::<riskwave::Result<Vec<_>>>()?;
            let data = LabeledData::from_cohort(&cohort, labels)?;
            Ok((EvalProtocol::regular(p.undersample, config.seed), Some(data)))
        }
    }
}

fn write_report(run: &mut Run, report: &EvalReport, suffix: &str) -> CliResult<Value> {
    let th = report.operating_point.threshold;
    run.out.write_csv(
        &format!("scores{suffix}.csv"),
        &["patient_id", "score", "true_label", "predicted_label"],
        report.scores.iter().map(|s| {
            vec![s.patient_id.clone(), num(s.score), risk_name(s.truth), risk_name(classify(s.score, th))]
        }),
    )?;
    run.out.write_csv(
        &format!("roc{suffix}.csv"),
        &["threshold", "fpr", "tpr"],
        report.roc.thresholds.iter().zip(&report.roc.points).map(|(&t, &(f, p))| vec![num(t), num(f), num(p)]),
    )?;
    run.out.write(&format!("roc{suffix}.svg"), roc_svg(&report.roc).as_bytes())?;
    if report.too_many_skipped {
        warn(&format!("{} leave-one-out folds were skipped; the estimate is unreliable", report.skipped_folds.len()));
    }
    let summary = json!({
        "auc": report.roc.auc,
        "threshold": th,
        "tpr": report.operating_point.tpr,
        "fpr": report.operating_point.fpr,
        "scored": report.scores.len(),
        "skipped_folds": report.skipped_folds,
        "too_many_skipped": report.too_many_skipped,
        "retained_training": report.retained_training,
    });
    run.out.write_json(&format!("report{suffix}.json"), &summary)?;
    Ok(summary)
}

fn evaluate_cmd(a: &EvaluateArgs, run: &mut Run) -> CliResult<()> {
    let (cohort, labels, curve) = load_labeled(&a.inputs, run)?;
    let config = resolve_config(&a.model, run)?;
    config.warnings(cohort.n_genes()).iter().for_each(|w| warn(w));
    let data = labeled_data(&cohort, &labels)?;
    let (protocol, evaluation) = protocol_and_evaluation(&a.protocol, &curve, &config, run)?;
    let report = evaluate(&data, evaluation.as_ref(), &config, &protocol)?;
    let summary = write_report(run, &report, "")?;
    run.summary = json!({ "auc": summary["auc"], "tpr": summary["tpr"], "fpr": summary["fpr"] });
    Ok(())
}

fn search(a: &SearchArgs, run: &mut Run) -> CliResult<()> {
    let (cohort, labels, curve) = load_labeled(&a.inputs, run)?;
    let base = resolve_config(&a.model, run)?;
    let data = labeled_data(&cohort, &labels)?;
    let (protocol, evaluation) = protocol_and_evaluation(&a.protocol, &curve, &base, run)?;

    let defaults = SearchSpace::default();
    let pick = |given: &Vec<usize>, fallback: &Vec<usize>| if given.is_empty() { fallback.clone() } else { given.clone() };
    let s = &a.space;
    let space = SearchSpace {
        windows: pick(&s.windows, &defaults.windows),
        ranks: pick(&s.ranks, &defaults.ranks),
        train_fractions: if s.train_fracs.is_empty() { defaults.train_fractions } else { s.train_fracs.clone() },
        hidden_units: pick(&s.hiddens, &defaults.hidden_units),
        thresholds: if s.thresholds.is_empty() { defaults.thresholds } else { s.thresholds.clone() },
        seed: base.seed,
    };
    let objective = match s.objective {
        ObjectiveArg::Youden => Objective::Youden,
        ObjectiveArg::TprAtFpr => Objective::MaxTprAtFpr { max_fpr: s.max_fpr },
    };
    let budget = match s.budget_secs {
        Some(secs) if !(secs > 0.0 && secs.is_finite()) => return Err(Failure::usage("--budget-secs must be positive")),
        Some(secs) => Some(Duration::from_secs_f64(secs)),
        None => None,
    };
    let options = SearchOptions { base, protocol, objective, budget };
    run.config = json!({ "base": base, "space": space, "objective": objective, "protocol": protocol });
    let result = grid_search(&data, evaluation.as_ref(), &space, &options)?;

    let rows = result.leaderboard.iter().chain(&result.failures).map(|row| {
        let c = &row.combination;
        let mut cells = vec![
            c.window.to_string(),
            c.rank.to_string(),
            num(c.train_fraction),
            c.hidden_units.to_string(),
            num(row.threshold),
        ];
        match row.metrics() {
            Some(m) => cells.extend([num(m.tpr), num(m.fpr), num(m.auc), num(m.youden()), num(objective.value(m.tpr, m.fpr))]),
            None => cells.extend(std::iter::repeat_n(String::new(), 5)),
        }
        cells.push(row.status.label());
        cells
    });
    run.out.write_csv("leaderboard.csv", &["T", "k", "P", "h", "Th", "tpr", "fpr", "auc", "youden", "objective", "status"], rows)?;
    run.out.write_json("best_config.json", &result.best_config)?;
    let summary = json!({
        "best": result.best,
        "tuples": space.size(),
        "evaluated_rows": result.leaderboard.len(),
        "failed_rows": result.failures.len(),
    });
    run.out.write_json("search.json", &summary)?;
    run.summary = json!({
        "best_config": result.best_config,
        "tpr": result.best_metrics.tpr,
        "fpr": result.best_metrics.fpr,
        "auc": result.best_metrics.auc,
    });
    Ok(())
}

fn pipeline(a: &PipelineArgs, run: &mut Run) -> CliResult<()> {
    let (cohort, labels, curve) = load_labeled(&a.inputs, run)?;
    let config = resolve_config(&a.model, run)?;
    if a.ablation && config.feature_mode == FeatureMode::Raw {
        return Err(Failure::usage("--ablation already compares against raw features; drop --raw"));
    }
    config.warnings(cohort.n_genes()).iter().for_each(|w| warn(w));
    write_labels(run, cohort.patients(), &labels, &curve)?;
    let data = labeled_data(&cohort, &labels)?;
    let (protocol, evaluation) = protocol_and_evaluation(&a.protocol, &curve, &config, run)?;

    let mut summary = json!({ "labels": label_summary(&labels, &curve)? });
    if a.ablation {
        let ab = ablation(&data, evaluation.as_ref(), &config, &protocol)?;
        summary["evaluation"] = write_report(run, &ab.with_expansion, "")?;
        write_report(run, &ab.without_expansion, "_raw")?;
        summary["ablation"] = json!({
            "auc_with_expansion": ab.auc_with,
            "auc_without_expansion": ab.auc_without,
            "gap": ab.auc_with - ab.auc_without,
        });
    } else {
        let report = evaluate(&data, evaluation.as_ref(), &config, &protocol)?;
        summary["evaluation"] = write_report(run, &report, "")?;
    }
    let fitted = fit_final(run, &data, &config)?;
    summary["final_model_epochs"] = json!(fitted.net.train_log.len());
    run.out.write_json("pipeline.json", &summary)?;
    run.summary = json!({
        "auc": summary["evaluation"]["auc"],
        "tpr": summary["evaluation"]["tpr"],
        "fpr": summary["evaluation"]["fpr"],
        "ablation": summary.get("ablation"),
    });
    Ok(())
}

fn rerun(a: &RerunArgs) -> CliResult<Outcome> {
    let bytes = fs::read(&a.manifest).map_err(|e| Failure::io(&a.manifest, e))?;
    let recorded: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::new("manifest", format!("{}: {e}", a.manifest.display())))?;
    if matches!(recorded.command, Command::Rerun(_)) {
        return Err(Failure::new("manifest", "a manifest never records a rerun"));
    }
    for input in &recorded.inputs {
        let now = fs::read(&input.path).map_err(|e| Failure::io(&input.path, e))?;
        if sha256_hex(&now) != input.sha256 {
            return Err(Failure::new("input_changed", format!("{} no longer matches its recorded hash", input.path.display())));
        }
    }
    let mut command = recorded.command.clone();
    *command.output_mut() = a.output.clone();
    let fresh = execute(&command)?;

    let names: BTreeSet<&String> = recorded.outputs.keys().chain(fresh.manifest.outputs.keys()).collect();
    let differing: Vec<&str> = names
        .into_iter()
        .filter(|n| recorded.outputs.get(*n) != fresh.manifest.outputs.get(*n))
        .map(String::as_str)
        .collect();
    if !differing.is_empty() {
        return Err(Failure::new("not_reproduced", format!("outputs differ from the manifest: {}", differing.join(", "))));
    }
    let summary = json!({ "reproduced": true, "outputs": fresh.manifest.outputs.len() });
    Ok(Outcome { summary, ..fresh })
}
