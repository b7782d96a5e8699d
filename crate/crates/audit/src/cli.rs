//! The `cpm-audit` command line.
//!
//! Every subcommand accepts `--config FILE`, a JSON object whose keys are
//! flag names (`"split-seed": 3`, `"lrs": [0.1, 0.01]`, `"verbose": true`).
//! Its entries are inserted before the explicit flags, so flags on the
//! command line win.
//!
//! Exit status: 0 on success, 2 for usage errors, 1 for runtime failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use cpm_audit_core::cpm::{k_ablation_with, train_cpm_with, CpmProblem, CpmTrainConfig};
use cpm_audit_core::lab::{gen_synthetic, predictions_from_model, sample_aux_rows, train_model, GenConfig, TrainConfig, TrainMethod};
use cpm_audit_core::oracle::{exact_convex_discrepancy, exact_halfspace_discrepancy, DiscrepancyResult, PointSet};
use cpm_audit_core::predictions::make_audit_dataset;
use cpm_audit_core::report::{build_report, render_ablation_csv, AuditReport, MetricResult};
use cpm_audit_core::scores::{mixup_scores_from_mixed, MixupScoreConfig, RelaxLossScoreConfig};
use cpm_audit_core::threshold::{run_threshold_attack_by_row, ScoreSpec};
use cpm_audit_core::{Error as CoreError, Split};
use serde::Serialize;

use crate::error::{AuditError, Result};
use crate::exec::ParallelExecutor;
use crate::formats::{self, ReportFormat};
use crate::io;
use crate::pipeline::{mixed_predictions, mixup_attack, score_attacks};

/// Semver plus the version of every file format the tool reads or writes.
pub const VERSION: &str =
    "0.1.0 (prediction-csv 1, mixed-prediction-csv 1, model-json 1, polytope-json 1, report-json 1)";

#[derive(Debug, Parser)]
#[command(name = "cpm-audit", version = VERSION, about = "Membership-inference privacy audits from softmax outputs")]
#[command(args_override_self = true)]
struct Cli {
    /// JSON file of default flag values for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic Gaussian-mixture dataset.
    GenData(GenDataArgs),
    /// Train an MLP target on the member rows and export its predictions.
    Train(TrainArgs),
    /// Run threshold attacks on a prediction file.
    Audit(AuditArgs),
    /// Fit a convex polytope machine and add its row to a report.
    Cpm(CpmArgs),
    /// Fit CPMs over increasing facet counts with warm starts.
    AblateK(AblateArgs),
    /// Exact discrepancy over convex sets or halfspaces on tiny inputs.
    #[command(alias = "cpb-oracle")]
    Oracle(OracleArgs),
    /// Mixup score attack from a model or a mixed-prediction file.
    MixupScore(MixupArgs),
    /// Render a report JSON as CSV, Markdown or JSON.
    Render(RenderArgs),
}

#[derive(Debug, Args, Serialize)]
struct GenDataArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    classes: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..))]
    dim: u64,
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
    members: u64,
    #[arg(long, default_value_t = 600, value_parser = clap::value_parser!(u64).range(1..))]
    nonmembers: u64,
    #[arg(long, default_value_t = GenConfig::default().separation)]
    separation: f64,
    #[arg(long, default_value_t = GenConfig::default().covariance_scale)]
    covariance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Vanilla,
    Mixup,
    Relaxloss,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Vanilla)]
    method: MethodArg,
    /// RelaxLoss loss target (required for relaxloss).
    #[arg(long)]
    alpha: Option<f64>,
    /// RelaxLoss soft-label cap (required for relaxloss).
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    batch_size: usize,
    /// Hidden layer sizes, comma separated.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "64")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long)]
    out_preds: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReportOut {
    /// Tag naming the audited model; defaults to the input file stem.
    #[arg(long)]
    model_tag: Option<String>,
    /// Existing report JSON to add rows to.
    #[arg(long)]
    base_report: Option<PathBuf>,
    #[arg(long)]
    out_report: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct AuditArgs {
    #[arg(long)]
    preds: PathBuf,
    /// Comma-separated subset of msp, ent, ce, me, relaxloss.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "msp,ent,ce,me")]
    scores: Vec<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    report: ReportOut,
}

#[derive(Debug, Args, Serialize)]
struct CpmFitArgs {
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    lrs: Vec<f64>,
    #[arg(long, default_value_t = CpmTrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = CpmTrainConfig::default().batch_size)]
    batch: usize,
    #[arg(long, default_value_t = CpmTrainConfig::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

impl CpmFitArgs {
    fn config(&self, facets: usize) -> CpmTrainConfig {
        CpmTrainConfig {
            facets,
            learning_rates: self.lrs.clone(),
            epochs: self.epochs,
            batch_size: self.batch,
            restarts: self.restarts,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct CpmArgs {
    #[arg(long)]
    preds: PathBuf,
    /// Facet count.
    #[arg(long, default_value_t = CpmTrainConfig::default().facets)]
    k: usize,
    #[command(flatten)]
    #[serde(flatten)]
    fit: CpmFitArgs,
    #[command(flatten)]
    #[serde(flatten)]
    report: ReportOut,
    #[arg(long)]
    out_polytope: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AblateArgs {
    #[arg(long)]
    preds: PathBuf,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "1,4,16,64")]
    k_list: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    fit: CpmFitArgs,
    #[arg(long)]
    out_csv: PathBuf,
    /// Optional report JSON carrying the ablation curve.
    #[arg(long)]
    out_report: Option<PathBuf>,
    #[arg(long)]
    model_tag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Convex,
    Halfspace,
}

#[derive(Debug, Args, Serialize)]
struct OracleArgs {
    /// Prediction CSV; points are the (probs, one-hot label) features.
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    preds: Option<PathBuf>,
    /// Point CSV `split,x_0,...`.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Family::Convex)]
    family: Family,
    /// Output JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SplitArg {
    Member,
    Nonmember,
}

#[derive(Debug, Args, Serialize)]
struct MixupArgs {
    /// Raw dataset CSV (model mode).
    #[arg(long, requires = "model")]
    data: Option<PathBuf>,
    /// Model JSON (model mode).
    #[arg(long, requires = "data")]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Nonmember)]
    aux_from: SplitArg,
    #[arg(long, default_value_t = 30)]
    aux_size: usize,
    /// Number of lambda draws.
    #[arg(long, default_value_t = MixupScoreConfig::default().draws)]
    r: usize,
    #[arg(long, default_value_t = MixupScoreConfig::default().lambda_low)]
    lambda_low: f64,
    #[arg(long, default_value_t = MixupScoreConfig::default().lambda_high)]
    lambda_high: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mixed-prediction CSV (file mode); labels and splits come from --preds.
    #[arg(long, conflicts_with_all = ["data", "model"], requires = "preds")]
    mixed_preds: Option<PathBuf>,
    #[arg(long)]
    preds: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Also write the mixed-prediction CSV used in model mode.
    #[arg(long, requires = "model")]
    write_mixed: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    report: ReportOut,
}

#[derive(Debug, Args, Serialize)]
struct RenderArgs {
    #[arg(long)]
    report: PathBuf,
    /// csv, markdown or json.
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

/// Splices the entries of `--config FILE` in right after the subcommand.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    let mut sub_index = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config = args.get(i + 1).cloned();
            if config.is_none() {
                return Err(AuditError::Usage("--config needs a file".into()));
            }
            i += 2;
            continue;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.into());
        } else if sub_index.is_none() && !a.starts_with('-') {
            sub_index = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, sub_index) else {
        return Ok(args);
    };
    let path = PathBuf::from(path);
    let text = io::read_text(&path).map_err(|e| AuditError::Usage(format!("cannot read config: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| AuditError::Usage(format!("{}: invalid config JSON: {e}", path.display())))?;
    let serde_json::Value::Object(map) = value else {
        return Err(AuditError::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    let scalar = |key: &str, v: &serde_json::Value| -> Result<String> {
        match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(AuditError::Usage(format!("config key `{key}` must hold a string, number, boolean or list"))),
        }
    };
    let mut injected: Vec<OsString> = Vec::new();
    for (key, v) in &map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => injected.push(flag.into()),
            serde_json::Value::Array(items) => {
                let parts = items.iter().map(|x| scalar(key, x)).collect::<Result<Vec<_>>>()?;
                injected.push(flag.into());
                injected.push(parts.join(",").into());
            }
            other => {
                injected.push(flag.into());
                injected.push(scalar(key, other)?.into());
            }
        }
    }
    let mut out = args;
    out.splice(sub + 1..sub + 1, injected);
    Ok(out)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenData(a) => cmd_gen_data(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Audit(a) => cmd_audit(&a),
        Command::Cpm(a) => cmd_cpm(&a),
        Command::AblateK(a) => cmd_ablate_k(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::MixupScore(a) => cmd_mixup_score(&a),
        Command::Render(a) => cmd_render(&a),
    }
}

fn usage(msg: impl Into<String>) -> AuditError {
    AuditError::Usage(msg.into())
}

fn compact_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("argument structs serialize")
}

/// Metadata common to every report: tool version, the command's effective
/// configuration and, when `SOURCE_DATE_EPOCH` is set, a timestamp.
fn run_metadata<T: Serialize>(command: &str, args: &T) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("tool".to_owned(), format!("cpm-audit {VERSION}"));
    m.insert(format!("{command}.config"), compact_json(args));
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        m.insert("generated_at_epoch".to_owned(), epoch);
    }
    m
}

fn model_tag(explicit: &Option<String>, input: &Path) -> String {
    explicit.clone().unwrap_or_else(|| {
        input
            .file_stem()
            .map_or_else(|| "model".to_owned(), |s| s.to_string_lossy().into_owned())
    })
}

/// Builds a new report or adds rows to `--base-report`.
fn emit_report<T: Serialize>(out: &ReportOut, input: &Path, command: &str, args: &T, results: &[MetricResult]) -> Result<AuditReport> {
    let mut report = match &out.base_report {
        Some(path) => {
            let mut base = formats::load_report(path)?;
            base.merge_rows(results)?;
            base
        }
        None => build_report(results, &model_tag(&out.model_tag, input))?,
    };
    report.metadata.extend(run_metadata(command, args));
    formats::save_report(&out.out_report, &report)?;
    Ok(report)
}

fn cmd_gen_data(a: &GenDataArgs) -> Result<()> {
    let cfg = GenConfig {
        classes: a.classes as usize,
        dim: a.dim as usize,
        members: a.members as usize,
        nonmembers: a.nonmembers as usize,
        separation: a.separation,
        covariance_scale: a.covariance,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    io::save_raw_dataset(&a.out, &gen_synthetic(&cfg)?)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let method = match a.method {
        MethodArg::Vanilla => TrainMethod::Vanilla,
        MethodArg::Mixup => TrainMethod::Mixup,
        MethodArg::Relaxloss => {
            let alpha = a.alpha.ok_or_else(|| usage("--alpha is required with --method relaxloss"))?;
            let mu = a.mu.ok_or_else(|| usage("--mu is required with --method relaxloss"))?;
            TrainMethod::RelaxLoss { alpha, mu }
        }
    };
    let cfg = TrainConfig {
        method,
        hidden: a.hidden.clone(),
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let data = io::load_raw_dataset(&a.data)?;
    let model = train_model(&data, &cfg)?;
    formats::save_model(&a.out_model, &model, Some(cfg))?;
    if let Some(path) = &a.out_preds {
        io::save_predictions(path, &predictions_from_model(&model, &data)?)?;
    }
    Ok(())
}

fn relax_config(alpha: Option<f64>, mu: Option<f64>) -> Result<Option<RelaxLossScoreConfig>> {
    match (alpha, mu) {
        (Some(alpha), Some(mu)) => Ok(Some(RelaxLossScoreConfig::new(alpha, mu).map_err(|e| usage(e.to_string()))?)),
        (None, None) => Ok(None),
        _ => Err(usage("--alpha and --mu must be given together")),
    }
}

fn cmd_audit(a: &AuditArgs) -> Result<()> {
    let relax = relax_config(a.alpha, a.mu)?;
    let specs = a
        .scores
        .iter()
        .map(|name| {
            ScoreSpec::parse(name.trim(), relax).map_err(|e| match e {
                CoreError::UnknownScore(s) => usage(format!(
                    "unknown score `{s}` (expected msp, ent, ce, me or relaxloss; mixup has its own subcommand)"
                )),
                CoreError::MissingScoreConfig(_) => usage("score relaxloss needs --alpha and --mu"),
                other => other.into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let file = io::load_predictions(&a.preds)?;
    let dataset = make_audit_dataset(&file.records, a.split_seed)?;
    let results: Vec<MetricResult> = score_attacks(&dataset, &specs)?.into_iter().map(MetricResult::Attack).collect();
    emit_report(&a.report, &a.preds, "audit", a, &results)?;
    Ok(())
}

fn validate_fit(fit: &CpmFitArgs, facets: &[usize]) -> Result<()> {
    for &k in facets {
        fit.config(k).validate().map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn cmd_cpm(a: &CpmArgs) -> Result<()> {
    validate_fit(&a.fit, &[a.k])?;
    let file = io::load_predictions(&a.preds)?;
    let dataset = make_audit_dataset(&file.records, a.fit.split_seed)?;
    let exec = ParallelExecutor::from_env();
    let result = train_cpm_with(&CpmProblem::from_dataset(&dataset), &a.fit.config(a.k), &exec)?;
    if let Some(path) = &a.out_polytope {
        formats::save_polytope(path, &result.polytope)?;
    }
    emit_report(&a.report, &a.preds, "cpm", a, &[MetricResult::Cpm(result)])?;
    Ok(())
}

fn cmd_ablate_k(a: &AblateArgs) -> Result<()> {
    if a.k_list.is_empty() || a.k_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(usage("--k-list must be a non-empty ascending list"));
    }
    validate_fit(&a.fit, &a.k_list)?;
    let file = io::load_predictions(&a.preds)?;
    let dataset = make_audit_dataset(&file.records, a.fit.split_seed)?;
    let exec = ParallelExecutor::from_env();
    let points = k_ablation_with(&CpmProblem::from_dataset(&dataset), &a.fit.config(a.k_list[0]), &a.k_list, &exec)?;
    let (k_last, last) = points.last().expect("non-empty k list").clone();
    let mut report = build_report(&[MetricResult::Cpm(last)], &model_tag(&a.model_tag, &a.preds))?.with_ablation(&points);
    report.metadata.extend(run_metadata("ablate-k", a));
    report.metadata.insert("cpm.k".to_owned(), k_last.to_string());
    io::write_text(&a.out_csv, &render_ablation_csv(report.ablation.as_deref().unwrap_or(&[])))?;
    if let Some(path) = &a.out_report {
        formats::save_report(path, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput<'a> {
    family: Family,
    members: usize,
    nonmembers: usize,
    #[serde(flatten)]
    result: &'a DiscrepancyResult,
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let (members, nonmembers) = match (&a.preds, &a.points) {
        (Some(p), None) => {
            let file = io::load_predictions(p)?;
            let fv = |split: Split| {
                file.records
                    .iter()
                    .filter(|r| r.split() == split)
                    .map(|r| r.feature_vector().into_inner())
                    .collect::<Vec<_>>()
            };
            (fv(Split::Member), fv(Split::Nonmember))
        }
        (None, Some(p)) => io::load_points(p)?,
        _ => return Err(usage("exactly one of --preds and --points is required")),
    };
    let points = PointSet::new(members, nonmembers)?;
    let result = match a.family {
        Family::Convex => exact_convex_discrepancy(&points)?,
        Family::Halfspace => exact_halfspace_discrepancy(&points)?,
    };
    let text = formats::pretty_json(&OracleOutput {
        family: a.family,
        members: points.members().len(),
        nonmembers: points.nonmembers().len(),
        result: &result,
    });
    match &a.out {
        Some(path) => io::write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_mixup_score(a: &MixupArgs) -> Result<()> {
    let cfg = MixupScoreConfig {
        draws: a.r,
        lambda_low: a.lambda_low,
        lambda_high: a.lambda_high,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let (result, input) = match (&a.data, &a.model, &a.mixed_preds) {
        (Some(data_path), Some(model_path), None) => {
            if a.aux_size == 0 {
                return Err(usage("--aux-size must be positive"));
            }
            let data = io::load_raw_dataset(data_path)?;
            let (model, _) = formats::load_model(model_path)?;
            let records = predictions_from_model(&model, &data)?;
            let dataset = make_audit_dataset(&records, a.split_seed)?;
            let split = match a.aux_from {
                SplitArg::Member => Split::Member,
                SplitArg::Nonmember => Split::Nonmember,
            };
            let aux = sample_aux_rows(&data, split, a.aux_size, a.seed)?;
            if let Some(path) = &a.write_mixed {
                io::save_mixed_predictions(path, &mixed_predictions(&model, &data, &aux, &cfg)?)?;
            }
            (mixup_attack(&dataset, &model, &data, &aux, &cfg)?, data_path)
        }
        (None, None, Some(mixed_path)) => {
            let preds_path = a.preds.as_ref().ok_or_else(|| usage("--mixed-preds needs --preds for labels and splits"))?;
            let file = io::load_predictions(preds_path)?;
            let rows = io::load_mixed_predictions(mixed_path)?;
            let labels: Vec<usize> = file.records.iter().map(|r| r.label()).collect();
            let by_query = mixup_scores_from_mixed(&rows, &labels)?;
            let scores = (0..labels.len())
                .map(|q| {
                    by_query.get(&q).copied().ok_or_else(|| {
                        AuditError::Data(format!("{}: no mixed predictions for query {q}", mixed_path.display()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let dataset = make_audit_dataset(&file.records, a.split_seed)?;
            (run_threshold_attack_by_row(&dataset, "mixup", &scores)?, preds_path)
        }
        _ => return Err(usage("use either --data with --model, or --mixed-preds with --preds")),
    };
    emit_report(&a.report, input, "mixup-score", a, &[MetricResult::Attack(result)])?;
    Ok(())
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let report = formats::load_report(&a.report)?;
    let text = formats::render(&report, format);
    match &a.out {
        Some(path) => io::write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{MODEL_JSON_VERSION, POLYTOPE_JSON_VERSION, REPORT_JSON_VERSION};
    use crate::io::{MIXED_CSV_VERSION, PREDICTION_CSV_VERSION};
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn version_lists_every_format() {
        assert!(VERSION.starts_with(env!("CARGO_PKG_VERSION")));
        for (name, v) in [
            ("prediction-csv", PREDICTION_CSV_VERSION),
            ("mixed-prediction-csv", MIXED_CSV_VERSION),
            ("model-json", MODEL_JSON_VERSION),
            ("polytope-json", POLYTOPE_JSON_VERSION),
            ("report-json", REPORT_JSON_VERSION),
        ] {
            assert!(VERSION.contains(&format!("{name} {v}")), "{name}");
        }
    }

    #[test]
    fn config_entries_precede_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"split_seed": 4, "lrs": [0.5, 0.25], "model-tag": "x"}"#).unwrap();
        let args: Vec<OsString> = ["cpm-audit", "cpm", "--config", cfg.to_str().unwrap(), "--split-seed", "9"]
            .iter()
            .map(OsString::from)
            .collect();
        let out: Vec<String> = expand_config(args).unwrap().iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(&out[..2], &["cpm-audit", "cpm"]);
        assert_eq!(&out[2..8], &["--lrs", "0.5,0.25", "--model-tag", "x", "--split-seed", "4"]);
        assert_eq!(&out[out.len() - 2..], &["--split-seed", "9"]);
    }

    #[test]
    fn later_flags_override_earlier_ones() {
        let cli = Cli::try_parse_from([
            "cpm-audit", "cpm", "--preds", "p.csv", "--out-report", "r.json", "--lrs", "0.5", "--split-seed", "4",
            "--split-seed", "9", "--lrs", "0.2,0.1",
        ])
        .unwrap();
        let Command::Cpm(a) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(a.fit.split_seed, 9);
        assert_eq!(a.fit.lrs, vec![0.2, 0.1]);
    }
}
