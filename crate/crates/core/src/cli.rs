//! Command-line surface.
//!
//! [`cli_main`] parses arguments, dispatches to the library and returns the
//! process exit code: 0 on success, 2 for input and validation errors, 3 for
//! configuration errors (including unknown flags), 4 for a convergence
//! warning escalated by `--strict`. Reports go to standard output or to
//! `--output`; errors and warnings go to standard error as one JSON object
//! per line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::data::{
    generate_synthetic, load_table, write_csv, Column, Dataset, NamedColumn, Role, RoleMap,
    SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::metrics::{disaggregate, BaseMetricId, FairnessMetric, Metric};
use crate::postprocessing::{
    fit_threshold_optimizer, predict_with_policy, Constraint, Objective, ThresholdPolicy,
};
use crate::preprocessing::fit_correlation_remover;
use crate::reductions::{
    exponentiated_gradient, feature_matrix, predict_randomized, BaseModel, BuiltinLearner,
    ConstraintFamily, ExponentiatedGradient, LearnerKind, LearnerParams, PredictMode,
    RandomizedClassifier,
};
use crate::report::{compare_models, render_report, Format, Metadata, Report};

#[derive(Debug, Parser)]
#[command(
    name = "fairkit",
    version,
    about = "Fairness assessment and mitigation for binary classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Disaggregate metrics over sensitive groups.
    Assess(AssessArgs),
    /// Fit a mitigation model.
    #[command(subcommand)]
    Mitigate(Mitigate),
    /// Fit a pre-processing transform.
    #[command(subcommand)]
    Preprocess(Preprocess),
    /// Apply a threshold policy or randomized model to data.
    Apply(ApplyArgs),
    /// Compare models on performance and disparity.
    Compare(CompareArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Subcommand)]
enum Mitigate {
    /// Group-wise randomized thresholds on an existing score.
    Threshold(ThresholdArgs),
    /// Exponentiated-gradient reduction with a built-in learner.
    Reduce(ReduceArgs),
}

#[derive(Debug, Subcommand)]
enum Preprocess {
    /// Remove linear correlation with sensitive columns.
    Correlation(CorrelationArgs),
}

#[derive(Debug, Args)]
struct AssessArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "y-true")]
    y_true: String,
    #[arg(long = "y-pred")]
    y_pred: String,
    #[arg(long, value_delimiter = ',', required = true)]
    sensitive: Vec<String>,
    #[arg(long = "sample-weight")]
    sample_weight: Option<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    metrics: Vec<String>,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "y-true")]
    y_true: String,
    #[arg(long)]
    score: String,
    #[arg(long, value_delimiter = ',', required = true)]
    sensitive: Vec<String>,
    #[arg(long)]
    constraint: String,
    #[arg(long, default_value = "accuracy")]
    objective: String,
    #[arg(long = "grid-size", default_value_t = 1000)]
    grid_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "y-true")]
    y_true: String,
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    sensitive: Vec<String>,
    #[arg(long)]
    constraint: String,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value = "logreg")]
    learner: String,
    #[arg(long = "max-iter", default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 2.0)]
    eta0: f64,
    #[arg(long, default_value_t = 100.0)]
    bound: f64,
    #[arg(long, default_value_t = 1e-6)]
    nu: f64,
    /// Exit with code 4 when the solver does not reach the requested gap.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    sensitive: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Transformed CSV; the model goes next to it as `<stem>.model.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("artifact").required(true).args(["policy", "model"])))]
struct ApplyArgs {
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "sample")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "y-true")]
    y_true: String,
    #[arg(long, value_delimiter = ',', required = true)]
    sensitive: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pred: Vec<String>,
    #[arg(long, default_value = "accuracy")]
    perf: String,
    #[arg(long, default_value = "demographic_parity_difference")]
    fairness: String,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// What a successful command leaves behind besides its files.
enum Outcome {
    Done,
    Warning {
        code: &'static str,
        message: String,
        escalate: bool,
    },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(bytes: &[u8], roles: &[(&[String], Role)]) -> Result<Dataset> {
    let mut map = RoleMap::new();
    for (names, role) in roles {
        for n in *names {
            if let Some(prev) = map.insert(n.clone(), *role) {
                if prev != *role {
                    return Err(Error::Config(format!("column `{n}` given two roles")));
                }
            }
        }
    }
    load_table(bytes, &map)
}

fn emit(stdout: &mut dyn Write, output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => write(p, bytes),
        None => stdout.write_all(bytes).map_err(Error::from),
    }
}

fn to_json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn assess(a: &AssessArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let format: Format = a.format.parse()?;
    if format == Format::Svg {
        return Err(Error::Format("svg output needs a comparison report".into()));
    }
    let metrics: Vec<Metric> = a
        .metrics
        .iter()
        .map(|m| m.parse::<BaseMetricId>().map(Metric::Base))
        .collect::<Result<_>>()?;
    let bytes = read(&a.data)?;
    let sensitive = &a.sensitive;
    let weight: Vec<String> = a.sample_weight.iter().cloned().collect();
    let data = load(
        &bytes,
        &[
            (std::slice::from_ref(&a.y_true), Role::YTrue),
            (std::slice::from_ref(&a.y_pred), Role::YPred),
            (sensitive, Role::Sensitive),
            (&weight, Role::Score),
        ],
    )?;
    let groups = data.groups_by(sensitive)?;
    let w = match &a.sample_weight {
        Some(c) => Some(data.numeric(c)?),
        None => None,
    };
    let frame = disaggregate(
        &metrics,
        data.numeric(&a.y_true)?,
        data.numeric(&a.y_pred)?,
        &groups,
        w,
    )?;
    let report = Report::assessment(frame, Metadata::for_input(&bytes));
    emit(
        stdout,
        a.output.as_deref(),
        &render_report(&report, format)?,
    )?;
    Ok(Outcome::Done)
}

fn mitigate_threshold(a: &ThresholdArgs) -> Result<Outcome> {
    let constraint: Constraint = a.constraint.parse()?;
    let objective: Objective = a.objective.parse()?;
    let bytes = read(&a.data)?;
    let data = load(
        &bytes,
        &[
            (std::slice::from_ref(&a.y_true), Role::YTrue),
            (std::slice::from_ref(&a.score), Role::Score),
            (&a.sensitive, Role::Sensitive),
        ],
    )?;
    let groups = data.groups_by(&a.sensitive)?;
    let mut policy = fit_threshold_optimizer(
        data.numeric(&a.score)?,
        data.numeric(&a.y_true)?,
        &groups,
        constraint,
        objective,
        a.grid_size,
    )?;
    policy.score_column = a.score.clone();
    write(&a.out, &to_json_bytes(&policy)?)?;
    Ok(Outcome::Done)
}

fn mitigate_reduce(a: &ReduceArgs) -> Result<Outcome> {
    let family: ConstraintFamily = a.constraint.parse()?;
    let kind: LearnerKind = a.learner.parse()?;
    let opts = ExponentiatedGradient {
        bound: a.bound,
        eta0: a.eta0,
        nu: a.nu,
        max_iter: a.max_iter,
        ..ExponentiatedGradient::new(family, a.eps)
    };
    let bytes = read(&a.data)?;
    let data = load(
        &bytes,
        &[
            (std::slice::from_ref(&a.y_true), Role::YTrue),
            (&a.features, Role::Score),
            (&a.sensitive, Role::Sensitive),
        ],
    )?;
    let groups = data.groups_by(&a.sensitive)?;
    let x = feature_matrix(&data, &a.features)?;
    let learner = BuiltinLearner {
        kind,
        params: LearnerParams::default(),
    };
    let mut q = exponentiated_gradient(&x, data.numeric(&a.y_true)?, &groups, &learner, &opts)?;
    q.features = a.features.clone();
    write(&a.out, &to_json_bytes(&q)?)?;
    if q.diagnostics.converged {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::Warning {
            code: "not_converged",
            message: format!(
                "duality gap {} after {} iterations exceeds nu = {}",
                q.diagnostics.final_gap, q.diagnostics.iterations, a.nu
            ),
            escalate: a.strict,
        })
    }
}

fn model_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.model.json"))
}

fn preprocess_correlation(a: &CorrelationArgs) -> Result<Outcome> {
    let bytes = read(&a.data)?;
    let data = load(&bytes, &[(&a.sensitive, Role::Sensitive)])?;
    let model = fit_correlation_remover(&data, &a.sensitive, a.alpha)?;
    let transformed = model.transform(&data)?;
    let mut csv = Vec::new();
    write_csv(&transformed, &mut csv)?;
    write(&a.out, &csv)?;
    write(&model_path(&a.out), &to_json_bytes(&model)?)?;
    Ok(Outcome::Done)
}

fn apply(a: &ApplyArgs) -> Result<Outcome> {
    let mode = match a.mode.as_str() {
        "sample" => PredictMode::Sample { seed: a.seed },
        "expectation" => PredictMode::Expectation,
        m => return Err(Error::Config(format!("unknown mode `{m}`"))),
    };
    let bytes = read(&a.data)?;
    let predictions = if let Some(path) = &a.policy {
        let text = String::from_utf8_lossy(&read(path)?).into_owned();
        let policy = ThresholdPolicy::from_json(&text)?;
        let data = load(
            &bytes,
            &[
                (std::slice::from_ref(&policy.score_column), Role::Score),
                (&policy.sensitive_columns, Role::Sensitive),
            ],
        )?;
        let groups = data.groups_by(&policy.sensitive_columns)?;
        let scores = data.numeric(&policy.score_column)?;
        let preds = match mode {
            PredictMode::Expectation => policy.expected_predictions(scores, &groups)?,
            PredictMode::Sample { seed } => predict_with_policy(&policy, scores, &groups, seed)?
                .into_iter()
                .map(f64::from)
                .collect(),
        };
        (data, preds)
    } else {
        let path = a.model.as_ref().expect("clap requires --policy or --model");
        let q: RandomizedClassifier<BaseModel> = serde_json::from_slice(&read(path)?)
            .map_err(|e| Error::Config(format!("randomized classifier: {e}")))?;
        if q.components.is_empty() {
            return Err(Error::Config(
                "randomized classifier has no components".into(),
            ));
        }
        let data = load(&bytes, &[(&q.features, Role::Score)])?;
        let x = feature_matrix(&data, &q.features)?;
        let preds = predict_randomized(&q, &x, mode);
        (data, preds)
    };
    let (data, preds) = predictions;
    let role = match mode {
        PredictMode::Sample { .. } => Role::YPred,
        PredictMode::Expectation => Role::Score,
    };
    let out = data.with_column(NamedColumn::new("prediction", role, Column::Numeric(preds)))?;
    let mut csv = Vec::new();
    write_csv(&out, &mut csv)?;
    write(&a.out, &csv)?;
    Ok(Outcome::Done)
}

fn compare(a: &CompareArgs, stdout: &mut dyn Write) -> Result<Outcome> {
    let format: Format = a.format.parse()?;
    let perf: BaseMetricId = a.perf.parse()?;
    let fairness: FairnessMetric = a.fairness.parse()?;
    let bytes = read(&a.data)?;
    let data = load(
        &bytes,
        &[
            (std::slice::from_ref(&a.y_true), Role::YTrue),
            (&a.pred, Role::Score),
            (&a.sensitive, Role::Sensitive),
        ],
    )?;
    let groups = data.groups_by(&a.sensitive)?;
    let models = a
        .pred
        .iter()
        .map(|c| Ok((c.clone(), data.numeric(c)?.to_vec())))
        .collect::<Result<Vec<_>>>()?;
    let table = compare_models(&models, data.numeric(&a.y_true)?, &groups, perf, fairness)?;
    let report = Report::comparison(table, Metadata::for_input(&bytes));
    emit(
        stdout,
        a.output.as_deref(),
        &render_report(&report, format)?,
    )?;
    Ok(Outcome::Done)
}

fn synth(a: &SynthArgs) -> Result<Outcome> {
    let text = String::from_utf8_lossy(&read(&a.config)?).into_owned();
    let config = SyntheticConfig::from_json(&text)?;
    let data = generate_synthetic(&config)?;
    let mut csv = Vec::new();
    write_csv(&data, &mut csv)?;
    write(&a.out, &csv)?;
    Ok(Outcome::Done)
}

fn error_json(e: &Error) -> serde_json::Value {
    let mut v = json!({ "error": { "code": e.code(), "message": e.to_string() } });
    match e {
        Error::Value { column, row, .. } => {
            v["error"]["column"] = json!(column);
            v["error"]["row"] = json!(row);
        }
        Error::Parse { row, .. } => v["error"]["row"] = json!(row),
        _ => {}
    }
    v
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    3
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Assess(a) => assess(a, stdout),
        Command::Mitigate(Mitigate::Threshold(a)) => mitigate_threshold(a),
        Command::Mitigate(Mitigate::Reduce(a)) => mitigate_reduce(a),
        Command::Preprocess(Preprocess::Correlation(a)) => preprocess_correlation(a),
        Command::Apply(a) => apply(a),
        Command::Compare(a) => compare(a, stdout),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::Warning {
            code,
            message,
            escalate,
        }) => {
            let _ = writeln!(
                stderr,
                "{}",
                json!({ "warning": { "code": code, "message": message } })
            );
            if escalate {
                4
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            e.exit_code()
        }
    }
}
