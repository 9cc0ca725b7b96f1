use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Anything that maps feature rows to hard 0/1 predictions.
pub trait Classifier {
    fn predict(&self, x: &DMatrix<f64>) -> Vec<f64>;
}

/// A weighted binary learner usable as the best-response oracle.
pub trait Learner {
    type Model: Classifier + Clone + PartialEq;

    /// Fits on rows of `x` with labels in {0, 1} and nonnegative weights.
    fn fit(&self, x: &DMatrix<f64>, y: &[f64], weights: &[f64]) -> Result<Self::Model>;

    /// The model that predicts `label` everywhere.
    fn constant(&self, label: u8) -> Self::Model;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision(&self, row: impl Iterator<Item = f64>) -> f64 {
        self.bias + row.zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }
}

/// Models produced by the built-in learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum BaseModel {
    LogisticRegression(LinearModel),
    /// Predicts 1 iff `x[feature] > threshold` (polarity 1) or
    /// `x[feature] <= threshold` (polarity -1).
    DecisionStump {
        feature: usize,
        threshold: f64,
        polarity: i8,
    },
    Constant {
        label: u8,
    },
}

impl Classifier for BaseModel {
    fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                let one = match self {
                    BaseModel::LogisticRegression(m) => m.decision(x.row(i).iter().copied()) > 0.0,
                    BaseModel::DecisionStump {
                        feature,
                        threshold,
                        polarity,
                    } => (x[(i, *feature)] > *threshold) == (*polarity > 0),
                    BaseModel::Constant { label } => *label == 1,
                };
                f64::from(u8::from(one))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LogisticRegression,
    DecisionStump,
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" | "logistic_regression" => Ok(LearnerKind::LogisticRegression),
            "stump" | "decision_stump" => Ok(LearnerKind::DecisionStump),
            _ => Err(Error::Config(format!("unknown learner `{s}`"))),
        }
    }
}

/// Hyperparameters shared by the built-in learners. The stump ignores them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub l2: f64,
    pub max_epochs: usize,
    pub tol: f64,
    /// Gradient step; `None` picks `1 / L` for the smoothness constant `L`.
    pub step: Option<f64>,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_epochs: 2000,
            tol: 1e-6,
            step: None,
        }
    }
}

/// Built-in learner selected at runtime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinLearner {
    pub kind: LearnerKind,
    pub params: LearnerParams,
}

impl BuiltinLearner {
    pub fn logistic() -> Self {
        Self {
            kind: LearnerKind::LogisticRegression,
            params: LearnerParams::default(),
        }
    }

    pub fn stump() -> Self {
        Self {
            kind: LearnerKind::DecisionStump,
            params: LearnerParams::default(),
        }
    }
}

impl Learner for BuiltinLearner {
    type Model = BaseModel;

    fn fit(&self, x: &DMatrix<f64>, y: &[f64], weights: &[f64]) -> Result<BaseModel> {
        train_weighted_learner(self.kind, x, y, weights, &self.params)
    }

    fn constant(&self, label: u8) -> BaseModel {
        BaseModel::Constant { label }
    }
}

fn check_training_inputs(x: &DMatrix<f64>, y: &[f64], weights: &[f64]) -> Result<()> {
    if x.nrows() != y.len() || y.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} feature rows, {} labels and {} weights",
            x.nrows(),
            y.len(),
            weights.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("features must be finite".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Weight(
            "weights must be finite and nonnegative".into(),
        ));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Weight("all weights are zero".into()));
    }
    crate::data::check_binary("y", y)
}

/// Trains one of the built-in learners on weighted binary data.
pub fn train_weighted_learner(
    kind: LearnerKind,
    x: &DMatrix<f64>,
    y: &[f64],
    weights: &[f64],
    params: &LearnerParams,
) -> Result<BaseModel> {
    check_training_inputs(x, y, weights)?;
    Ok(match kind {
        LearnerKind::LogisticRegression => {
            BaseModel::LogisticRegression(fit_logistic(x, y, weights, params)?)
        }
        LearnerKind::DecisionStump => fit_stump(x, y, weights),
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn fit_logistic(
    x: &DMatrix<f64>,
    y: &[f64],
    weights: &[f64],
    params: &LearnerParams,
) -> Result<LinearModel> {
    if params.l2.is_nan()
        || params.l2 < 0.0
        || params.max_epochs == 0
        || params.tol.is_nan()
        || params.tol < 0.0
    {
        return Err(Error::Config(
            "l2 and tol must be nonnegative, max_epochs positive".into(),
        ));
    }
    let rows: Vec<usize> = (0..y.len()).filter(|&i| weights[i] > 0.0).collect();
    let total: f64 = rows.iter().map(|&i| weights[i]).sum();
    let p = x.ncols();
    let step = match params.step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::Config(format!("step must be positive, got {s}"))),
        None => {
            let max_sq = rows
                .iter()
                .map(|&i| 1.0 + x.row(i).iter().map(|v| v * v).sum::<f64>())
                .fold(0.0, f64::max);
            1.0 / (0.25 * max_sq + params.l2)
        }
    };

    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut grad = vec![0.0; p];
    for _ in 0..params.max_epochs {
        grad.iter_mut()
            .zip(&w)
            .for_each(|(g, wj)| *g = params.l2 * wj);
        let mut grad_b = 0.0;
        for &i in &rows {
            let z = b + (0..p).map(|j| x[(i, j)] * w[j]).sum::<f64>();
            let r = weights[i] / total * (sigmoid(z) - y[i]);
            for (j, g) in grad.iter_mut().enumerate() {
                *g += r * x[(i, j)];
            }
            grad_b += r;
        }
        let norm = (grad.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if norm <= params.tol {
            break;
        }
        w.iter_mut().zip(&grad).for_each(|(wj, g)| *wj -= step * g);
        b -= step * grad_b;
    }
    if w.iter().chain([&b]).any(|v| !v.is_finite()) {
        return Err(Error::Fit("logistic regression diverged".into()));
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
    })
}

/// Exhaustive weighted stump. Candidate thresholds per feature are the
/// midpoints between consecutive distinct values plus the largest value.
fn fit_stump(x: &DMatrix<f64>, y: &[f64], weights: &[f64]) -> BaseModel {
    let n = y.len();
    let pos_total: f64 = (0..n).map(|i| weights[i] * y[i]).sum();
    let neg_total: f64 = (0..n).map(|i| weights[i] * (1.0 - y[i])).sum();
    // Improvements within rounding noise are ties; the first stump scanned wins.
    let tol = 1e-12 * (pos_total + neg_total);
    let mut best: Option<(f64, BaseModel)> = None;
    let mut consider = |err: f64, model: BaseModel| {
        if best.as_ref().is_none_or(|(e, _)| err < *e - tol) {
            best = Some((err, model));
        }
    };
    for feature in 0..x.ncols() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[(a, feature)].total_cmp(&x[(b, feature)]));
        // Weighted positives and negatives at or below the current threshold.
        let (mut pos_le, mut neg_le) = (0.0, 0.0);
        let mut k = 0;
        while k < n {
            let v = x[(order[k], feature)];
            while k < n && x[(order[k], feature)] == v {
                let i = order[k];
                pos_le += weights[i] * y[i];
                neg_le += weights[i] * (1.0 - y[i]);
                k += 1;
            }
            let threshold = if k < n {
                0.5 * (v + x[(order[k], feature)])
            } else {
                v
            };
            // Polarity 1 predicts 1 above the threshold.
            let err_up = pos_le + (neg_total - neg_le);
            let err_down = neg_le + (pos_total - pos_le);
            consider(
                err_up,
                BaseModel::DecisionStump {
                    feature,
                    threshold,
                    polarity: 1,
                },
            );
            consider(
                err_down,
                BaseModel::DecisionStump {
                    feature,
                    threshold,
                    polarity: -1,
                },
            );
        }
    }
    match best {
        Some((_, m)) => m,
        None => BaseModel::Constant {
            label: u8::from(pos_total > neg_total),
        },
    }
}

/// Numeric feature columns of a dataset as a row-major matrix.
pub fn feature_matrix<S: AsRef<str>>(data: &Dataset, columns: &[S]) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(data.n_rows(), columns.len());
    for (j, name) in columns.iter().enumerate() {
        let values = data.numeric(name.as_ref())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "feature `{}` is not finite at row {}",
                name.as_ref(),
                i + 1
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}
