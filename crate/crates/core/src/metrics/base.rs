use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The closed set of metrics addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMetricId {
    Accuracy,
    SelectionRate,
    TruePositiveRate,
    FalsePositiveRate,
    FalseNegativeRate,
    TrueNegativeRate,
    BalancedAccuracy,
    Count,
}

impl BaseMetricId {
    pub const ALL: [BaseMetricId; 8] = [
        BaseMetricId::Accuracy,
        BaseMetricId::SelectionRate,
        BaseMetricId::TruePositiveRate,
        BaseMetricId::FalsePositiveRate,
        BaseMetricId::FalseNegativeRate,
        BaseMetricId::TrueNegativeRate,
        BaseMetricId::BalancedAccuracy,
        BaseMetricId::Count,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaseMetricId::Accuracy => "accuracy",
            BaseMetricId::SelectionRate => "selection_rate",
            BaseMetricId::TruePositiveRate => "true_positive_rate",
            BaseMetricId::FalsePositiveRate => "false_positive_rate",
            BaseMetricId::FalseNegativeRate => "false_negative_rate",
            BaseMetricId::TrueNegativeRate => "true_negative_rate",
            BaseMetricId::BalancedAccuracy => "balanced_accuracy",
            BaseMetricId::Count => "count",
        }
    }

    /// Whether defined values always lie in [0, 1].
    pub fn is_rate(self) -> bool {
        self != BaseMetricId::Count
    }
}

impl fmt::Display for BaseMetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseMetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaseMetricId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

/// Weighted confusion-matrix totals. Predictions may be fractional
/// (expected predictions of a randomized classifier), in which case each row
/// contributes `p` to the positive and `1 - p` to the negative prediction cells.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Confusion {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    pub fn_: f64,
    pub count: usize,
}

impl Confusion {
    pub fn tally(
        y_true: &[f64],
        y_pred: &[f64],
        weights: Option<&[f64]>,
        rows: impl Iterator<Item = usize>,
    ) -> Self {
        let mut c = Confusion::default();
        for i in rows {
            let w = weights.map_or(1.0, |w| w[i]);
            let p = y_pred[i];
            if y_true[i] == 1.0 {
                c.tp += w * p;
                c.fn_ += w * (1.0 - p);
            } else {
                c.fp += w * p;
                c.tn += w * (1.0 - p);
            }
            c.count += 1;
        }
        c
    }

    pub fn value(&self, id: BaseMetricId) -> Option<f64> {
        let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
        let total = self.tp + self.fp + self.tn + self.fn_;
        let pos = self.tp + self.fn_;
        let neg = self.fp + self.tn;
        match id {
            BaseMetricId::Accuracy => ratio(self.tp + self.tn, total),
            BaseMetricId::SelectionRate => ratio(self.tp + self.fp, total),
            BaseMetricId::TruePositiveRate => ratio(self.tp, pos),
            BaseMetricId::FalsePositiveRate => ratio(self.fp, neg),
            BaseMetricId::FalseNegativeRate => ratio(self.fn_, pos),
            BaseMetricId::TrueNegativeRate => ratio(self.tn, neg),
            BaseMetricId::BalancedAccuracy => {
                Some((ratio(self.tp, pos)? + ratio(self.tn, neg)?) / 2.0)
            }
            BaseMetricId::Count => Some(self.count as f64),
        }
    }
}

/// Checks the shared preconditions of metric inputs.
pub(crate) fn check_inputs(y_true: &[f64], y_pred: &[f64], weights: Option<&[f64]>) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "y_true has {} entries, y_pred has {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Shape("inputs are empty".into()));
    }
    crate::data::check_binary("y_true", y_true)?;
    if let Some(i) = y_pred.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Value {
            column: "y_pred".into(),
            row: i + 1,
            message: format!("prediction {} outside [0, 1]", y_pred[i]),
        });
    }
    if let Some(w) = weights {
        if w.len() != y_true.len() {
            return Err(Error::Shape(format!(
                "sample_weight has {} entries, expected {}",
                w.len(),
                y_true.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Weight(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(Error::Weight("all weights are zero".into()));
        }
    }
    Ok(())
}

/// Evaluates one metric over all rows. `None` marks an undefined value
/// (zero denominator).
pub fn evaluate_base_metric(
    id: BaseMetricId,
    y_true: &[f64],
    y_pred: &[f64],
    sample_weight: Option<&[f64]>,
) -> Result<Option<f64>> {
    check_inputs(y_true, y_pred, sample_weight)?;
    Ok(Confusion::tally(y_true, y_pred, sample_weight, 0..y_true.len()).value(id))
}
