use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::base::BaseMetricId;
use super::frame::{disaggregate, Metric, MetricFrame};
use crate::data::Groups;
use crate::error::{Error, Result};

/// How group values are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    /// Extreme groups against each other.
    #[default]
    BetweenGroups,
    /// Each group against the overall value.
    ToOverall,
}

impl AggregationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregationMethod::BetweenGroups => "between_groups",
            AggregationMethod::ToOverall => "to_overall",
        }
    }
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "between_groups" => Ok(AggregationMethod::BetweenGroups),
            "to_overall" => Ok(AggregationMethod::ToOverall),
            _ => Err(Error::Config(format!("unknown aggregation method `{s}`"))),
        }
    }
}

/// What to do with undefined group values during aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedPolicy {
    Raise,
    /// Ignore undefined values; they stay listed in [`MetricFrame::flags`].
    #[default]
    Skip,
}

struct Operands {
    groups: Vec<f64>,
    overall: Option<f64>,
}

fn operands(
    frame: &MetricFrame,
    metric: &str,
    method: AggregationMethod,
    policy: UndefinedPolicy,
) -> Result<Operands> {
    if !frame.has_metric(metric) {
        return Err(Error::Config(format!(
            "metric `{metric}` is not in the frame"
        )));
    }
    let mut groups = Vec::with_capacity(frame.by_group.len());
    for (key, value) in frame.column(metric) {
        match (value, policy) {
            (Some(v), _) => groups.push(v),
            (None, UndefinedPolicy::Raise) => {
                return Err(Error::Undefined(format!(
                    "{metric} is undefined for group {key}"
                )))
            }
            (None, UndefinedPolicy::Skip) => {}
        }
    }
    if groups.is_empty() {
        return Err(Error::Aggregation(format!(
            "{metric} is undefined for every group"
        )));
    }
    let overall = match method {
        AggregationMethod::BetweenGroups => None,
        AggregationMethod::ToOverall => match (frame.overall_value(metric), policy) {
            (Some(v), _) => Some(v),
            (None, UndefinedPolicy::Raise) => {
                return Err(Error::Undefined(format!("overall {metric} is undefined")))
            }
            (None, UndefinedPolicy::Skip) => {
                return Err(Error::Aggregation(format!(
                    "overall {metric} is undefined, cannot compare to it"
                )))
            }
        },
    };
    Ok(Operands { groups, overall })
}

fn extremes(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Largest gap between groups, or between any group and the overall value.
pub fn difference(
    frame: &MetricFrame,
    metric: &str,
    method: AggregationMethod,
    policy: UndefinedPolicy,
) -> Result<f64> {
    let ops = operands(frame, metric, method, policy)?;
    Ok(match ops.overall {
        None => {
            let (lo, hi) = extremes(&ops.groups);
            hi - lo
        }
        Some(o) => ops.groups.iter().map(|v| (v - o).abs()).fold(0.0, f64::max),
    })
}

/// Smallest ratio between groups, or between any group and the overall
/// value, oriented to lie in [0, 1]. Values must be nonnegative; `0/0` reads
/// as perfect parity (1.0) and `0/x` as 0.0.
pub fn ratio(
    frame: &MetricFrame,
    metric: &str,
    method: AggregationMethod,
    policy: UndefinedPolicy,
) -> Result<f64> {
    let ops = operands(frame, metric, method, policy)?;
    if ops
        .groups
        .iter()
        .chain(ops.overall.iter())
        .any(|v| *v < 0.0)
    {
        return Err(Error::Aggregation(format!(
            "ratio of {metric} needs nonnegative values"
        )));
    }
    let pair = |a: f64, b: f64| {
        if a == b {
            1.0
        } else if a == 0.0 || b == 0.0 {
            0.0
        } else {
            (a / b).min(b / a)
        }
    };
    Ok(match ops.overall {
        None => {
            let (lo, hi) = extremes(&ops.groups);
            pair(lo, hi)
        }
        Some(o) => ops.groups.iter().map(|&v| pair(v, o)).fold(1.0, f64::min),
    })
}

/// Gap between the highest and lowest group selection rate.
pub fn demographic_parity_difference(
    y_pred: &[f64],
    groups: &Groups,
    sample_weight: Option<&[f64]>,
) -> Result<f64> {
    let y_true = vec![0.0; y_pred.len()];
    let frame = disaggregate(
        &[Metric::Base(BaseMetricId::SelectionRate)],
        &y_true,
        y_pred,
        groups,
        sample_weight,
    )?;
    difference(
        &frame,
        BaseMetricId::SelectionRate.as_str(),
        AggregationMethod::BetweenGroups,
        UndefinedPolicy::Skip,
    )
}

/// Larger of the between-group gaps in true- and false-positive rate.
///
/// Groups whose rate is undefined are skipped; if one rate is undefined for
/// every group, the other alone decides.
pub fn equalized_odds_difference(
    y_true: &[f64],
    y_pred: &[f64],
    groups: &Groups,
    sample_weight: Option<&[f64]>,
) -> Result<f64> {
    let frame = disaggregate(
        &[
            Metric::Base(BaseMetricId::TruePositiveRate),
            Metric::Base(BaseMetricId::FalsePositiveRate),
        ],
        y_true,
        y_pred,
        groups,
        sample_weight,
    )?;
    let gap = |m: BaseMetricId| {
        difference(
            &frame,
            m.as_str(),
            AggregationMethod::BetweenGroups,
            UndefinedPolicy::Skip,
        )
    };
    match (
        gap(BaseMetricId::TruePositiveRate),
        gap(BaseMetricId::FalsePositiveRate),
    ) {
        (Ok(a), Ok(b)) => Ok(a.max(b)),
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => Ok(a),
        (Err(_), Err(_)) => Err(Error::Aggregation(
            "true and false positive rates are undefined for every group".into(),
        )),
    }
}
