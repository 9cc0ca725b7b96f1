use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::base::{check_inputs, BaseMetricId, Confusion};
use crate::data::{GroupKey, Groups};
use crate::error::{Error, Result};

/// User-supplied metric: `(y_true, y_pred, sample_weight) -> value`, `None`
/// when undefined.
pub type MetricFn = Arc<dyn Fn(&[f64], &[f64], Option<&[f64]>) -> Option<f64> + Send + Sync>;

/// A metric to disaggregate: one of the named base metrics or an arbitrary
/// function.
#[derive(Clone)]
pub enum Metric {
    Base(BaseMetricId),
    Custom { name: String, func: MetricFn },
}

impl Metric {
    pub fn custom<F>(name: impl Into<String>, func: F) -> Self
    where
        F: Fn(&[f64], &[f64], Option<&[f64]>) -> Option<f64> + Send + Sync + 'static,
    {
        Metric::Custom {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Metric::Base(id) => id.as_str(),
            Metric::Custom { name, .. } => name,
        }
    }
}

impl From<BaseMetricId> for Metric {
    fn from(id: BaseMetricId) -> Self {
        Metric::Base(id)
    }
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Base(id) => write!(f, "Metric::Base({id})"),
            Metric::Custom { name, .. } => write!(f, "Metric::Custom({name})"),
        }
    }
}

pub type MetricValues = BTreeMap<String, Option<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: GroupKey,
    pub values: MetricValues,
    pub n: usize,
}

/// Overall and per-group metric values. `None` (serialized as `null`) marks
/// an undefined value; every such value is also listed in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFrame {
    pub metrics: Vec<String>,
    pub overall: MetricValues,
    pub by_group: Vec<GroupRow>,
    pub flags: Vec<String>,
}

impl MetricFrame {
    pub fn has_metric(&self, metric: &str) -> bool {
        self.metrics.iter().any(|m| m == metric)
    }

    pub fn overall_value(&self, metric: &str) -> Option<f64> {
        self.overall.get(metric).copied().flatten()
    }

    pub fn group_value(&self, group: &GroupKey, metric: &str) -> Option<f64> {
        self.by_group
            .iter()
            .find(|r| &r.group == group)
            .and_then(|r| r.values.get(metric).copied().flatten())
    }

    /// Per-group values of one metric in group order.
    pub fn column(&self, metric: &str) -> Vec<(&GroupKey, Option<f64>)> {
        self.by_group
            .iter()
            .map(|r| (&r.group, r.values.get(metric).copied().flatten()))
            .collect()
    }
}

/// Evaluates each metric on all rows and on every group.
pub fn disaggregate(
    metrics: &[Metric],
    y_true: &[f64],
    y_pred: &[f64],
    groups: &Groups,
    sample_weight: Option<&[f64]>,
) -> Result<MetricFrame> {
    if metrics.is_empty() {
        return Err(Error::Config("at least one metric is required".into()));
    }
    let mut names = HashSet::new();
    for m in metrics {
        if !names.insert(m.name()) {
            return Err(Error::Config(format!("metric `{}` listed twice", m.name())));
        }
    }
    check_inputs(y_true, y_pred, sample_weight)?;
    if groups.n_rows() != y_true.len() {
        return Err(Error::Shape(format!(
            "sensitive features have {} rows, expected {}",
            groups.n_rows(),
            y_true.len()
        )));
    }

    let mut flags = Vec::new();
    let mut evaluate = |rows: &[usize], scope: &str| -> MetricValues {
        let confusion = Confusion::tally(y_true, y_pred, sample_weight, rows.iter().copied());
        metrics
            .iter()
            .map(|m| {
                let value = match m {
                    Metric::Base(id) => confusion.value(*id),
                    Metric::Custom { func, .. } => {
                        let yt: Vec<f64> = rows.iter().map(|&i| y_true[i]).collect();
                        let yp: Vec<f64> = rows.iter().map(|&i| y_pred[i]).collect();
                        let w: Option<Vec<f64>> =
                            sample_weight.map(|w| rows.iter().map(|&i| w[i]).collect());
                        func(&yt, &yp, w.as_deref())
                    }
                };
                if value.is_none() {
                    flags.push(format!("undefined:{}:{scope}", m.name()));
                }
                (m.name().to_string(), value)
            })
            .collect()
    };

    let all: Vec<usize> = (0..y_true.len()).collect();
    let overall = evaluate(&all, "overall");
    let by_group = groups
        .keys()
        .iter()
        .enumerate()
        .map(|(g, key)| GroupRow {
            group: key.clone(),
            values: evaluate(groups.members(g), &key.to_string()),
            n: groups.members(g).len(),
        })
        .collect();

    Ok(MetricFrame {
        metrics: metrics.iter().map(|m| m.name().to_string()).collect(),
        overall,
        by_group,
        flags,
    })
}

/// [`disaggregate`] over base metrics given by name.
pub fn disaggregate_named<S: AsRef<str>>(
    metric_names: &[S],
    y_true: &[f64],
    y_pred: &[f64],
    groups: &Groups,
    sample_weight: Option<&[f64]>,
) -> Result<MetricFrame> {
    let metrics = metric_names
        .iter()
        .map(|n| n.as_ref().parse::<BaseMetricId>().map(Metric::Base))
        .collect::<Result<Vec<_>>>()?;
    disaggregate(&metrics, y_true, y_pred, groups, sample_weight)
}
