use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::aggregate::{
    difference, equalized_odds_difference, ratio, AggregationMethod, UndefinedPolicy,
};
use super::base::BaseMetricId;
use super::frame::{disaggregate, Metric};
use crate::data::Groups;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Difference,
    Ratio,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Difference => "difference",
            Aggregation::Ratio => "ratio",
        }
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "difference" => Ok(Aggregation::Difference),
            "ratio" => Ok(Aggregation::Ratio),
            _ => Err(Error::Config(format!("unknown aggregation `{s}`"))),
        }
    }
}

/// A scalar fairness metric built from a base metric, an aggregation and a
/// comparison method. Evaluating it is the same as disaggregating the base
/// metric and aggregating the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DerivedMetric {
    pub base: BaseMetricId,
    pub aggregation: Aggregation,
    pub method: AggregationMethod,
}

impl DerivedMetric {
    pub fn new(base: BaseMetricId, aggregation: Aggregation, method: AggregationMethod) -> Self {
        Self {
            base,
            aggregation,
            method,
        }
    }

    /// `<base>_<aggregation>`, suffixed with `_to_overall` for that method.
    pub fn name(&self) -> String {
        let mut s = format!("{}_{}", self.base.as_str(), self.aggregation.as_str());
        if self.method == AggregationMethod::ToOverall {
            s.push_str("_to_overall");
        }
        s
    }

    pub fn evaluate(
        &self,
        y_true: &[f64],
        y_pred: &[f64],
        groups: &Groups,
        sample_weight: Option<&[f64]>,
    ) -> Result<f64> {
        let frame = disaggregate(
            &[Metric::Base(self.base)],
            y_true,
            y_pred,
            groups,
            sample_weight,
        )?;
        let name = self.base.as_str();
        match self.aggregation {
            Aggregation::Difference => difference(&frame, name, self.method, UndefinedPolicy::Skip),
            Aggregation::Ratio => ratio(&frame, name, self.method, UndefinedPolicy::Skip),
        }
    }
}

impl fmt::Display for DerivedMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Builds a derived metric from names, e.g.
/// `make_derived_metric("accuracy", "difference", "between_groups")`.
pub fn make_derived_metric(base: &str, aggregation: &str, method: &str) -> Result<DerivedMetric> {
    Ok(DerivedMetric::new(
        base.parse()?,
        aggregation.parse()?,
        method.parse()?,
    ))
}

/// Fairness metrics addressable by a single name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FairnessMetric {
    Derived(DerivedMetric),
    EqualizedOddsDifference,
}

impl FairnessMetric {
    pub fn name(&self) -> String {
        match self {
            FairnessMetric::Derived(d) => match (d.base, d.aggregation, d.method) {
                (
                    BaseMetricId::SelectionRate,
                    Aggregation::Difference,
                    AggregationMethod::BetweenGroups,
                ) => "demographic_parity_difference".into(),
                (
                    BaseMetricId::SelectionRate,
                    Aggregation::Ratio,
                    AggregationMethod::BetweenGroups,
                ) => "demographic_parity_ratio".into(),
                _ => d.name(),
            },
            FairnessMetric::EqualizedOddsDifference => "equalized_odds_difference".into(),
        }
    }

    /// Lower values mean more parity (differences); ratios read the other way.
    pub fn is_disparity(&self) -> bool {
        match self {
            FairnessMetric::Derived(d) => d.aggregation == Aggregation::Difference,
            FairnessMetric::EqualizedOddsDifference => true,
        }
    }

    pub fn evaluate(
        &self,
        y_true: &[f64],
        y_pred: &[f64],
        groups: &Groups,
        sample_weight: Option<&[f64]>,
    ) -> Result<f64> {
        match self {
            FairnessMetric::Derived(d) => d.evaluate(y_true, y_pred, groups, sample_weight),
            FairnessMetric::EqualizedOddsDifference => {
                equalized_odds_difference(y_true, y_pred, groups, sample_weight)
            }
        }
    }
}

impl FromStr for FairnessMetric {
    type Err = Error;

    /// Accepts `demographic_parity_difference`, `demographic_parity_ratio`,
    /// `equalized_odds_difference` and any `<base>_<difference|ratio>[_to_overall]`.
    fn from_str(s: &str) -> Result<Self> {
        let sel = BaseMetricId::SelectionRate;
        let bg = AggregationMethod::BetweenGroups;
        match s {
            "demographic_parity_difference" => {
                return Ok(FairnessMetric::Derived(DerivedMetric::new(
                    sel,
                    Aggregation::Difference,
                    bg,
                )))
            }
            "demographic_parity_ratio" => {
                return Ok(FairnessMetric::Derived(DerivedMetric::new(
                    sel,
                    Aggregation::Ratio,
                    bg,
                )))
            }
            "equalized_odds_difference" => return Ok(FairnessMetric::EqualizedOddsDifference),
            _ => {}
        }
        let (rest, method) = match s.strip_suffix("_to_overall") {
            Some(rest) => (rest, AggregationMethod::ToOverall),
            None => (s, bg),
        };
        for agg in [Aggregation::Difference, Aggregation::Ratio] {
            if let Some(base) = rest.strip_suffix(&format!("_{}", agg.as_str())) {
                return Ok(FairnessMetric::Derived(DerivedMetric::new(
                    base.parse()?,
                    agg,
                    method,
                )));
            }
        }
        Err(Error::Config(format!("unknown fairness metric `{s}`")))
    }
}
