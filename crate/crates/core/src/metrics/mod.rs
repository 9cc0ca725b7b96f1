//! Disaggregated evaluation and scalar fairness metrics.
//!
//! [`disaggregate`] evaluates metrics overall and per group; [`difference`]
//! and [`ratio`] compare the group values. Named fairness metrics such as
//! [`demographic_parity_difference`] are thin compositions of the two, and
//! [`make_derived_metric`] builds new ones.

mod aggregate;
mod base;
mod derived;
mod frame;

pub use aggregate::{
    demographic_parity_difference, difference, equalized_odds_difference, ratio, AggregationMethod,
    UndefinedPolicy,
};
pub use base::{evaluate_base_metric, BaseMetricId};
pub use derived::{make_derived_metric, Aggregation, DerivedMetric, FairnessMetric};
pub use frame::{
    disaggregate, disaggregate_named, GroupRow, Metric, MetricFn, MetricFrame, MetricValues,
};
