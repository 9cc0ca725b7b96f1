//! Group-wise randomized thresholding of an existing score.
//!
//! [`fit_threshold_optimizer`] builds one ROC-style curve per group, takes its
//! upper hull and searches for the common operating point that maximizes the
//! objective. The result is a [`ThresholdPolicy`]: per group, a mixture of at
//! most three primitive rules.

mod fit;
mod policy;
mod roc;

pub use fit::{fit_threshold_optimizer, ThresholdOptimizer};
pub use policy::{
    predict_with_policy, Component, Constraint, GroupPolicy, GroupRates, Objective, OperatingPoint,
    PrimitiveRule, ThresholdPolicy,
};
pub use roc::{roc_points, upper_convex_hull, RocHull, RocPoint};
