//! In-training mitigation through the exponentiated-gradient reduction.
//!
//! Fairness constraints are compiled to signed moment terms
//! ([`Moments`]). The solver plays a Lagrangian game: multipliers move by
//! exponentiated-gradient steps while a weighted binary [`Learner`] supplies
//! best responses. The output is a [`RandomizedClassifier`], a weighted
//! mixture of the learner's models.

mod eg;
mod learners;
mod moments;

pub use eg::{
    best_response, duality_gap, exponentiated_gradient, predict_randomized, BestResponse,
    Diagnostics, ExponentiatedGradient, PredictMode, RandomizedClassifier, WeightedModel,
};
pub use learners::{
    feature_matrix, train_weighted_learner, BaseModel, BuiltinLearner, Classifier, Learner,
    LearnerKind, LearnerParams, LinearModel,
};
pub use moments::{moment_violations, ConstraintFamily, ConstraintSpec, MomentTerm, Moments};
