use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{GroupKey, Groups};
use crate::error::{Error, Result};

/// A deterministic or coin-flip decision rule applied to one score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrimitiveRule {
    /// Predict 1 iff `score > threshold`.
    Threshold(f64),
    Constant(u8),
    /// Predict 1 with the given probability, ignoring the score.
    Coin(f64),
}

impl PrimitiveRule {
    /// Infinite thresholds become the equivalent constant rules.
    pub fn from_threshold(threshold: f64) -> Self {
        if threshold == f64::INFINITY {
            PrimitiveRule::Constant(0)
        } else if threshold == f64::NEG_INFINITY {
            PrimitiveRule::Constant(1)
        } else {
            PrimitiveRule::Threshold(threshold)
        }
    }

    /// Probability of predicting 1 for this score.
    pub fn prob_one(&self, score: f64) -> f64 {
        match *self {
            PrimitiveRule::Threshold(t) => f64::from(u8::from(score > t)),
            PrimitiveRule::Constant(c) => f64::from(c),
            PrimitiveRule::Coin(q) => q,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            PrimitiveRule::Threshold(_) => "threshold",
            PrimitiveRule::Constant(_) => "constant",
            PrimitiveRule::Coin(_) => "coin",
        }
    }

    fn param(&self) -> f64 {
        match *self {
            PrimitiveRule::Threshold(t) => t,
            PrimitiveRule::Constant(c) => f64::from(c),
            PrimitiveRule::Coin(q) => q,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleRepr {
    kind: String,
    param: f64,
}

impl Serialize for PrimitiveRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RuleRepr {
            kind: self.kind().to_string(),
            param: self.param(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PrimitiveRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = RuleRepr::deserialize(deserializer)?;
        match repr.kind.as_str() {
            "threshold" if repr.param.is_finite() => Ok(PrimitiveRule::Threshold(repr.param)),
            "constant" if repr.param == 0.0 || repr.param == 1.0 => {
                Ok(PrimitiveRule::Constant(repr.param as u8))
            }
            "coin" if (0.0..=1.0).contains(&repr.param) => Ok(PrimitiveRule::Coin(repr.param)),
            kind => Err(D::Error::custom(format!(
                "invalid rule {kind}({})",
                repr.param
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub w: f64,
    pub rule: PrimitiveRule,
}

/// Expected rates of a group under its mixture. Rates whose class is absent
/// from the group are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub selection_rate: f64,
    pub false_positive_rate: Option<f64>,
    pub true_positive_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPolicy {
    pub group: GroupKey,
    pub mixture: Vec<Component>,
    pub operating_point: OperatingPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    DemographicParity,
    EqualizedOdds,
    /// Equal true-positive rates, equivalently equal false-negative rates.
    #[serde(alias = "false_negative_rate_parity")]
    TruePositiveRateParity,
    FalsePositiveRateParity,
}

impl Constraint {
    pub fn as_str(self) -> &'static str {
        match self {
            Constraint::DemographicParity => "demographic_parity",
            Constraint::EqualizedOdds => "equalized_odds",
            Constraint::TruePositiveRateParity => "true_positive_rate_parity",
            Constraint::FalsePositiveRateParity => "false_positive_rate_parity",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "demographic_parity" => Ok(Constraint::DemographicParity),
            "equalized_odds" => Ok(Constraint::EqualizedOdds),
            "true_positive_rate_parity" | "false_negative_rate_parity" => {
                Ok(Constraint::TruePositiveRateParity)
            }
            "false_positive_rate_parity" => Ok(Constraint::FalsePositiveRateParity),
            _ => Err(Error::Config(format!("unknown constraint `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Accuracy,
    BalancedAccuracy,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Accuracy => "accuracy",
            Objective::BalancedAccuracy => "balanced_accuracy",
        }
    }

    /// Value from expected overall confusion counts.
    pub fn value(self, tp: f64, fp: f64, positives: f64, negatives: f64) -> f64 {
        let tn = negatives - fp;
        match self {
            Objective::Accuracy => (tp + tn) / (positives + negatives),
            Objective::BalancedAccuracy => 0.5 * (tp / positives + tn / negatives),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Objective::Accuracy),
            "balanced_accuracy" => Ok(Objective::BalancedAccuracy),
            _ => Err(Error::Config(format!("unknown objective `{s}`"))),
        }
    }
}

/// Per-group randomized thresholding of a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub constraint: Constraint,
    pub objective: Objective,
    pub score_column: String,
    pub sensitive_columns: Vec<String>,
    pub groups: Vec<GroupPolicy>,
}

/// Expected per-group rates of a policy on labelled data.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRates {
    pub group: GroupKey,
    pub selection_rate: f64,
    pub true_positive_rate: Option<f64>,
    pub false_positive_rate: Option<f64>,
}

impl ThresholdPolicy {
    pub fn from_json(text: &str) -> Result<Self> {
        let policy: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("threshold policy: {e}")))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.groups {
            let total: f64 = g.mixture.iter().map(|c| c.w).sum();
            if g.mixture.is_empty()
                || g.mixture.len() > 3
                || g.mixture.iter().any(|c| c.w.is_nan() || c.w < 0.0)
                || (total - 1.0).abs() > 1e-9
            {
                return Err(Error::Config(format!(
                    "invalid mixture for group {}",
                    g.group
                )));
            }
        }
        Ok(())
    }

    pub fn group(&self, key: &GroupKey) -> Option<&GroupPolicy> {
        self.groups.iter().find(|g| &g.group == key)
    }

    /// Policy entry for each group of `groups`, in the order of `groups.keys()`.
    fn resolve(&self, groups: &Groups) -> Result<Vec<&GroupPolicy>> {
        let by_key: HashMap<&GroupKey, &GroupPolicy> =
            self.groups.iter().map(|g| (&g.group, g)).collect();
        groups
            .keys()
            .iter()
            .map(|k| {
                by_key.get(k).copied().ok_or_else(|| {
                    Error::Prediction(format!("group {k} is not covered by the policy"))
                })
            })
            .collect()
    }

    fn check_rows(scores: &[f64], groups: &Groups) -> Result<()> {
        if scores.len() != groups.n_rows() {
            return Err(Error::Shape(format!(
                "{} scores for {} rows of sensitive features",
                scores.len(),
                groups.n_rows()
            )));
        }
        Ok(())
    }

    /// Probability of predicting 1 for each row.
    pub fn expected_predictions(&self, scores: &[f64], groups: &Groups) -> Result<Vec<f64>> {
        Self::check_rows(scores, groups)?;
        let resolved = self.resolve(groups)?;
        Ok(scores
            .iter()
            .zip(groups.row_groups())
            .map(|(&s, &g)| {
                resolved[g]
                    .mixture
                    .iter()
                    .map(|c| c.w * c.rule.prob_one(s))
                    .sum()
            })
            .collect())
    }

    /// Expected selection, true- and false-positive rates per group,
    /// computed from the mixtures without sampling.
    pub fn group_rates(
        &self,
        scores: &[f64],
        y_true: &[f64],
        groups: &Groups,
    ) -> Result<Vec<GroupRates>> {
        let p = self.expected_predictions(scores, groups)?;
        Ok(groups
            .keys()
            .iter()
            .enumerate()
            .map(|(g, key)| {
                let (mut tp, mut fp, mut pos, mut neg) = (0.0, 0.0, 0.0, 0.0);
                for &i in groups.members(g) {
                    if y_true[i] == 1.0 {
                        tp += p[i];
                        pos += 1.0;
                    } else {
                        fp += p[i];
                        neg += 1.0;
                    }
                }
                GroupRates {
                    group: key.clone(),
                    selection_rate: (tp + fp) / (pos + neg),
                    true_positive_rate: (pos > 0.0).then(|| tp / pos),
                    false_positive_rate: (neg > 0.0).then(|| fp / neg),
                }
            })
            .collect())
    }

    /// The policy's objective on labelled data, from expected predictions.
    pub fn objective_value(&self, scores: &[f64], y_true: &[f64], groups: &Groups) -> Result<f64> {
        let p = self.expected_predictions(scores, groups)?;
        Ok(expected_objective(self.objective, &p, y_true))
    }
}

pub(crate) fn expected_objective(objective: Objective, p: &[f64], y_true: &[f64]) -> f64 {
    let (mut tp, mut fp, mut pos, mut neg) = (0.0, 0.0, 0.0, 0.0);
    for (&pi, &y) in p.iter().zip(y_true) {
        if y == 1.0 {
            tp += pi;
            pos += 1.0;
        } else {
            fp += pi;
            neg += 1.0;
        }
    }
    objective.value(tp, fp, pos, neg)
}

/// Samples hard predictions from the policy.
///
/// Every row consumes two uniforms from a ChaCha8 stream seeded with `seed`,
/// in input order: one picks the mixture component, the other flips the coin
/// when the component is a coin rule.
pub fn predict_with_policy(
    policy: &ThresholdPolicy,
    scores: &[f64],
    groups: &Groups,
    seed: u64,
) -> Result<Vec<u8>> {
    ThresholdPolicy::check_rows(scores, groups)?;
    let resolved = policy.resolve(groups)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(scores
        .iter()
        .zip(groups.row_groups())
        .map(|(&s, &g)| {
            let pick: f64 = rng.random();
            let flip: f64 = rng.random();
            let mixture = &resolved[g].mixture;
            let mut acc = 0.0;
            let mut rule = mixture[mixture.len() - 1].rule;
            for c in mixture {
                acc += c.w;
                if pick < acc {
                    rule = c.rule;
                    break;
                }
            }
            match rule {
                PrimitiveRule::Coin(q) => u8::from(flip < q),
                other => other.prob_one(s) as u8,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(mixture: Vec<Component>) -> ThresholdPolicy {
        ThresholdPolicy {
            constraint: Constraint::DemographicParity,
            objective: Objective::Accuracy,
            score_column: "score".into(),
            sensitive_columns: vec!["group".into()],
            groups: vec![GroupPolicy {
                group: GroupKey::single("a"),
                mixture,
                operating_point: OperatingPoint {
                    selection_rate: 0.5,
                    false_positive_rate: None,
                    true_positive_rate: None,
                },
            }],
        }
    }

    #[test]
    fn pure_threshold() {
        let p = single(vec![Component {
            w: 1.0,
            rule: PrimitiveRule::Threshold(0.5),
        }]);
        let g = Groups::from_labels(&["a", "a"]);
        assert_eq!(
            predict_with_policy(&p, &[0.4, 0.6], &g, 0).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn constant_one_ignores_scores() {
        let p = single(vec![Component {
            w: 1.0,
            rule: PrimitiveRule::Constant(1),
        }]);
        let g = Groups::from_labels(&["a"; 5]);
        let out = predict_with_policy(&p, &[0.0, 0.3, 0.5, 0.9, -2.0], &g, 3).unwrap();
        assert_eq!(out, vec![1; 5]);
    }

    #[test]
    fn even_mixture_monte_carlo() {
        let p = single(vec![
            Component {
                w: 0.5,
                rule: PrimitiveRule::Constant(0),
            },
            Component {
                w: 0.5,
                rule: PrimitiveRule::Constant(1),
            },
        ]);
        let n = 10_000;
        let g = Groups::from_labels(&vec!["a"; n]);
        let out = predict_with_policy(&p, &vec![0.5; n], &g, 11).unwrap();
        let mean = out.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() <= 0.02, "{mean}");
        assert_eq!(out, predict_with_policy(&p, &vec![0.5; n], &g, 11).unwrap());
    }

    #[test]
    fn unseen_group_is_an_error() {
        let p = single(vec![Component {
            w: 1.0,
            rule: PrimitiveRule::Constant(1),
        }]);
        let g = Groups::from_labels(&["a", "b"]);
        assert!(matches!(
            predict_with_policy(&p, &[0.1, 0.2], &g, 0),
            Err(Error::Prediction(_))
        ));
    }

    #[test]
    fn rule_json() {
        let r = PrimitiveRule::Coin(0.25);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"kind":"coin","param":0.25}"#
        );
        let back: PrimitiveRule =
            serde_json::from_str(r#"{"kind":"constant","param":1.0}"#).unwrap();
        assert_eq!(back, PrimitiveRule::Constant(1));
        assert!(serde_json::from_str::<PrimitiveRule>(r#"{"kind":"coin","param":1.5}"#).is_err());
        assert!(serde_json::from_str::<PrimitiveRule>(r#"{"kind":"dice","param":0.5}"#).is_err());
    }

    #[test]
    fn constraint_aliases() {
        assert_eq!(
            "false_negative_rate_parity".parse::<Constraint>().unwrap(),
            Constraint::TruePositiveRateParity
        );
        let c: Constraint = serde_json::from_str("\"false_negative_rate_parity\"").unwrap();
        assert_eq!(c, Constraint::TruePositiveRateParity);
        assert!("parity".parse::<Constraint>().is_err());
    }

    #[test]
    fn invalid_mixture_rejected() {
        let p = single(vec![Component {
            w: 0.7,
            rule: PrimitiveRule::Constant(1),
        }]);
        let text = serde_json::to_string(&p).unwrap();
        assert!(matches!(
            ThresholdPolicy::from_json(&text),
            Err(Error::Config(_))
        ));
    }
}
