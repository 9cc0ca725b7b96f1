use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Column, Dataset, NamedColumn, Role};
use crate::error::{Error, Result};

/// Parameters of the synthetic generator.
///
/// Groups are identified by the keys of `group_weights`; `base_rates` must
/// name exactly the same groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_rows: usize,
    pub group_weights: BTreeMap<String, f64>,
    pub base_rates: BTreeMap<String, f64>,
    pub score_noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("synthetic config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Config("n_rows must be at least 1".into()));
        }
        if self.group_weights.is_empty() {
            return Err(Error::Config("group_weights is empty".into()));
        }
        if !self.group_weights.keys().eq(self.base_rates.keys()) {
            return Err(Error::Config(
                "group_weights and base_rates must name the same groups".into(),
            ));
        }
        if self
            .group_weights
            .values()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(Error::Config(
                "group weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = self.group_weights.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "group weights sum to {total}, expected 1"
            )));
        }
        if self.base_rates.values().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("base rates must lie in [0, 1]".into()));
        }
        if !self.score_noise.is_finite() || self.score_noise < 0.0 {
            return Err(Error::Config(
                "score_noise must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Draws a labelled dataset with one sensitive column `group`.
///
/// Per row: a group from `group_weights`, `y_true ~ Bernoulli(base_rate)`,
/// `score = clamp(0.5 * y_true + 0.25 + N(0, score_noise), 0, 1)` and
/// `y_pred = 1[score > 0.5]`. The output depends only on the config.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.score_noise)
        .map_err(|e| Error::Config(format!("score_noise: {e}")))?;
    let groups: Vec<(&String, f64, f64)> = config
        .group_weights
        .iter()
        .map(|(g, w)| (g, *w, config.base_rates[g]))
        .collect();

    let n = config.n_rows;
    let mut y_true = Vec::with_capacity(n);
    let mut y_pred = Vec::with_capacity(n);
    let mut score = Vec::with_capacity(n);
    let mut group = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = groups.len() - 1;
        for (i, (_, w, _)) in groups.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        // Skip zero-weight groups that `pick` may fall back to through rounding.
        while groups[pick].1 == 0.0 && pick > 0 {
            pick -= 1;
        }
        let (label, _, base_rate) = groups[pick];
        let y = if rng.random::<f64>() < base_rate {
            1.0
        } else {
            0.0
        };
        let eps = if config.score_noise > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        let s = (y * 0.5 + 0.25 + eps).clamp(0.0, 1.0);
        y_true.push(y);
        score.push(s);
        y_pred.push(if s > 0.5 { 1.0 } else { 0.0 });
        group.push(label.clone());
    }
    Dataset::new(vec![
        NamedColumn::new("y_true", Role::YTrue, Column::Numeric(y_true)),
        NamedColumn::new("y_pred", Role::YPred, Column::Numeric(y_pred)),
        NamedColumn::new("score", Role::Score, Column::Numeric(score)),
        NamedColumn::new("group", Role::Sensitive, Column::Categorical(group)),
    ])
}
