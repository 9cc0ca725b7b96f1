use serde::{Deserialize, Serialize};

use super::policy::{
    Component, Constraint, GroupPolicy, Objective, OperatingPoint, PrimitiveRule, ThresholdPolicy,
};
use super::roc::{sweep, Curve};
use crate::data::{check_binary, Groups};
use crate::error::{Error, Result};

const TIE: f64 = 1e-12;

/// Settings for fitting a [`ThresholdPolicy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptimizer {
    pub constraint: Constraint,
    pub objective: Objective,
    pub grid_size: usize,
}

impl Default for ThresholdOptimizer {
    fn default() -> Self {
        Self {
            constraint: Constraint::DemographicParity,
            objective: Objective::Accuracy,
            grid_size: 1000,
        }
    }
}

impl ThresholdOptimizer {
    pub fn new(constraint: Constraint, objective: Objective) -> Self {
        Self {
            constraint,
            objective,
            ..Self::default()
        }
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn fit(&self, scores: &[f64], y_true: &[f64], groups: &Groups) -> Result<ThresholdPolicy> {
        fit_threshold_optimizer(
            scores,
            y_true,
            groups,
            self.constraint,
            self.objective,
            self.grid_size,
        )
    }
}

struct GroupData {
    n: f64,
    pos: f64,
    neg: f64,
    curve: Curve,
}

/// One candidate solution: the mixture of curve vertices chosen in each
/// group, plus the expected positive counts it produces.
struct Candidate {
    mixes: Vec<Vec<(f64, usize)>>,
    coins: Vec<(f64, f64)>,
    tp: Vec<f64>,
    fp: Vec<f64>,
}

/// Fits per-group randomized thresholds maximizing `objective` subject to
/// `constraint` on the training data.
pub fn fit_threshold_optimizer(
    scores: &[f64],
    y_true: &[f64],
    groups: &Groups,
    constraint: Constraint,
    objective: Objective,
    grid_size: usize,
) -> Result<ThresholdPolicy> {
    if grid_size < 1 {
        return Err(Error::Config("grid_size must be at least 1".into()));
    }
    if scores.len() != y_true.len() || scores.len() != groups.n_rows() {
        return Err(Error::Shape(format!(
            "{} scores, {} labels and {} sensitive rows",
            scores.len(),
            y_true.len(),
            groups.n_rows()
        )));
    }
    if scores.is_empty() {
        return Err(Error::Shape("no rows to fit on".into()));
    }
    check_binary("y_true", y_true)?;
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Value {
            column: "score".into(),
            row: i + 1,
            message: "score is NaN".into(),
        });
    }
    let needs_both = constraint != Constraint::DemographicParity;

    let mut data = Vec::with_capacity(groups.n_groups());
    for (g, key) in groups.keys().iter().enumerate() {
        let rows = groups.members(g);
        let s: Vec<f64> = rows.iter().map(|&i| scores[i]).collect();
        let y: Vec<f64> = rows.iter().map(|&i| y_true[i]).collect();
        let pos = y.iter().filter(|&&v| v == 1.0).count() as f64;
        let n = y.len() as f64;
        let neg = n - pos;
        if needs_both && (pos == 0.0 || neg == 0.0) {
            return Err(Error::Fit(format!(
                "group {key} needs positive and negative examples for {constraint}"
            )));
        }
        let points = sweep(&s, &y);
        let curve = if needs_both {
            Curve::from_sweep(&points, |p| (p.fp as f64, p.tp as f64), (neg, pos))
        } else {
            Curve::from_sweep(&points, |p| ((p.tp + p.fp) as f64, p.tp as f64), (n, 1.0))
        };
        data.push(GroupData { n, pos, neg, curve });
    }
    let pos: f64 = data.iter().map(|d| d.pos).sum();
    let neg: f64 = data.iter().map(|d| d.neg).sum();

    let grid = (0..=grid_size).map(|k| k as f64 / grid_size as f64);
    let mut xs: Vec<f64> = grid.collect();
    for d in &data {
        match constraint {
            Constraint::TruePositiveRateParity => xs.extend(&d.curve.ys),
            _ => xs.extend(&d.curve.xs),
        }
    }
    if constraint == Constraint::EqualizedOdds {
        xs.extend(crossings(&data));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut best: Option<(f64, Candidate)> = None;
    for &x in &xs {
        let cand = candidate(constraint, &data, x);
        let value = objective.value(cand.tp.iter().sum(), cand.fp.iter().sum(), pos, neg);
        if best.as_ref().is_none_or(|(v, _)| value > v + TIE) {
            best = Some((value, cand));
        }
    }
    let (_, cand) = best.expect("candidate grid is never empty");

    let policies = groups
        .keys()
        .iter()
        .zip(&data)
        .enumerate()
        .map(|(g, (key, d))| {
            let mut mixture: Vec<Component> = cand.mixes[g]
                .iter()
                .map(|&(w, k)| Component {
                    w,
                    rule: d.curve.rules[k],
                })
                .collect();
            let (coin_w, q) = cand.coins[g];
            if coin_w > 0.0 {
                for c in &mut mixture {
                    c.w *= 1.0 - coin_w;
                }
                mixture.push(Component {
                    w: coin_w,
                    rule: PrimitiveRule::Coin(q),
                });
            }
            mixture.retain(|c| c.w > 0.0);
            let (tp, fp) = (cand.tp[g], cand.fp[g]);
            GroupPolicy {
                group: key.clone(),
                mixture,
                operating_point: OperatingPoint {
                    selection_rate: (tp + fp) / d.n,
                    false_positive_rate: (d.neg > 0.0).then(|| fp / d.neg),
                    true_positive_rate: (d.pos > 0.0).then(|| tp / d.pos),
                },
            }
        })
        .collect();

    Ok(ThresholdPolicy {
        constraint,
        objective,
        score_column: "score".into(),
        sensitive_columns: groups.columns().to_vec(),
        groups: policies,
    })
}

fn candidate(constraint: Constraint, data: &[GroupData], x: f64) -> Candidate {
    let n = data.len();
    let mut c = Candidate {
        mixes: Vec::with_capacity(n),
        coins: vec![(0.0, 0.0); n],
        tp: Vec::with_capacity(n),
        fp: Vec::with_capacity(n),
    };
    match constraint {
        Constraint::DemographicParity => {
            for d in data {
                let mix = d.curve.mix_at(x);
                let (sel, tp) = d.curve.point(&mix);
                c.tp.push(tp);
                c.fp.push(sel * d.n - tp);
                c.mixes.push(mix);
            }
        }
        Constraint::FalsePositiveRateParity => {
            for d in data {
                let mix = d.curve.mix_at(x);
                let (fpr, tpr) = d.curve.point(&mix);
                c.tp.push(tpr * d.pos);
                c.fp.push(fpr * d.neg);
                c.mixes.push(mix);
            }
        }
        Constraint::TruePositiveRateParity => {
            for d in data {
                let mix = d.curve.mix_at_height(x);
                let (fpr, tpr) = d.curve.point(&mix);
                c.tp.push(tpr * d.pos);
                c.fp.push(fpr * d.neg);
                c.mixes.push(mix);
            }
        }
        Constraint::EqualizedOdds => {
            let t = data
                .iter()
                .map(|d| d.curve.eval(x))
                .fold(f64::INFINITY, f64::min);
            for (g, d) in data.iter().enumerate() {
                let mix = d.curve.mix_at(x);
                let (_, h) = d.curve.point(&mix);
                if h - x > 0.0 {
                    c.coins[g] = (((h - t) / (h - x)).clamp(0.0, 1.0), x);
                }
                c.tp.push(t * d.pos);
                c.fp.push(x * d.neg);
                c.mixes.push(mix);
            }
        }
    }
    c
}

/// FPR values where two group hulls cross. Together with the vertices these
/// are all the breakpoints of the pointwise minimum of the hulls.
fn crossings(data: &[GroupData]) -> Vec<f64> {
    let mut knots: Vec<f64> = data
        .iter()
        .flat_map(|d| d.curve.xs.iter().copied())
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut out = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ends: Vec<(f64, f64)> = data
            .iter()
            .map(|d| (d.curve.eval(a), d.curve.eval(b)))
            .collect();
        for i in 0..ends.len() {
            for j in i + 1..ends.len() {
                let da = ends[i].0 - ends[j].0;
                let db = ends[i].1 - ends[j].1;
                if da * db < 0.0 {
                    out.push(a + (b - a) * da / (da - db));
                }
            }
        }
    }
    out
}
