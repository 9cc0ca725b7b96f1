use serde::{Deserialize, Serialize};

use super::policy::PrimitiveRule;
use crate::error::{Error, Result};

/// An achievable operating point: predicting 1 iff `score > threshold` gives
/// this false- and true-positive rate. Thresholds may be `±inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Confusion counts of the rule `score > threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SweepPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
}

/// Counts for every distinct decision the thresholds can make, from
/// `+inf` (all zeros) down to `-inf` (all ones). Thresholds producing the
/// same counts collapse onto the largest one.
pub(crate) fn sweep(scores: &[f64], y_true: &[f64]) -> Vec<SweepPoint> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![SweepPoint {
        threshold: f64::INFINITY,
        tp: 0,
        fp: 0,
    }];
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        // Rows strictly above `value` are already counted.
        push_distinct(
            &mut points,
            SweepPoint {
                threshold: value,
                tp,
                fp,
            },
        );
        while i < order.len() && scores[order[i]] == value {
            if y_true[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    push_distinct(
        &mut points,
        SweepPoint {
            threshold: f64::NEG_INFINITY,
            tp,
            fp,
        },
    );
    points
}

fn push_distinct(points: &mut Vec<SweepPoint>, p: SweepPoint) {
    let last = points.last().expect("sweep starts non-empty");
    if last.tp != p.tp || last.fp != p.fp {
        points.push(p);
    }
}

/// All ROC points reachable with a single threshold.
///
/// Candidate thresholds are `+inf`, every distinct score and `-inf`, so the
/// list starts at (0, 0) and ends at (1, 1). The group needs at least one
/// positive and one negative example.
pub fn roc_points(scores: &[f64], y_true: &[f64]) -> Result<Vec<RocPoint>> {
    if scores.len() != y_true.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            y_true.len()
        )));
    }
    let pos = y_true.iter().filter(|&&y| y == 1.0).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Fit(
            "group needs both positive and negative examples".into(),
        ));
    }
    Ok(sweep(scores, y_true)
        .into_iter()
        .map(|p| RocPoint {
            fpr: p.fp as f64 / neg as f64,
            tpr: p.tp as f64 / pos as f64,
            threshold: p.threshold,
        })
        .collect())
}

/// Upper concave envelope of a set of ROC points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocHull {
    pub vertices: Vec<RocPoint>,
}

impl RocHull {
    /// TPR on the hull boundary at the given FPR (clamped to [0, 1]).
    pub fn eval(&self, fpr: f64) -> f64 {
        let xs: Vec<f64> = self.vertices.iter().map(|v| v.fpr).collect();
        let ys: Vec<f64> = self.vertices.iter().map(|v| v.tpr).collect();
        interpolate(&xs, &ys, fpr)
    }
}

/// Upper hull with collinear interior points removed. Among points sharing
/// an FPR only the highest survives.
pub fn upper_convex_hull(points: &[RocPoint]) -> RocHull {
    let idx = upper_hull_indices(&points.iter().map(|p| (p.fpr, p.tpr)).collect::<Vec<_>>());
    RocHull {
        vertices: idx.into_iter().map(|i| points[i]).collect(),
    }
}

/// Indices of the upper hull of `points`, left to right. Equal points keep
/// the earliest index.
pub(crate) fn upper_hull_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[b].1.total_cmp(&points[a].1))
    });
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<usize> = Vec::new();
    for i in order {
        if let Some(&last) = hull.last() {
            if points[last].0 == points[i].0 {
                continue;
            }
        }
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if cross(points[o], points[a], points[i]) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Linear interpolation through sorted `xs`; `x` is clamped to the range.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    mix_at(xs, x).iter().map(|&(w, k)| w * ys[k]).sum()
}

/// Convex combination of at most two adjacent vertices whose x equals `x`.
pub(crate) fn mix_at(xs: &[f64], x: f64) -> Vec<(f64, usize)> {
    let x = x.clamp(xs[0], xs[xs.len() - 1]);
    let k = xs.partition_point(|&v| v < x);
    if xs[k] == x {
        return vec![(1.0, k)];
    }
    let right = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    vec![(1.0 - right, k - 1), (right, k)]
}

/// A concave, nondecreasing piecewise-linear curve whose vertices are
/// realized by deterministic rules.
#[derive(Debug, Clone)]
pub(crate) struct Curve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub rules: Vec<PrimitiveRule>,
}

impl Curve {
    /// Upper hull of sweep points mapped through `coords`. The hull is taken
    /// on the integer counts, so collinearity tests are exact.
    pub fn from_sweep(
        points: &[SweepPoint],
        count_coords: impl Fn(&SweepPoint) -> (f64, f64),
        scale: (f64, f64),
    ) -> Self {
        let coords: Vec<(f64, f64)> = points.iter().map(&count_coords).collect();
        let idx = upper_hull_indices(&coords);
        Self {
            xs: idx.iter().map(|&i| coords[i].0 / scale.0).collect(),
            ys: idx.iter().map(|&i| coords[i].1 / scale.1).collect(),
            rules: idx
                .iter()
                .map(|&i| PrimitiveRule::from_threshold(points[i].threshold))
                .collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.xs, &self.ys, x)
    }

    pub fn mix_at(&self, x: f64) -> Vec<(f64, usize)> {
        mix_at(&self.xs, x)
    }

    /// Leftmost point of the curve reaching height `y`.
    pub fn mix_at_height(&self, y: f64) -> Vec<(f64, usize)> {
        let y = y.clamp(self.ys[0], self.ys[self.ys.len() - 1]);
        let k = self.ys.partition_point(|&v| v < y);
        if self.ys[k] == y {
            return vec![(1.0, k)];
        }
        let right = (y - self.ys[k - 1]) / (self.ys[k] - self.ys[k - 1]);
        vec![(1.0 - right, k - 1), (right, k)]
    }

    pub fn point(&self, mix: &[(f64, usize)]) -> (f64, f64) {
        mix.iter().fold((0.0, 0.0), |(x, y), &(w, k)| {
            (x + w * self.xs[k], y + w * self.ys[k])
        })
    }
}
