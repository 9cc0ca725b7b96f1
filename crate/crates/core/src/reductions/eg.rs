use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::learners::{Classifier, Learner};
use super::moments::{ConstraintFamily, ConstraintSpec, Moments};
use crate::data::Groups;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedModel<M> {
    pub w: f64,
    pub model: M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub final_gap: f64,
    /// `L(Q, lambda)` for the returned pair.
    pub lagrangian: f64,
    pub best_lambda: Vec<f64>,
    /// Moment term labels, aligned with `best_lambda`.
    pub terms: Vec<String>,
    pub converged: bool,
    pub flags: Vec<String>,
}

/// A distribution over base classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedClassifier<M> {
    /// Feature columns the components expect, in order.
    #[serde(default)]
    pub features: Vec<String>,
    pub components: Vec<WeightedModel<M>>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictMode {
    Expectation,
    Sample { seed: u64 },
}

/// Predictions of a randomized classifier.
///
/// `Expectation` gives `sum_i w_i h_i(x)` per row. `Sample` draws one
/// component per row (one uniform from a ChaCha8 stream, in row order) and
/// returns its hard prediction.
pub fn predict_randomized<M: Classifier>(
    q: &RandomizedClassifier<M>,
    x: &DMatrix<f64>,
    mode: PredictMode,
) -> Vec<f64> {
    let per_component: Vec<Vec<f64>> = q.components.iter().map(|c| c.model.predict(x)).collect();
    match mode {
        PredictMode::Expectation => (0..x.nrows())
            .map(|i| {
                q.components
                    .iter()
                    .zip(&per_component)
                    .map(|(c, p)| c.w * p[i])
                    .sum::<f64>()
                    .clamp(0.0, 1.0)
            })
            .collect(),
        PredictMode::Sample { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..x.nrows())
                .map(|i| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = q.components.len() - 1;
                    for (k, c) in q.components.iter().enumerate() {
                        acc += c.w;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    per_component[pick][i]
                })
                .collect()
        }
    }
}

/// Result of one best-response call.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse<M> {
    pub model: M,
    /// Every cost difference was zero, so the constant-0 model was returned.
    pub zero_cost: bool,
}

/// Classifier minimizing the Lagrangian `err(h) + sum_j lambda_j gamma_j(h)`
/// as a weighted classification problem.
///
/// Row `i` costs `d_i = (1 - 2 y_i) / n + sum_j lambda_j c_ij` more when
/// predicted 1 than when predicted 0; the learner sees label `d_i < 0` with
/// weight `|d_i|`.
pub fn best_response<L: Learner>(
    learner: &L,
    x: &DMatrix<f64>,
    y_true: &[f64],
    moments: &Moments,
    lambda: &[f64],
) -> Result<BestResponse<L::Model>> {
    if lambda.len() != moments.len() {
        return Err(Error::Shape(format!(
            "{} multipliers for {} moment terms",
            lambda.len(),
            moments.len()
        )));
    }
    let n = y_true.len() as f64;
    let d: Vec<f64> = moments
        .signed_weights(lambda)
        .iter()
        .zip(y_true)
        .map(|(c, y)| (1.0 - 2.0 * y) / n + c)
        .collect();
    if d.iter().all(|&v| v == 0.0) {
        return Ok(BestResponse {
            model: learner.constant(0),
            zero_cost: true,
        });
    }
    let labels: Vec<f64> = d.iter().map(|&v| f64::from(u8::from(v < 0.0))).collect();
    let weights: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    Ok(BestResponse {
        model: learner.fit(x, &labels, &weights)?,
        zero_cost: false,
    })
}

/// Solver settings. Defaults: demographic parity with eps 0.05, bound 100,
/// eta0 2, nu 1e-6, 50 iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentiatedGradient {
    pub constraint: ConstraintSpec,
    pub bound: f64,
    pub eta0: f64,
    pub nu: f64,
    pub max_iter: usize,
    /// Reject empty equalized-odds cells instead of dropping their terms.
    pub strict_moments: bool,
}

impl Default for ExponentiatedGradient {
    fn default() -> Self {
        Self {
            constraint: ConstraintSpec {
                family: ConstraintFamily::DemographicParity,
                eps: 0.05,
            },
            bound: 100.0,
            eta0: 2.0,
            nu: 1e-6,
            max_iter: 50,
            strict_moments: false,
        }
    }
}

impl ExponentiatedGradient {
    pub fn new(family: ConstraintFamily, eps: f64) -> Self {
        Self {
            constraint: ConstraintSpec { family, eps },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let eps = self.constraint.eps;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!(
                "eps must be finite and nonnegative, got {eps}"
            )));
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(Error::Config(format!(
                "bound must be positive, got {}",
                self.bound
            )));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::Config(format!(
                "eta0 must be positive, got {}",
                self.eta0
            )));
        }
        if self.nu.is_nan() || self.nu < 0.0 {
            return Err(Error::Config(format!(
                "nu must be nonnegative, got {}",
                self.nu
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub fn fit<L: Learner>(
        &self,
        x: &DMatrix<f64>,
        y_true: &[f64],
        groups: &Groups,
        learner: &L,
    ) -> Result<RandomizedClassifier<L::Model>> {
        exponentiated_gradient(x, y_true, groups, learner, self)
    }
}

struct Played<M> {
    model: M,
    preds: Vec<f64>,
    err: f64,
    gamma: Vec<f64>,
}

struct Game<'a, L: Learner> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    learner: &'a L,
    moments: Moments,
    eps: f64,
    bound: f64,
    played: Vec<Played<L::Model>>,
    zero_cost: bool,
}

type Mixture = Vec<(f64, usize)>;

impl<'a, L: Learner> Game<'a, L> {
    /// Index of `model` among the distinct classifiers played so far.
    fn add(&mut self, model: L::Model) -> usize {
        let preds = model.predict(self.x);
        if let Some(k) = self.played.iter().position(|p| p.preds == preds) {
            return k;
        }
        let n = self.y.len() as f64;
        let err = preds.iter().zip(self.y).filter(|(p, y)| p != y).count() as f64 / n;
        let gamma = self.moments.gamma(&preds);
        self.played.push(Played {
            model,
            preds,
            err,
            gamma,
        });
        self.played.len() - 1
    }

    fn respond(&mut self, lambda: &[f64]) -> Result<usize> {
        let br = best_response(self.learner, self.x, self.y, &self.moments, lambda)?;
        self.zero_cost |= br.zero_cost;
        Ok(self.add(br.model))
    }

    fn lagrangian(&self, err: f64, gamma: &[f64], lambda: &[f64]) -> f64 {
        err + gamma
            .iter()
            .zip(lambda)
            .map(|(g, l)| l * (g - self.eps))
            .sum::<f64>()
    }

    /// `max_lambda L(Q, lambda)`, attained at `lambda = 0` or at `bound` on
    /// the most violated term.
    fn upper(&self, err: f64, gamma: &[f64]) -> f64 {
        let worst = gamma.iter().map(|g| g - self.eps).fold(0.0, f64::max);
        err + self.bound * worst
    }

    fn mix_stats(&self, q: &Mixture) -> (f64, Vec<f64>) {
        let mut err = 0.0;
        let mut gamma = vec![0.0; self.moments.len()];
        for &(w, k) in q {
            let p = &self.played[k];
            err += w * p.err;
            gamma
                .iter_mut()
                .zip(&p.gamma)
                .for_each(|(g, v)| *g += w * v);
        }
        (err, gamma)
    }

    /// Gap of the pair `(q, lambda)` and `L(q, lambda)`. The lower bound is
    /// the best of a fresh best response and the components of `q`, so the
    /// gap is never negative.
    fn gap(&mut self, q: &Mixture, lambda: &[f64]) -> Result<(f64, f64)> {
        let (err, gamma) = self.mix_stats(q);
        let upper = self.upper(err, &gamma);
        let br = self.respond(lambda)?;
        let lower = q
            .iter()
            .map(|&(_, k)| k)
            .chain([br])
            .map(|k| self.lagrangian(self.played[k].err, &self.played[k].gamma, lambda))
            .fold(f64::INFINITY, f64::min);
        Ok((
            (upper - lower).max(0.0),
            self.lagrangian(err, &gamma, lambda),
        ))
    }

    /// Exact equilibrium of the game restricted to the classifiers played so
    /// far, from the primal and dual linear programs.
    fn restricted_equilibrium(&self) -> Option<(Mixture, Vec<f64>)> {
        let m = self.played.len();
        let k = self.moments.len();

        let mut primal = Problem::new(OptimizationDirection::Minimize);
        let q: Vec<_> = self
            .played
            .iter()
            .map(|p| primal.add_var(p.err, (0.0, 1.0)))
            .collect();
        let s = primal.add_var(self.bound, (0.0, f64::INFINITY));
        for j in 0..k {
            let mut expr: Vec<_> = (0..m)
                .map(|i| (q[i], -(self.played[i].gamma[j] - self.eps)))
                .collect();
            expr.push((s, 1.0));
            primal.add_constraint(expr, ComparisonOp::Ge, 0.0);
        }
        primal.add_constraint(q.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
        let sol = primal.solve().ok()?.into_solution().ok()?;
        let raw: Vec<f64> = q.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        let mix = clean_mixture(&raw)?;

        let mut dual = Problem::new(OptimizationDirection::Maximize);
        let lam: Vec<_> = (0..k)
            .map(|_| dual.add_var(0.0, (0.0, self.bound)))
            .collect();
        let w = dual.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        for p in &self.played {
            let mut expr: Vec<_> = (0..k).map(|j| (lam[j], -(p.gamma[j] - self.eps))).collect();
            expr.push((w, 1.0));
            dual.add_constraint(expr, ComparisonOp::Le, p.err);
        }
        if k > 0 {
            dual.add_constraint(lam.iter().map(|&v| (v, 1.0)), ComparisonOp::Le, self.bound);
        }
        let sol = dual.solve().ok()?.into_solution().ok()?;
        let mut lambda: Vec<f64> = lam.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        let total: f64 = lambda.iter().sum();
        if total > self.bound {
            lambda.iter_mut().for_each(|l| *l *= self.bound / total);
        }
        Some((mix, lambda))
    }
}

fn clean_mixture(raw: &[f64]) -> Option<Mixture> {
    let kept: Vec<(f64, usize)> = raw
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, w)| *w > 1e-12)
        .map(|(i, w)| (w, i))
        .collect();
    let total: f64 = kept.iter().map(|(w, _)| w).sum();
    (total > 0.0).then(|| kept.into_iter().map(|(w, i)| (w / total, i)).collect())
}

fn softmax_with_slack(theta: &[f64], bound: f64) -> Vec<f64> {
    let top = theta.iter().copied().fold(0.0, f64::max);
    let e: Vec<f64> = theta.iter().map(|t| (t - top).exp()).collect();
    let denom = (-top).exp() + e.iter().sum::<f64>();
    e.iter().map(|v| bound * v / denom).collect()
}

/// Exponentiated-gradient reduction for fair binary classification.
///
/// The multipliers follow `lambda_j = B exp(theta_j) / (1 + sum_k exp(theta_k))`
/// with `theta_j += eta_t (gamma_j(h_t) - eps)` and `eta_t = eta0 / sqrt(t)`.
/// After every iteration two candidate pairs are scored by their duality
/// gap: the uniform average of the iterates with the average multipliers,
/// and the exact equilibrium of the game restricted to the classifiers seen
/// so far. The pair with the smallest gap is returned; fitting stops as soon
/// as that gap is at most `nu`.
pub fn exponentiated_gradient<L: Learner>(
    x: &DMatrix<f64>,
    y_true: &[f64],
    groups: &Groups,
    learner: &L,
    opts: &ExponentiatedGradient,
) -> Result<RandomizedClassifier<L::Model>> {
    opts.validate()?;
    if x.nrows() != y_true.len() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} labels",
            x.nrows(),
            y_true.len()
        )));
    }
    let moments = Moments::compile(opts.constraint.family, y_true, groups, opts.strict_moments)?;
    let k = moments.len();
    let mut flags: Vec<String> = moments.flags().to_vec();
    let terms: Vec<String> = moments.terms().iter().map(ToString::to_string).collect();
    let mut game = Game {
        x,
        y: y_true,
        learner,
        moments,
        eps: opts.constraint.eps,
        bound: opts.bound,
        played: Vec::new(),
        zero_cost: false,
    };

    let mut theta = vec![0.0; k];
    let mut lambda_sum = vec![0.0; k];
    let mut counts: Vec<usize> = Vec::new();
    let mut best: Option<(f64, f64, Mixture, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut lp_failed = false;

    for t in 1..=opts.max_iter {
        iterations = t;
        let lambda = softmax_with_slack(&theta, opts.bound);
        lambda_sum
            .iter_mut()
            .zip(&lambda)
            .for_each(|(s, l)| *s += l);
        let h = game.respond(&lambda)?;
        counts.resize(game.played.len(), 0);
        counts[h] += 1;
        let eta = opts.eta0 / (t as f64).sqrt();
        let step: Vec<f64> = game.played[h]
            .gamma
            .iter()
            .map(|g| eta * (g - opts.constraint.eps))
            .collect();
        theta.iter_mut().zip(step).for_each(|(th, s)| *th += s);

        let mut pairs: Vec<(Mixture, Vec<f64>)> = Vec::with_capacity(2);
        let uniform: Mixture = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (c as f64 / t as f64, i))
            .collect();
        pairs.push((uniform, lambda_sum.iter().map(|s| s / t as f64).collect()));
        match game.restricted_equilibrium() {
            Some(pair) => pairs.push(pair),
            None => lp_failed = true,
        }
        for (q, lam) in pairs {
            let (gap, value) = game.gap(&q, &lam)?;
            if best.as_ref().is_none_or(|b| gap < b.0) {
                best = Some((gap, value, q, lam));
            }
        }
        counts.resize(game.played.len(), 0);
        if best.as_ref().is_some_and(|b| b.0 <= opts.nu) {
            break;
        }
    }

    let (final_gap, lagrangian, q, best_lambda) = best.expect("at least one iteration runs");
    let converged = final_gap <= opts.nu;
    if !converged {
        flags.push("not_converged".into());
    }
    if lp_failed {
        flags.push("restricted_lp_failed".into());
    }
    if game.zero_cost {
        flags.push("zero_cost_best_response".into());
    }
    let components = q
        .iter()
        .map(|&(w, i)| WeightedModel {
            w,
            model: game.played[i].model.clone(),
        })
        .collect();
    Ok(RandomizedClassifier {
        features: Vec::new(),
        components,
        diagnostics: Diagnostics {
            iterations,
            final_gap,
            lagrangian,
            best_lambda,
            terms,
            converged,
            flags,
        },
    })
}

/// Recomputes the duality gap and Lagrangian value of a returned classifier
/// and multiplier vector on the fitting data.
#[allow(clippy::too_many_arguments)]
pub fn duality_gap<L: Learner>(
    x: &DMatrix<f64>,
    y_true: &[f64],
    groups: &Groups,
    learner: &L,
    opts: &ExponentiatedGradient,
    q: &RandomizedClassifier<L::Model>,
    lambda: &[f64],
) -> Result<(f64, f64)> {
    let moments = Moments::compile(opts.constraint.family, y_true, groups, opts.strict_moments)?;
    let mut game = Game {
        x,
        y: y_true,
        learner,
        moments,
        eps: opts.constraint.eps,
        bound: opts.bound,
        played: Vec::new(),
        zero_cost: false,
    };
    let mix: Mixture = q
        .components
        .iter()
        .map(|c| (c.w, game.add(c.model.clone())))
        .collect();
    game.gap(&mix, lambda)
}
