//! Acceptance checks. Run with `cargo test --test acceptance`; prints one
//! line per criterion and fails if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fairkit::data::{
    generate_synthetic, Column, Dataset, Groups, NamedColumn, Role, SyntheticConfig,
};
use fairkit::metrics::{
    demographic_parity_difference, difference, disaggregate, make_derived_metric, ratio,
    AggregationMethod, BaseMetricId, Metric, UndefinedPolicy,
};
use fairkit::postprocessing::{
    predict_with_policy, Constraint, Objective, ThresholdOptimizer, ThresholdPolicy,
};
use fairkit::preprocessing::fit_correlation_remover;
use fairkit::reductions::{
    predict_randomized, BaseModel, BuiltinLearner, Classifier, ConstraintFamily, Diagnostics,
    ExponentiatedGradient, Learner, PredictMode, RandomizedClassifier, WeightedModel,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- criterion 1

fn brute_metric(
    id: BaseMetricId,
    y: &[f64],
    p: &[f64],
    w: Option<&[f64]>,
    rows: &[usize],
) -> Option<f64> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for &i in rows {
        let wi = w.map_or(1.0, |w| w[i]);
        match (y[i] == 1.0, p[i] == 1.0) {
            (true, true) => tp += wi,
            (true, false) => fn_ += wi,
            (false, true) => fp += wi,
            (false, false) => tn += wi,
        }
    }
    let div = |a: f64, b: f64| if b > 0.0 { Some(a / b) } else { None };
    match id {
        BaseMetricId::Accuracy => div(tp + tn, tp + tn + fp + fn_),
        BaseMetricId::SelectionRate => div(tp + fp, tp + tn + fp + fn_),
        BaseMetricId::TruePositiveRate => div(tp, tp + fn_),
        BaseMetricId::FalsePositiveRate => div(fp, fp + tn),
        BaseMetricId::FalseNegativeRate => div(fn_, tp + fn_),
        BaseMetricId::TrueNegativeRate => div(tn, fp + tn),
        BaseMetricId::BalancedAccuracy => Some((div(tp, tp + fn_)? + div(tn, fp + tn)?) / 2.0),
        BaseMetricId::Count => Some(rows.len() as f64),
    }
}

struct Case {
    y: Vec<f64>,
    p: Vec<f64>,
    labels: Vec<String>,
    w: Option<Vec<f64>>,
}

fn random_case(rng: &mut ChaCha8Rng, max_n: usize) -> Case {
    let n = rng.random_range(1..=max_n);
    let k = rng.random_range(1..=4);
    let base: f64 = rng.random();
    let y = (0..n)
        .map(|_| f64::from(u8::from(rng.random::<f64>() < base)))
        .collect();
    let p = (0..n)
        .map(|_| f64::from(u8::from(rng.random::<f64>() < 0.5)))
        .collect();
    let labels = (0..n)
        .map(|_| format!("g{}", rng.random_range(0..k)))
        .collect();
    let w = rng
        .random_bool(0.5)
        .then(|| (0..n).map(|_| rng.random_range(0.1..3.0)).collect());
    Case { y, p, labels, w }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let metrics: Vec<Metric> = BaseMetricId::ALL.iter().map(|&m| Metric::Base(m)).collect();
    let mut compared = 0;
    for _ in 0..200 {
        let c = random_case(&mut rng, 500);
        let groups = Groups::from_labels(&c.labels);
        let frame = disaggregate(&metrics, &c.y, &c.p, &groups, c.w.as_deref()).map_err(err)?;

        let mut oracle: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, l) in c.labels.iter().enumerate() {
            oracle.entry(l.as_str()).or_default().push(i);
        }
        let all: Vec<usize> = (0..c.y.len()).collect();
        ensure(frame.by_group.len() == oracle.len(), || {
            "group count differs".into()
        })?;
        let mut slices = vec![(None, &all)];
        slices.extend(oracle.iter().map(|(k, rows)| (Some(*k), rows)));
        for (key, rows) in slices {
            for id in BaseMetricId::ALL {
                let want = brute_metric(id, &c.y, &c.p, c.w.as_deref(), rows);
                let got = match key {
                    None => frame.overall[id.as_str()],
                    Some(k) => {
                        let row = frame
                            .by_group
                            .iter()
                            .find(|r| r.group.parts() == [k])
                            .ok_or("missing group")?;
                        ensure(row.n == rows.len(), || {
                            format!("group {k}: n {} vs {}", row.n, rows.len())
                        })?;
                        row.values[id.as_str()]
                    }
                };
                let ok = match (want, got) {
                    (None, None) => true,
                    (Some(a), Some(b)) if id == BaseMetricId::Count => a.to_bits() == b.to_bits(),
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                    _ => false,
                };
                ensure(ok, || {
                    format!("{id} on {key:?}: {got:?} vs oracle {want:?}")
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!(
        "200 datasets, {compared} values match the groupby oracle"
    ))
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let methods = [
        AggregationMethod::BetweenGroups,
        AggregationMethod::ToOverall,
    ];
    for case in 0..100 {
        let c = random_case(&mut rng, 120);
        let groups = Groups::from_labels(&c.labels);
        let id = BaseMetricId::ALL[rng.random_range(0..8)];
        let use_ratio = rng.random_bool(0.5) && id != BaseMetricId::Count;
        let method = methods[rng.random_range(0..2)];
        let derived = make_derived_metric(
            id.as_str(),
            if use_ratio { "ratio" } else { "difference" },
            method.as_str(),
        )
        .map_err(err)?;
        let got = derived.evaluate(&c.y, &c.p, &groups, c.w.as_deref());
        let frame =
            disaggregate(&[Metric::Base(id)], &c.y, &c.p, &groups, c.w.as_deref()).map_err(err)?;
        let want = if use_ratio {
            ratio(&frame, id.as_str(), method, UndefinedPolicy::Skip)
        } else {
            difference(&frame, id.as_str(), method, UndefinedPolicy::Skip)
        };
        match (got, want) {
            (Ok(a), Ok(b)) => ensure(a == b, || {
                format!("case {case}: {} gives {a}, composition {b}", derived.name())
            })?,
            (Err(_), Err(_)) => {}
            (a, b) => {
                return Err(format!(
                    "case {case}: {} disagrees: {a:?} vs {b:?}",
                    derived.name()
                ))
            }
        }

        let dp =
            make_derived_metric("selection_rate", "difference", "between_groups").map_err(err)?;
        let a = dp
            .evaluate(&c.y, &c.p, &groups, c.w.as_deref())
            .map_err(err)?;
        let b = demographic_parity_difference(&c.p, &groups, c.w.as_deref()).map_err(err)?;
        ensure((a - b).abs() <= 1e-12, || {
            format!("case {case}: derived dp {a} vs {b}")
        })?;
    }
    Ok("100 fuzz cases agree; derived selection-rate difference equals the dp difference".into())
}

// ---------------------------------------------------------------- criterion 3

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|x| (x - mb).powi(2)).sum();
    let scale_a: f64 = a.iter().map(|x| x * x).sum::<f64>().max(1.0);
    if vb <= 1e-12 || va <= 1e-20 * scale_a {
        return None;
    }
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    Some(cov / (va * vb).sqrt())
}

/// Every sensitive column as numeric columns, one indicator per level.
fn indicator_columns(data: &Dataset, names: &[String]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for name in names {
        match &data.column(name).unwrap().values {
            Column::Numeric(v) => out.push(v.clone()),
            Column::Categorical(v) => {
                let mut levels = v.clone();
                levels.sort();
                levels.dedup();
                for l in levels {
                    out.push(v.iter().map(|x| f64::from(u8::from(*x == l))).collect());
                }
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut rank_deficient = 0;
    for case in 0..50 {
        let n = rng.random_range(5..=300);
        let n_features = rng.random_range(1..=10);
        let n_sensitive = rng.random_range(1..=3);
        let deficient = case % 5 == 0;
        let mut columns = Vec::new();
        let mut names = Vec::new();
        let mut first_numeric: Option<Vec<f64>> = None;
        for s in 0..n_sensitive {
            let name = format!("s{s}");
            let col = if let (true, true, Some(base)) = (deficient, s > 0, first_numeric.as_ref()) {
                // Collinear with the first numeric sensitive column.
                Column::Numeric(base.iter().map(|v| 2.0 * v - 1.0).collect())
            } else if rng.random_bool(0.5) {
                let k = rng.random_range(1..=4);
                Column::Categorical(
                    (0..n)
                        .map(|_| format!("l{}", rng.random_range(0..k)))
                        .collect(),
                )
            } else {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                first_numeric.get_or_insert_with(|| v.clone());
                Column::Numeric(v)
            };
            columns.push(NamedColumn::new(name.clone(), Role::Sensitive, col));
            names.push(name);
        }
        if deficient {
            // A sensitive column that is constant on every row.
            columns.push(NamedColumn::new(
                "s_const",
                Role::Sensitive,
                Column::Numeric(vec![4.0; n]),
            ));
            names.push("s_const".into());
            rank_deficient += 1;
        }
        let sens = indicator_columns(&Dataset::new(columns.clone()).map_err(err)?, &names);
        for f in 0..n_features {
            let v: Vec<f64> = (0..n)
                .map(|i| {
                    let mix: f64 = sens
                        .iter()
                        .enumerate()
                        .map(|(j, s)| s[i] * (j + f + 1) as f64)
                        .sum();
                    rng.random_range(-1.0..1.0) + 0.5 * mix
                })
                .collect();
            columns.push(NamedColumn::new(
                format!("x{f}"),
                Role::Feature,
                Column::Numeric(v),
            ));
        }
        let data = Dataset::new(columns).map_err(err)?;

        let out = fit_correlation_remover(&data, &names, 1.0)
            .map_err(err)?
            .transform(&data)
            .map_err(err)?;
        for f in 0..n_features {
            let z = out.numeric(&format!("x{f}")).map_err(err)?;
            for s in &sens {
                if let Some(r) = pearson(z, s) {
                    worst = worst.max(r.abs());
                }
            }
        }
        let same = fit_correlation_remover(&data, &names, 0.0)
            .map_err(err)?
            .transform(&data)
            .map_err(err)?;
        for f in 0..n_features {
            let name = format!("x{f}");
            let (a, b) = (
                data.numeric(&name).map_err(err)?,
                same.numeric(&name).map_err(err)?,
            );
            let d = a
                .iter()
                .zip(b)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            ensure(d <= 1e-12, || {
                format!("case {case}: alpha 0 moved {name} by {d:e}")
            })?;
        }
    }
    ensure(worst <= 1e-8, || format!("max |corr| {worst:e}"))?;
    Ok(format!("50 matrices ({rank_deficient} rank-deficient), max |corr| {worst:.1e}, alpha 0 is the identity"))
}

// ---------------------------------------------------------------- criterion 4

fn synthetic(n: usize, groups: &[(&str, f64, f64)], noise: f64, seed: u64) -> Dataset {
    let config = SyntheticConfig {
        n_rows: n,
        group_weights: groups.iter().map(|g| (g.0.to_string(), g.1)).collect(),
        base_rates: groups.iter().map(|g| (g.0.to_string(), g.2)).collect(),
        score_noise: noise,
        seed,
    };
    generate_synthetic(&config).unwrap()
}

fn parity_gap(constraint: Constraint, rates: &[fairkit::postprocessing::GroupRates]) -> f64 {
    let spread = |v: Vec<f64>| {
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let sr = spread(rates.iter().map(|r| r.selection_rate).collect());
    let tpr = spread(rates.iter().filter_map(|r| r.true_positive_rate).collect());
    let fpr = spread(rates.iter().filter_map(|r| r.false_positive_rate).collect());
    match constraint {
        Constraint::DemographicParity => sr,
        Constraint::EqualizedOdds => tpr.max(fpr),
        Constraint::TruePositiveRateParity => tpr,
        Constraint::FalsePositiveRateParity => fpr,
    }
}

fn rates_of(p: &[f64], y: &[f64], groups: &Groups) -> Vec<fairkit::postprocessing::GroupRates> {
    (0..groups.n_groups())
        .map(|g| {
            let rows = groups.members(g);
            let mean = |f: &dyn Fn(usize) -> bool| {
                let r: Vec<usize> = rows.iter().copied().filter(|&i| f(i)).collect();
                (!r.is_empty()).then(|| r.iter().map(|&i| p[i]).sum::<f64>() / r.len() as f64)
            };
            fairkit::postprocessing::GroupRates {
                group: groups.keys()[g].clone(),
                selection_rate: mean(&|_| true).unwrap(),
                true_positive_rate: mean(&|i| y[i] == 1.0),
                false_positive_rate: mean(&|i| y[i] == 0.0),
            }
        })
        .collect()
}

fn objective_of(objective: Objective, p: &[f64], y: &[f64]) -> f64 {
    let pos = y.iter().sum::<f64>();
    let neg = y.len() as f64 - pos;
    let tp: f64 = p.iter().zip(y).map(|(p, y)| p * y).sum();
    let fp: f64 = p.iter().zip(y).map(|(p, y)| p * (1.0 - y)).sum();
    objective.value(tp, fp, pos, neg)
}

fn criterion_4() -> Outcome {
    let datasets = [
        synthetic(2000, &[("a", 0.6, 0.6), ("b", 0.4, 0.3)], 0.25, 4),
        synthetic(
            2000,
            &[("a", 0.5, 0.7), ("b", 0.3, 0.4), ("c", 0.2, 0.2)],
            0.3,
            5,
        ),
    ];
    let constraints = [
        Constraint::DemographicParity,
        Constraint::EqualizedOdds,
        Constraint::TruePositiveRateParity,
        Constraint::FalsePositiveRateParity,
    ];
    let mut worst_gap: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut beaten_unconstrained = 0;
    let mut total = 0;
    for data in &datasets {
        let groups = data.sensitive_groups().map_err(err)?;
        let scores = data.numeric("score").map_err(err)?;
        let y = data.numeric("y_true").map_err(err)?;
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        thresholds.insert(0, f64::NEG_INFINITY);
        for constraint in constraints {
            for objective in [Objective::Accuracy, Objective::BalancedAccuracy] {
                let start = Instant::now();
                let policy = ThresholdOptimizer::new(constraint, objective)
                    .fit(scores, y, &groups)
                    .map_err(err)?;
                slowest = slowest.max(start.elapsed());
                let gap = parity_gap(
                    constraint,
                    &policy.group_rates(scores, y, &groups).map_err(err)?,
                );
                worst_gap = worst_gap.max(gap);
                ensure(gap <= 1e-6, || {
                    format!("{constraint}/{objective}: parity gap {gap:e}")
                })?;

                let fitted = policy.objective_value(scores, y, &groups).map_err(err)?;
                let (mut best_fair, mut best_any) = (f64::MIN, f64::MIN);
                for &t in &thresholds {
                    let p: Vec<f64> = scores.iter().map(|&s| f64::from(u8::from(s > t))).collect();
                    let value = objective_of(objective, &p, y);
                    best_any = best_any.max(value);
                    if parity_gap(constraint, &rates_of(&p, y, &groups)) <= 1e-6 {
                        best_fair = best_fair.max(value);
                    }
                }
                ensure(fitted >= best_fair - 1e-12, || {
                    format!("{constraint}/{objective}: fitted {fitted} below best parity-satisfying threshold {best_fair}")
                })?;
                total += 1;
                if fitted >= best_any - 1e-12 {
                    beaten_unconstrained += 1;
                }
            }
        }
    }
    ensure(slowest < Duration::from_secs(10), || {
        format!("slowest fit took {slowest:?}")
    })?;
    Ok(format!(
        "{total} fits, max parity gap {worst_gap:.1e}, objective >= every parity-satisfying common threshold; \
         {beaten_unconstrained}/{total} also match or beat the unconstrained best threshold; slowest fit {:.2}s",
        slowest.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- criterion 5

fn roc_brute(scores: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let pos = y.iter().sum::<f64>();
    let neg = y.len() as f64 - pos;
    let mut ts: Vec<f64> = scores.to_vec();
    ts.push(f64::INFINITY);
    ts.push(f64::NEG_INFINITY);
    ts.iter()
        .map(|&t| {
            let tp = scores
                .iter()
                .zip(y)
                .filter(|(s, y)| **s > t && **y == 1.0)
                .count() as f64;
            let fp = scores
                .iter()
                .zip(y)
                .filter(|(s, y)| **s > t && **y == 0.0)
                .count() as f64;
            (fp / neg, tp / pos)
        })
        .collect()
}

/// Highest TPR reachable at FPR `x` by mixing two single-threshold rules.
fn best_tpr(points: &[(f64, f64)], x: f64) -> f64 {
    let mut best = f64::MIN;
    for &(x1, y1) in points {
        for &(x2, y2) in points {
            if x1 <= x && x <= x2 {
                let y = if x2 == x1 {
                    y1.max(y2)
                } else {
                    y1 + (y2 - y1) * (x - x1) / (x2 - x1)
                };
                best = best.max(y);
            }
        }
    }
    best
}

fn exhaustive_eq_odds(groups: &[(Vec<f64>, Vec<f64>)], objective: Objective) -> f64 {
    let pts: Vec<Vec<(f64, f64)>> = groups.iter().map(|(s, y)| roc_brute(s, y)).collect();
    let pos: f64 = groups.iter().map(|g| g.1.iter().sum::<f64>()).sum();
    let n: f64 = groups.iter().map(|g| g.1.len() as f64).sum();
    let neg = n - pos;
    let value = |x: f64| {
        let y = pts.iter().map(|p| best_tpr(p, x)).fold(f64::MAX, f64::min);
        objective.value(pos * y, neg * x, pos, neg)
    };
    let (mut best_x, mut best) = (0.0, f64::MIN);
    for k in 0..=1000 {
        let x = k as f64 / 1000.0;
        let v = value(x);
        if v > best {
            (best_x, best) = (x, v);
        }
    }
    for k in -1000..=1000 {
        let x = best_x + k as f64 * 1e-6;
        if (0.0..=1.0).contains(&x) {
            best = best.max(value(x));
        }
    }
    best
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 400 {
        let mut parts = Vec::new();
        for _ in 0..2 {
            let n = rng.random_range(2..=6);
            let s: Vec<f64> = (0..n)
                .map(|_| rng.random_range(0..6) as f64 / 5.0)
                .collect();
            let y: Vec<f64> = (0..n)
                .map(|_| f64::from(u8::from(rng.random_bool(0.5))))
                .collect();
            parts.push((s, y));
        }
        if parts
            .iter()
            .any(|(_, y)| !y.contains(&0.0) || !y.contains(&1.0))
        {
            continue;
        }
        let scores: Vec<f64> = parts.iter().flat_map(|p| p.0.clone()).collect();
        let y: Vec<f64> = parts.iter().flat_map(|p| p.1.clone()).collect();
        let labels: Vec<&str> = parts
            .iter()
            .zip(["a", "b"])
            .flat_map(|(p, l)| vec![l; p.0.len()])
            .collect();
        let groups = Groups::from_labels(&labels);
        for objective in [Objective::Accuracy, Objective::BalancedAccuracy] {
            let policy = ThresholdOptimizer::new(Constraint::EqualizedOdds, objective)
                .fit(&scores, &y, &groups)
                .map_err(err)?;
            let fitted = policy.objective_value(&scores, &y, &groups).map_err(err)?;
            let oracle = exhaustive_eq_odds(&parts, objective);
            let d = (fitted - oracle).abs();
            worst = worst.max(d);
            ensure(d <= 1e-3, || {
                format!("fitted {fitted} vs exhaustive {oracle} on {parts:?}")
            })?;
        }
        checked += 1;
    }
    Ok(format!("{checked} two-group datasets with 2..=6 rows per group, max |fitted - exhaustive| {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let data = synthetic(200, &[("a", 0.5, 0.8), ("b", 0.5, 0.2)], 0.2, 6);
    let groups = data.sensitive_groups().map_err(err)?;
    let y = data.numeric("y_true").map_err(err)?;
    let x = DMatrix::from_column_slice(200, 1, data.numeric("score").map_err(err)?);
    let learner = BuiltinLearner::logistic();
    let plain = learner.fit(&x, y, &[1.0; 200]).map_err(err)?.predict(&x);
    let unconstrained = demographic_parity_difference(&plain, &groups, None).map_err(err)?;
    ensure(unconstrained >= 0.3, || {
        format!("unconstrained dp difference only {unconstrained}")
    })?;

    let opts = ExponentiatedGradient::new(ConstraintFamily::DemographicParity, 0.05);
    let q = opts.fit(&x, y, &groups, &learner).map_err(err)?;
    let d = &q.diagnostics;
    let expected = predict_randomized(&q, &x, PredictMode::Expectation);
    let frame = disaggregate(
        &[Metric::Base(BaseMetricId::SelectionRate)],
        y,
        &expected,
        &groups,
        None,
    )
    .map_err(err)?;
    let to_overall = difference(
        &frame,
        "selection_rate",
        AggregationMethod::ToOverall,
        UndefinedPolicy::Raise,
    )
    .map_err(err)?;
    let between = demographic_parity_difference(&expected, &groups, None).map_err(err)?;
    let elapsed = start.elapsed();
    let bound = 0.05 + d.final_gap + 1e-6;
    ensure(d.iterations <= 50, || {
        format!("{} iterations", d.iterations)
    })?;
    ensure(d.final_gap <= 0.01, || format!("final gap {}", d.final_gap))?;
    ensure(to_overall <= bound, || {
        format!(
            "selection-rate difference to overall {to_overall} with gap {}",
            d.final_gap
        )
    })?;
    ensure(between <= 2.0 * bound, || {
        format!("between-group dp difference {between}")
    })?;
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "unconstrained dp {unconstrained:.3}; constrained rate gap to overall {to_overall:.4} \
         (between groups {between:.4}) after {} iterations, gap {:.1e}, {:.2}s",
        d.iterations,
        d.final_gap,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- criterion 7

/// A classifier that reads its prediction for row `i` from bit `i` of a
/// mask; the feature matrix holds row indices.
#[derive(Debug, Clone, PartialEq)]
struct Labeling(u32);

impl Classifier for Labeling {
    fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| f64::from((self.0 >> (x[(i, 0)] as u32)) & 1))
            .collect()
    }
}

struct Enumerate(usize);

impl Learner for Enumerate {
    type Model = Labeling;

    fn fit(&self, x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> fairkit::Result<Labeling> {
        let mut best = (f64::INFINITY, Labeling(0));
        for mask in 0..(1u32 << self.0) {
            let h = Labeling(mask);
            let cost: f64 = h
                .predict(x)
                .iter()
                .zip(y)
                .zip(w)
                .map(|((p, y), w)| w * (p - y).abs())
                .sum();
            if cost < best.0 {
                best = (cost, h);
            }
        }
        Ok(best.1)
    }

    fn constant(&self, label: u8) -> Labeling {
        Labeling(if label == 1 { (1 << self.0) - 1 } else { 0 })
    }
}

/// Moment violations of a 0/1 prediction vector, one entry per signed term.
fn oracle_gamma(family: ConstraintFamily, y: &[f64], g: &[&str], p: &[f64]) -> Vec<f64> {
    let mean = |f: &dyn Fn(usize) -> bool| {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| f(i)).collect();
        (!rows.is_empty()).then(|| rows.iter().map(|&i| p[i]).sum::<f64>() / rows.len() as f64)
    };
    let mut names: Vec<&str> = g.to_vec();
    names.sort();
    names.dedup();
    let mut out = Vec::new();
    for name in names {
        let conditions: Vec<Option<f64>> = match family {
            ConstraintFamily::DemographicParity => vec![None],
            ConstraintFamily::EqualizedOdds => vec![Some(0.0), Some(1.0)],
        };
        for label in conditions {
            let in_label = |i: usize| label.is_none_or(|l| y[i] == l);
            let Some(cell) = mean(&|i| g[i] == name && in_label(i)) else {
                continue;
            };
            let base = mean(&in_label).unwrap();
            out.push(cell - base);
            out.push(base - cell);
        }
    }
    out
}

/// Value of the zero-sum game between all labelings and the multiplier
/// vertices `{0} ∪ {bound * e_j}`.
fn saddle_value(family: ConstraintFamily, y: &[f64], g: &[&str], eps: f64, bound: f64) -> f64 {
    let n = y.len();
    let mut rows = Vec::new();
    for mask in 0..(1u32 << n) {
        let p: Vec<f64> = (0..n).map(|i| f64::from((mask >> i) & 1)).collect();
        let error = p.iter().zip(y).map(|(p, y)| (p - y).abs()).sum::<f64>() / n as f64;
        let mut payoff = vec![error];
        payoff.extend(
            oracle_gamma(family, y, g, &p)
                .iter()
                .map(|gj| error + bound * (gj - eps)),
        );
        rows.push(payoff);
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let q: Vec<_> = rows.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for v in 0..rows[0].len() {
        let mut expr: Vec<_> = rows.iter().zip(&q).map(|(r, &qh)| (qh, -r[v])).collect();
        expr.push((t, 1.0));
        lp.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    lp.add_constraint(q.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    lp.solve()
        .expect("game LP solves")
        .into_solution()
        .expect("game LP is feasible")
        .objective()
}

fn criterion_7() -> Outcome {
    let instances: [(&[f64], &[&str]); 4] = [
        (
            &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            &["a", "a", "a", "b", "b", "b"],
        ),
        (
            &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            &["a", "a", "a", "b", "b", "b"],
        ),
        (
            &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0],
            &["a", "a", "b", "a", "b", "b"],
        ),
        (
            &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0],
            &["a", "b", "b", "a", "a", "b"],
        ),
    ];
    let x = DMatrix::from_fn(6, 1, |i, _| i as f64);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (y, g) in instances {
        let groups = Groups::from_labels(g);
        for family in [
            ConstraintFamily::DemographicParity,
            ConstraintFamily::EqualizedOdds,
        ] {
            for eps in [0.0, 0.05, 0.2] {
                let opts = ExponentiatedGradient {
                    nu: 1e-6,
                    ..ExponentiatedGradient::new(family, eps)
                };
                let q = opts.fit(&x, y, &groups, &Enumerate(6)).map_err(err)?;
                let oracle = saddle_value(family, y, g, eps, opts.bound);
                let d = (q.diagnostics.lagrangian - oracle).abs();
                worst = worst.max(d);
                ensure(d <= 1e-6, || {
                    format!(
                        "{family} eps {eps} on {y:?}: lagrangian {} vs saddle {oracle}",
                        q.diagnostics.lagrangian
                    )
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!(
        "{runs} runs over 4 six-row datasets, max |L - saddle value| {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 8

/// `|empirical - expected| <= 3 sigma` for independent Bernoulli draws.
fn within_3_sigma(draws: &[u8], probs: &[f64], rows: &[usize]) -> Result<f64, String> {
    let n = rows.len() as f64;
    let observed = rows.iter().map(|&i| f64::from(draws[i])).sum::<f64>() / n;
    let expected = rows.iter().map(|&i| probs[i]).sum::<f64>() / n;
    let sigma = rows
        .iter()
        .map(|&i| probs[i] * (1.0 - probs[i]))
        .sum::<f64>()
        .sqrt()
        / n;
    let z = if sigma == 0.0 {
        if observed == expected {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (observed - expected).abs() / sigma
    };
    ensure(z <= 3.0, || {
        format!("observed {observed} vs expected {expected} ({z:.2} sigma)")
    })?;
    Ok(z)
}

fn slices(y: &[f64], groups: &Groups) -> Vec<Vec<usize>> {
    let mut out = vec![(0..y.len()).collect::<Vec<_>>()];
    for g in 0..groups.n_groups() {
        let m = groups.members(g);
        out.push(m.to_vec());
        out.push(m.iter().copied().filter(|&i| y[i] == 1.0).collect());
        out.push(m.iter().copied().filter(|&i| y[i] == 0.0).collect());
    }
    out.retain(|s| !s.is_empty());
    out
}

fn criterion_8() -> Outcome {
    let n = 100_000;
    let train = synthetic(3000, &[("a", 0.5, 0.6), ("b", 0.5, 0.3)], 0.3, 8);
    let test = synthetic(n, &[("a", 0.5, 0.6), ("b", 0.5, 0.3)], 0.3, 80);
    let mut max_z: f64 = 0.0;
    let mut checks = 0;

    for constraint in [Constraint::DemographicParity, Constraint::EqualizedOdds] {
        let groups = train.sensitive_groups().map_err(err)?;
        let policy: ThresholdPolicy = ThresholdOptimizer::new(constraint, Objective::Accuracy)
            .fit(
                train.numeric("score").map_err(err)?,
                train.numeric("y_true").map_err(err)?,
                &groups,
            )
            .map_err(err)?;
        let (scores, y) = (
            test.numeric("score").map_err(err)?,
            test.numeric("y_true").map_err(err)?,
        );
        let groups = test.sensitive_groups().map_err(err)?;
        let probs = policy.expected_predictions(scores, &groups).map_err(err)?;
        let draws = predict_with_policy(&policy, scores, &groups, 99).map_err(err)?;
        ensure(
            draws == predict_with_policy(&policy, scores, &groups, 99).map_err(err)?,
            || "policy rerun differs".into(),
        )?;
        ensure(
            draws != predict_with_policy(&policy, scores, &groups, 100).map_err(err)?,
            || "seed ignored".into(),
        )?;
        for rows in slices(y, &groups) {
            max_z = max_z.max(
                within_3_sigma(&draws, &probs, &rows).map_err(|e| format!("{constraint}: {e}"))?,
            );
            checks += 1;
        }
    }

    let x = DMatrix::from_column_slice(n, 1, test.numeric("score").map_err(err)?);
    let q = RandomizedClassifier {
        features: vec!["score".into()],
        components: vec![
            WeightedModel {
                w: 0.2,
                model: BaseModel::Constant { label: 1 },
            },
            WeightedModel {
                w: 0.5,
                model: BaseModel::DecisionStump {
                    feature: 0,
                    threshold: 0.5,
                    polarity: 1,
                },
            },
            WeightedModel {
                w: 0.3,
                model: BaseModel::DecisionStump {
                    feature: 0,
                    threshold: 0.3,
                    polarity: -1,
                },
            },
        ],
        diagnostics: Diagnostics {
            iterations: 0,
            final_gap: 0.0,
            lagrangian: 0.0,
            best_lambda: Vec::new(),
            terms: Vec::new(),
            converged: true,
            flags: Vec::new(),
        },
    };
    let probs = predict_randomized(&q, &x, PredictMode::Expectation);
    let sample = |seed| -> Vec<u8> {
        predict_randomized(&q, &x, PredictMode::Sample { seed })
            .into_iter()
            .map(|v| v as u8)
            .collect()
    };
    let draws = sample(5);
    ensure(draws == sample(5), || {
        "randomized classifier rerun differs".into()
    })?;
    ensure(draws != sample(6), || {
        "randomized classifier ignores the seed".into()
    })?;
    let groups = test.sensitive_groups().map_err(err)?;
    for rows in slices(test.numeric("y_true").map_err(err)?, &groups) {
        max_z = max_z.max(within_3_sigma(&draws, &probs, &rows)?);
        checks += 1;
    }
    Ok(format!(
        "{checks} slices at n = 100000, max deviation {max_z:.2} sigma, reruns byte-identical"
    ))
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    common::check_goldens()?;
    common::check_error_codes()?;
    Ok(format!(
        "{} golden files stable and matching, {} error paths exit with documented codes",
        common::golden_outputs()?.len(),
        common::error_cases().len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("disaggregation matches a brute-force groupby", criterion_1),
        (
            "derived metrics equal disaggregate + aggregation",
            criterion_2,
        ),
        ("correlation remover decorrelates at alpha 1", criterion_3),
        ("threshold optimizer parity and objective", criterion_4),
        ("threshold optimizer small-instance optimality", criterion_5),
        (
            "exponentiated gradient constraint satisfaction",
            criterion_6,
        ),
        ("exponentiated gradient saddle value", criterion_7),
        ("randomized predictions match expectations", criterion_8),
        ("CLI golden files and exit codes", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {e} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
