//! Post-processing a score with group-specific randomized thresholds.

use std::collections::BTreeMap;

use fairkit::data::{generate_synthetic, SyntheticConfig};
use fairkit::metrics::{demographic_parity_difference, equalized_odds_difference};
use fairkit::postprocessing::{
    predict_with_policy, roc_points, upper_convex_hull, Constraint, Objective, ThresholdOptimizer,
};

pub fn run_example() -> fairkit::Result<()> {
    let config = SyntheticConfig {
        n_rows: 2000,
        group_weights: BTreeMap::from([("a".into(), 0.5), ("b".into(), 0.3), ("c".into(), 0.2)]),
        base_rates: BTreeMap::from([("a".into(), 0.6), ("b".into(), 0.4), ("c".into(), 0.25)]),
        score_noise: 0.25,
        seed: 3,
    };
    let data = generate_synthetic(&config)?;
    let groups = data.sensitive_groups()?;
    let scores = data.numeric("score")?;
    let y = data.numeric("y_true")?;

    let hull = upper_convex_hull(&roc_points(scores, y)?);
    println!("pooled ROC hull has {} vertices", hull.vertices.len());

    for constraint in [Constraint::DemographicParity, Constraint::EqualizedOdds] {
        let policy = ThresholdOptimizer::new(constraint, Objective::BalancedAccuracy)
            .fit(scores, y, &groups)?;
        println!(
            "\n{constraint}: objective {:.4}",
            policy.objective_value(scores, y, &groups)?
        );
        for r in policy.group_rates(scores, y, &groups)? {
            println!(
                "  {}: selection {:.4}, tpr {:.4}, fpr {:.4}",
                r.group,
                r.selection_rate,
                r.true_positive_rate.unwrap_or(f64::NAN),
                r.false_positive_rate.unwrap_or(f64::NAN)
            );
        }
        let hard: Vec<f64> = predict_with_policy(&policy, scores, &groups, 42)?
            .into_iter()
            .map(f64::from)
            .collect();
        println!(
            "  sampled: dp difference {:.4}, eo difference {:.4}",
            demographic_parity_difference(&hard, &groups, None)?,
            equalized_odds_difference(y, &hard, &groups, None)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("threshold optimizer example");
}
