//! Training a fair randomized classifier with the reductions approach.

use std::collections::BTreeMap;

use fairkit::data::{generate_synthetic, SyntheticConfig};
use fairkit::metrics::demographic_parity_difference;
use fairkit::reductions::{
    feature_matrix, predict_randomized, BuiltinLearner, Classifier, ConstraintFamily,
    ExponentiatedGradient, Learner, PredictMode,
};

pub fn run_example() -> fairkit::Result<()> {
    let config = SyntheticConfig {
        n_rows: 300,
        group_weights: BTreeMap::from([("a".into(), 0.5), ("b".into(), 0.5)]),
        base_rates: BTreeMap::from([("a".into(), 0.8), ("b".into(), 0.25)]),
        score_noise: 0.15,
        seed: 11,
    };
    let data = generate_synthetic(&config)?;
    let groups = data.sensitive_groups()?;
    let y = data.numeric("y_true")?;
    let x = feature_matrix(&data, &["score"])?;
    let learner = BuiltinLearner::logistic();

    let plain = learner.fit(&x, y, &vec![1.0; y.len()])?.predict(&x);
    println!(
        "unconstrained dp difference: {:.4}",
        demographic_parity_difference(&plain, &groups, None)?
    );

    for eps in [0.2, 0.05] {
        let q = ExponentiatedGradient::new(ConstraintFamily::DemographicParity, eps)
            .fit(&x, y, &groups, &learner)?;
        let expected = predict_randomized(&q, &x, PredictMode::Expectation);
        let err = expected
            .iter()
            .zip(y)
            .map(|(p, t)| (p - t).abs())
            .sum::<f64>()
            / y.len() as f64;
        println!(
            "eps = {eps}: {} components, error {:.4}, dp difference {:.4}, gap {:.2e} after {} iterations",
            q.components.len(),
            err,
            demographic_parity_difference(&expected, &groups, None)?,
            q.diagnostics.final_gap,
            q.diagnostics.iterations
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("exponentiated gradient example");
}
