//! Generating a reproducible synthetic dataset and writing it as CSV.

use std::collections::BTreeMap;

use fairkit::data::{generate_synthetic, write_csv, SyntheticConfig};
use fairkit::metrics::{disaggregate, BaseMetricId, Metric};

pub fn run_example() -> fairkit::Result<()> {
    let config = SyntheticConfig::from_json(
        r#"{"n_rows": 500, "group_weights": {"x": 0.7, "y": 0.3},
            "base_rates": {"x": 0.5, "y": 0.2}, "score_noise": 0.2, "seed": 1}"#,
    )?;
    let data = generate_synthetic(&config)?;
    let again = generate_synthetic(&config)?;
    assert_eq!(data, again);

    let groups = data.sensitive_groups()?;
    let frame = disaggregate(
        &[
            Metric::Base(BaseMetricId::SelectionRate),
            Metric::Base(BaseMetricId::Accuracy),
        ],
        data.numeric("y_true")?,
        data.numeric("y_pred")?,
        &groups,
        None,
    )?;
    for row in &frame.by_group {
        println!("{}: {:?}", row.group, row.values);
    }

    let mut csv = Vec::new();
    write_csv(&data, &mut csv)?;
    let text = String::from_utf8_lossy(&csv);
    for line in text.lines().take(4) {
        println!("{line}");
    }

    let bad = SyntheticConfig {
        group_weights: BTreeMap::from([("x".into(), 0.7)]),
        ..config
    };
    println!(
        "mismatched groups: {}",
        generate_synthetic(&bad).unwrap_err()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("synthetic data example");
}
