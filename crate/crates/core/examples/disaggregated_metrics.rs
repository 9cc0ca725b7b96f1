//! Per-group evaluation of a fixed set of predictions, plus the scalar
//! fairness metrics built on top of it.

use fairkit::data::Groups;
use fairkit::metrics::{
    demographic_parity_difference, difference, disaggregate, equalized_odds_difference,
    make_derived_metric, ratio, AggregationMethod, BaseMetricId, Metric, UndefinedPolicy,
};

pub fn run_example() -> fairkit::Result<()> {
    let y_true = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
    let y_pred = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let sex = ["f", "f", "f", "f", "f", "m", "m", "m", "m", "m"];
    let groups = Groups::from_labels(&sex);

    let metrics = [
        Metric::Base(BaseMetricId::Accuracy),
        Metric::Base(BaseMetricId::SelectionRate),
        Metric::Base(BaseMetricId::TruePositiveRate),
        // Any function of (y_true, y_pred, weights) can be disaggregated.
        Metric::custom("positives", |y: &[f64], _: &[f64], _: Option<&[f64]>| {
            Some(y.iter().sum())
        }),
    ];
    let frame = disaggregate(&metrics, &y_true, &y_pred, &groups, None)?;
    for row in &frame.by_group {
        println!("{} (n = {}): {:?}", row.group, row.n, row.values);
    }
    println!("overall: {:?}", frame.overall);

    let acc_gap = difference(
        &frame,
        "accuracy",
        AggregationMethod::BetweenGroups,
        UndefinedPolicy::Skip,
    )?;
    let sel_ratio = ratio(
        &frame,
        "selection_rate",
        AggregationMethod::ToOverall,
        UndefinedPolicy::Skip,
    )?;
    println!("accuracy difference: {acc_gap}");
    println!("selection rate ratio to overall: {sel_ratio}");

    let dp = demographic_parity_difference(&y_pred, &groups, None)?;
    let eo = equalized_odds_difference(&y_true, &y_pred, &groups, None)?;
    println!("demographic parity difference: {dp}");
    println!("equalized odds difference: {eo}");

    let fnr_gap = make_derived_metric("false_negative_rate", "difference", "between_groups")?;
    println!(
        "{}: {}",
        fnr_gap.name(),
        fnr_gap.evaluate(&y_true, &y_pred, &groups, None)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("disaggregated metrics example");
}
