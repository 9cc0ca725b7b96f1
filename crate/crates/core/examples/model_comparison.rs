//! Placing several models on a performance / disparity plane and rendering
//! the comparison as JSON, CSV and SVG.

use fairkit::data::Groups;
use fairkit::metrics::BaseMetricId;
use fairkit::report::{compare_models, render_report, Format, Metadata, Report};

pub fn run_example() -> fairkit::Result<()> {
    let y = vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let groups = Groups::from_labels(&["a", "a", "a", "a", "a", "b", "b", "b", "b", "b"]);
    let models = vec![
        ("oracle".to_string(), y.clone()),
        ("all_zero".to_string(), vec![0.0; 10]),
        (
            "noisy".to_string(),
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0],
        ),
        ("hedged".to_string(), vec![0.5; 10]),
    ];
    let table = compare_models(
        &models,
        &y,
        &groups,
        BaseMetricId::Accuracy,
        "demographic_parity_difference".parse()?,
    )?;
    let report = Report::comparison(table, Metadata::for_input(b"inline example"));
    print!(
        "{}",
        String::from_utf8_lossy(&render_report(&report, Format::Csv)?)
    );
    let svg = render_report(&report, Format::Svg)?;
    println!(
        "svg: {} bytes, {} points",
        svg.len(),
        String::from_utf8_lossy(&svg).matches("<circle").count()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("model comparison example");
}
