//! Decorrelating features from a categorical sensitive column.

use fairkit::data::{Column, Dataset, NamedColumn, Role};
use fairkit::preprocessing::fit_correlation_remover;

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn run_example() -> fairkit::Result<()> {
    let group: Vec<String> = ["a", "a", "a", "b", "b", "b", "c", "c"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let income = vec![30.0, 34.0, 31.0, 52.0, 49.0, 55.0, 41.0, 40.0];
    let tenure = vec![1.0, 4.0, 2.0, 6.0, 3.0, 8.0, 5.0, 4.0];
    let data = Dataset::new(vec![
        NamedColumn::new("group", Role::Sensitive, Column::Categorical(group)),
        NamedColumn::new("income", Role::Feature, Column::Numeric(income.clone())),
        NamedColumn::new("tenure", Role::Feature, Column::Numeric(tenure)),
    ])?;

    let is_b: Vec<f64> = (0..8)
        .map(|i| f64::from(u8::from((3..6).contains(&i))))
        .collect();
    println!(
        "corr(income, group=b) before: {:.4}",
        pearson(&income, &is_b)
    );

    for alpha in [1.0, 0.5] {
        let model = fit_correlation_remover(&data, &["group"], alpha)?;
        let out = model.transform(&data)?;
        let cleaned = out.numeric("income")?;
        println!(
            "alpha = {alpha}: income -> {:?}, corr with group=b {:.2e}",
            cleaned
                .iter()
                .map(|v| (v * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            pearson(cleaned, &is_b)
        );
    }

    let model = fit_correlation_remover(&data, &["group"], 1.0)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&model).expect("model serializes")
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("correlation remover example");
}
