//! Loading a CSV with column roles, validating it, and driving the same
//! workflow through the command-line entry point.

use fairkit::cli::cli_main;
use fairkit::data::{load_table, validate_dataset, Role, RoleMap};

const TABLE: &str = "\
label,pred,score,region
1,1,0.91,north
0,0,0.20,north
1,0,0.45,north
0,1,0.62,south
1,1,0.88,south
0,0,0.05,south
";

pub fn run_example() -> fairkit::Result<()> {
    let roles = RoleMap::from([
        ("label".to_string(), Role::YTrue),
        ("pred".to_string(), Role::YPred),
        ("score".to_string(), Role::Score),
        ("region".to_string(), Role::Sensitive),
    ]);
    let data = load_table(TABLE.as_bytes(), &roles)?;
    let report = validate_dataset(&data);
    println!(
        "valid: {}, warnings: {}",
        report.is_valid(),
        report.warnings.len()
    );
    for w in &report.warnings {
        println!("  {}: {}", w.code, w.message);
    }

    let dir = std::env::temp_dir().join(format!("fairkit-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("table.csv");
    std::fs::write(&path, TABLE)?;
    let path = path.to_string_lossy().into_owned();

    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = [
        "fairkit",
        "assess",
        "--data",
        &path,
        "--y-true",
        "label",
        "--y-pred",
        "pred",
        "--sensitive",
        "region",
        "--metrics",
        "accuracy,selection_rate",
        "--format",
        "csv",
    ];
    let code = cli_main(argv, &mut out, &mut err);
    println!(
        "assess exited with {code}:\n{}",
        String::from_utf8_lossy(&out)
    );

    // A typo in the metric list is a configuration error.
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = [
        "fairkit",
        "assess",
        "--data",
        &path,
        "--y-true",
        "label",
        "--y-pred",
        "pred",
        "--sensitive",
        "region",
        "--metrics",
        "acuracy",
    ];
    let code = cli_main(argv, &mut out, &mut err);
    print!("exit {code}: {}", String::from_utf8_lossy(&err));
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("csv and cli example");
}
