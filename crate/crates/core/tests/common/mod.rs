#![allow(dead_code)]

use std::path::{Path, PathBuf};

use fairkit::cli::cli_main;

pub fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub struct Run {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

pub fn run(args: &[&str]) -> Run {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("fairkit").chain(args.iter().copied());
    let code = cli_main(argv, &mut stdout, &mut stderr);
    Run {
        code,
        stdout,
        stderr,
    }
}

pub struct ScratchDir(pub PathBuf);

impl ScratchDir {
    pub fn new(tag: &str) -> Self {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static NEXT: AtomicUsize = AtomicUsize::new(0);
        let n = NEXT.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir().join(format!("fairkit-{tag}-{}-{n}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Self(dir)
    }

    pub fn path(&self, name: &str) -> String {
        self.0.join(name).to_string_lossy().into_owned()
    }
}

impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

/// Runs every golden scenario and returns `(golden file name, bytes)`.
pub fn golden_outputs() -> Result<Vec<(&'static str, Vec<u8>)>, String> {
    let data = fixture("scored.csv");
    let scratch = ScratchDir::new("golden");
    let mut out = Vec::new();
    let expect_ok = |name: &'static str, args: &[&str]| -> Result<Vec<u8>, String> {
        let r = run(args);
        if r.code != 0 {
            return Err(format!(
                "{name}: exit {} {}",
                r.code,
                String::from_utf8_lossy(&r.stderr)
            ));
        }
        Ok(r.stdout)
    };

    let assess = [
        "assess",
        "--data",
        &data,
        "--y-true",
        "y",
        "--y-pred",
        "pred",
        "--sensitive",
        "group",
        "--metrics",
        "accuracy,selection_rate,true_positive_rate,false_positive_rate,count",
    ];
    out.push((
        "assess.json",
        expect_ok(
            "assess.json",
            &[&assess[..], &["--format", "json"]].concat(),
        )?,
    ));
    out.push((
        "assess.csv",
        expect_ok("assess.csv", &[&assess[..], &["--format", "csv"]].concat())?,
    ));

    let compare = [
        "compare",
        "--data",
        &data,
        "--y-true",
        "y",
        "--sensitive",
        "group",
        "--pred",
        "model_a,model_b,model_c",
        "--fairness",
        "equalized_odds_difference",
    ];
    for (name, format) in [
        ("compare.json", "json"),
        ("compare.csv", "csv"),
        ("compare.svg", "svg"),
    ] {
        out.push((
            name,
            expect_ok(name, &[&compare[..], &["--format", format]].concat())?,
        ));
    }

    let policy = scratch.path("policy.json");
    let applied = scratch.path("applied.csv");
    expect_ok(
        "policy.json",
        &[
            "mitigate",
            "threshold",
            "--data",
            &data,
            "--y-true",
            "y",
            "--score",
            "score",
            "--sensitive",
            "group",
            "--constraint",
            "equalized_odds",
            "--objective",
            "balanced_accuracy",
            "--out",
            &policy,
        ],
    )?;
    expect_ok(
        "applied.csv",
        &[
            "apply", "--policy", &policy, "--data", &data, "--seed", "7", "--out", &applied,
        ],
    )?;
    out.push((
        "policy.json",
        std::fs::read(&policy).map_err(|e| e.to_string())?,
    ));
    out.push((
        "applied.csv",
        std::fs::read(&applied).map_err(|e| e.to_string())?,
    ));
    Ok(out)
}

/// Error scenarios with their documented exit codes.
pub fn error_cases() -> Vec<(&'static str, Vec<String>, i32)> {
    let data = fixture("scored.csv");
    let bad = fixture("bad_label.csv");
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        (
            "non-binary label",
            s(&[
                "assess",
                "--data",
                &bad,
                "--y-true",
                "y",
                "--y-pred",
                "pred",
                "--sensitive",
                "group",
                "--metrics",
                "accuracy",
            ]),
            2,
        ),
        (
            "missing input file",
            s(&[
                "assess",
                "--data",
                "/nonexistent/x.csv",
                "--y-true",
                "y",
                "--y-pred",
                "pred",
                "--sensitive",
                "group",
                "--metrics",
                "accuracy",
            ]),
            2,
        ),
        (
            "unknown column",
            s(&[
                "assess",
                "--data",
                &data,
                "--y-true",
                "nope",
                "--y-pred",
                "pred",
                "--sensitive",
                "group",
                "--metrics",
                "accuracy",
            ]),
            2,
        ),
        (
            "unknown metric",
            s(&[
                "assess",
                "--data",
                &data,
                "--y-true",
                "y",
                "--y-pred",
                "pred",
                "--sensitive",
                "group",
                "--metrics",
                "acuracy",
            ]),
            3,
        ),
        ("unknown subcommand", s(&["frobnicate"]), 3),
        ("unknown flag", s(&["assess", "--bogus"]), 3),
        (
            "svg for an assessment",
            s(&[
                "assess",
                "--data",
                &data,
                "--y-true",
                "y",
                "--y-pred",
                "pred",
                "--sensitive",
                "group",
                "--metrics",
                "accuracy",
                "--format",
                "svg",
            ]),
            3,
        ),
        (
            "unknown constraint",
            s(&[
                "mitigate",
                "threshold",
                "--data",
                &data,
                "--y-true",
                "y",
                "--score",
                "score",
                "--sensitive",
                "group",
                "--constraint",
                "fairness",
                "--out",
                "/tmp/unused.json",
            ]),
            3,
        ),
    ]
}

/// Compares fresh outputs with the checked-in goldens. With
/// `FAIRKIT_BLESS=1` the goldens are rewritten instead.
pub fn check_goldens() -> Result<(), String> {
    let first = golden_outputs()?;
    let second = golden_outputs()?;
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        if a != b {
            return Err(format!("{name} differs between runs"));
        }
    }
    let dir = golden_dir();
    let bless = std::env::var_os("FAIRKIT_BLESS").is_some();
    for (name, bytes) in &first {
        let path = dir.join(name);
        if bless {
            std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
            continue;
        }
        let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if &expected != bytes {
            return Err(format!("{name} does not match its golden file"));
        }
    }
    Ok(())
}

pub fn check_error_codes() -> Result<(), String> {
    for (what, args, code) in error_cases() {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let r = run(&argv);
        if r.code != code {
            return Err(format!(
                "{what}: expected exit {code}, got {} ({})",
                r.code,
                String::from_utf8_lossy(&r.stderr)
            ));
        }
        if r.stderr.is_empty() {
            return Err(format!("{what}: nothing written to stderr"));
        }
    }
    Ok(())
}
