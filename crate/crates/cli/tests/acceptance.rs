//! End-to-end runs of the `gyrostat` binary: every shipped reference
//! config certifies, reports are reproducible byte for byte, CSV output
//! parses, and the exit codes separate gate failures from malformed
//! input and inconsistent models.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gyrostat")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary failed to spawn")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Splits one CSV record, honoring quoted fields. Enough for our own
/// output; not a general parser.
fn split_record(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                chars.next();
                field.push('"');
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut field)),
            _ => field.push(c),
        }
    }
    fields.push(field);
    fields
}

#[test]
fn every_shipped_config_certifies() {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            names.push(path);
        }
    }
    names.sort();
    assert!(names.len() >= 15, "expected the full reference set, found {}", names.len());

    let mut failures = Vec::new();
    for path in &names {
        let out_dir = tempfile::tempdir().unwrap();
        let out = run(&[
            "certify-all",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out_dir.path().to_str().unwrap(),
            "--quiet",
        ]);
        if exit_code(&out) != 0 {
            failures.push(format!(
                "{}: exit {} ({})",
                path.file_name().unwrap().to_string_lossy(),
                exit_code(&out),
                stderr_text(&out).trim()
            ));
        }
    }
    assert!(failures.is_empty(), "configs failed:\n{}", failures.join("\n"));
}

#[test]
fn criterion_10_certify_all_reports_are_byte_identical() {
    for name in ["bitop.json", "classical3_euler.json"] {
        let config = configs_dir().join(name);
        let mut reports = Vec::new();
        for _ in 0..2 {
            let out_dir = tempfile::tempdir().unwrap();
            let out = run(&[
                "certify-all",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out_dir.path().to_str().unwrap(),
                "--seed",
                "911",
                "--quiet",
            ]);
            assert_eq!(exit_code(&out), 0, "{name}: {}", stderr_text(&out));
            reports.push(std::fs::read(out_dir.path().join("report.json")).unwrap());
        }
        assert_eq!(reports[0], reports[1], "{name}: reports differ between runs");
    }
}

#[test]
fn simulate_output_parses_and_spans_the_window() {
    let out_dir = tempfile::tempdir().unwrap();
    let config = configs_dir().join("classical3_lagrange.json");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));

    let trajectory = std::fs::read_to_string(out_dir.path().join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = trajectory.lines().collect();
    // dt=1e-3 over T=10 plus the initial sample and the header.
    assert_eq!(lines.len(), 10002);
    let header = split_record(lines[0]);
    assert_eq!(header[0], "t");
    for (i, line) in lines.iter().enumerate().skip(1) {
        let fields = split_record(line);
        assert_eq!(fields.len(), header.len(), "row {i} is ragged");
        for f in &fields {
            let v: f64 = f.parse().expect("numeric field");
            assert!(v.is_finite());
        }
    }
    let first = split_record(lines[1]);
    let last = split_record(lines[lines.len() - 1]);
    assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(last[0].parse::<f64>().unwrap(), 10.0);

    let drift = std::fs::read_to_string(out_dir.path().join("drift.csv")).unwrap();
    let drift_lines: Vec<&str> = drift.lines().collect();
    assert_eq!(drift_lines.len(), lines.len());
    let drift_header = split_record(drift_lines[0]);
    let labels: BTreeSet<&String> = drift_header.iter().collect();
    assert_eq!(labels.len(), drift_header.len(), "duplicate drift columns");
    for line in drift_lines.iter().skip(1) {
        assert_eq!(split_record(line).len(), drift_header.len());
    }
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(configs_dir().join("bitop.json")).unwrap();
    let base: serde_json::Value = serde_json::from_str(&base).unwrap();

    let mut unknown_key = base.clone();
    unknown_key["not_a_field"] = serde_json::json!(1);
    let mut zero_dt = base.clone();
    zero_dt["dt"] = serde_json::json!(0.0);
    let mut bad_family = base.clone();
    bad_family["family"] = serde_json::json!("nonsense");

    for (name, cfg) in [
        ("unknown_key", &unknown_key),
        ("zero_dt", &zero_dt),
        ("bad_family", &bad_family),
    ] {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
        let out = run(&[
            "certify-all",
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 2, "{name}: {}", stderr_text(&out));
        assert!(stderr_text(&out).starts_with("error:"), "{name}");
    }

    // A typo in a tolerance override must not silently disable a gate.
    let good = configs_dir().join("bitop.json");
    let out = run(&[
        "certify-all",
        "--config",
        good.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--tol",
        "conservatoin=1e-6",
    ]);
    assert_eq!(exit_code(&out), 2, "{}", stderr_text(&out));

    let out = run(&["certify-all", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2, "missing --config: {}", stderr_text(&out));
}

#[test]
fn model_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(configs_dir().join("bitop.json")).unwrap();
    let base: serde_json::Value = serde_json::from_str(&base).unwrap();

    // Structurally valid JSON, inconsistent model: the bi-axis family is
    // only defined at n=4.
    let mut wrong_n = base.clone();
    wrong_n["n"] = serde_json::json!(5);
    wrong_n["init"] = serde_json::json!({ "momentum": [[1, 2, 0.5]], "field": [[1, 2, 0.25]] });

    let lagrange =
        std::fs::read_to_string(configs_dir().join("lagrange_so_so_n4.json")).unwrap();
    let mut equal_blocks: serde_json::Value = serde_json::from_str(&lagrange).unwrap();
    equal_blocks["alpha"] = serde_json::json!([0.75, 0.75]);

    for (name, cfg) in [("wrong_n", &wrong_n), ("equal_blocks", &equal_blocks)] {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
        let out = run(&[
            "certify-all",
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 3, "{name}: {}", stderr_text(&out));
    }
}

#[test]
fn tolerance_overrides_gate_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs_dir().join("manakov_gyro_2_2.json");
    let out = run(&[
        "certify-all",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--tol",
        "conservation=1e-30",
        "--quiet",
    ]);
    assert_eq!(exit_code(&out), 1, "{}", stderr_text(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let rows = report["checks"].as_array().unwrap();
    let conservation = rows
        .iter()
        .find(|r| r["name"] == "conservation")
        .expect("conservation row");
    assert_eq!(conservation["pass"], serde_json::json!(false));
    assert_eq!(conservation["tolerance"], serde_json::json!(1e-30));
    // Exactly one gate was tightened, so exactly one row fails.
    assert_eq!(rows.iter().filter(|r| r["pass"] == serde_json::json!(false)).count(), 1);
}

#[test]
fn scoped_checks_reject_out_of_scope_models() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("check-lax", "classical3_euler.json"),
        ("check-rank", "manakov_gyro_2_2_2.json"),
        ("crosscheck-so3", "lagrange_so_so_n4.json"),
        ("zhukovskiy-trace", "classical3_lagrange.json"),
    ];
    for (cmd, cfg) in cases {
        let config = configs_dir().join(cfg);
        let out = run(&[
            cmd,
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 2, "{cmd} on {cfg}: {}", stderr_text(&out));
    }
}
