//! End-to-end runs of the `ergopt` binary on the files in `tests/data`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergopt_cli::{parse_system_file, parse_system_str};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn ergopt(args: &[&str], file: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergopt"))
        .args(args)
        .arg(file)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Copy a data file into a scratch directory so `analyze` can write next to it.
fn scratch_copy(name: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(name);
    fs::copy(data(name), &path).unwrap();
    (dir, path)
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn analyze_reports_and_writes_json() {
    let (_dir, path) = scratch_copy("two_fixed_points.json");
    let out = ergopt(&["analyze"], &path);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("lambda = -3/2"), "{text}");
    assert!(text.contains("witness cycle Ω1 -> Ω2 -> Ω1"), "{text}");
    assert!(text.contains("P_A(beta) = P_normalized(beta) + beta * m(A)"));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path.with_file_name("two_fixed_points.analysis.json")).unwrap())
            .unwrap();
    assert_eq!(json["lambda"]["exact"], "-3/2");
    assert_eq!(json["witness_cycle"], serde_json::json!([1, 2]));
    assert_eq!(json["s_ext"][0][1]["exact"], "-1");
    assert_eq!(json["s_ext"][1][0]["exact"], "-2");
}

#[test]
fn analyze_single_fixed_point() {
    let (_dir, path) = scratch_copy("single_fixed_point.json");
    let text = stdout(&ergopt(&["analyze"], &path));
    assert!(text.contains("lambda = -1 "), "{text}");
}

#[test]
fn analyze_identically_zero_potential() {
    let (_dir, path) = scratch_copy("zero_potential.json");
    let text = stdout(&ergopt(&["analyze"], &path));
    assert!(
        text.contains("Ω = X, single component, S^ext undefined (no exterior)"),
        "{text}"
    );
}

#[test]
fn missing_words_are_all_named() {
    let out = ergopt(&["analyze"], &data("missing_word.json"));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("missing potential values for 10"), "{err}");
}

#[test]
fn pressure_csv_layout_and_closed_form_residuals() {
    let out = ergopt(
        &["pressure", "--beta-min", "10", "--beta-max", "30", "--steps", "2"],
        &data("single_fixed_point.json"),
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows[0].join(","), "beta,pressure,residual,log_residual,slope,trusted");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][4], "", "first slope is empty");
    // D(beta) = log(1 + e^-beta)
    for (row, beta) in rows[1..].iter().zip([10.0f64, 20.0, 30.0]) {
        let expected = (-beta).exp().ln_1p();
        let got: f64 = row[2].parse().unwrap();
        assert!((got / expected - 1.0).abs() < 1e-12, "{got} vs {expected}");
        assert_eq!(row[5], "true");
        // 25 significant digits
        let mantissa = row[1].split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 24, "{}", row[1]);
    }
}

#[test]
fn pressure_slopes_approach_lambda() {
    let out = ergopt(
        &["pressure", "--beta-min", "20", "--beta-max", "40", "--steps", "4"],
        &data("two_fixed_points.json"),
    );
    let rows = csv_rows(&stdout(&out));
    for row in &rows[2..] {
        let slope: f64 = row[4].parse().unwrap();
        assert!((slope + 1.5).abs() < 1e-8, "{slope}");
    }
}

#[test]
fn pressure_exact_zero_column() {
    let out = ergopt(&["pressure"], &data("zero_potential.json"));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 6);
    for row in &rows[1..] {
        assert_eq!(row[2], "0");
        assert_eq!(row[4], "");
        assert_eq!(row[5], "exact-zero");
    }
}

#[test]
fn pressure_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..3 {
        let target = dir.path().join(format!("run{run}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_ergopt"))
            .args(["pressure", "--steps", "12", "--out"])
            .arg(&target)
            .arg(data("golden_mean_rational.json"))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        outputs.push(fs::read(&target).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(String::from_utf8(outputs[0].clone()).unwrap().lines().count(), 14);
}

#[test]
fn precision_guard_is_actionable() {
    let out = ergopt(
        &["pressure", "--beta-max", "80", "--precision-bits", "128"],
        &data("two_fixed_points.json"),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("--precision-bits") && err.contains("--beta-max"), "{err}");
}

#[test]
fn verify_passes_on_closed_form_systems() {
    for name in [
        "single_fixed_point.json",
        "two_fixed_points.json",
        "full_shift_and_fixed_point.json",
        "golden_mean_rational.json",
        "zero_potential.json",
    ] {
        let out = ergopt(&["verify"], &data(name));
        let text = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{name}: {text}");
        assert!(text.contains("PASS"), "{text}");
    }
    let text = stdout(&ergopt(&["verify"], &data("full_shift_and_fixed_point.json")));
    assert!(
        text.contains("Ω2 has entropy") && text.contains("excluded from the rate matrix"),
        "{text}"
    );
    assert!(text.contains("caveat:"), "{text}");
}

#[test]
fn verify_exit_code_on_failure() {
    // a negative tolerance demands gamma >= lambda + 1, which cannot hold
    let out = ergopt(&["verify", "--tol=-1"], &data("two_fixed_points.json"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn oracle_matches_on_examples() {
    for name in [
        "single_fixed_point.json",
        "two_fixed_points.json",
        "full_shift_and_fixed_point.json",
        "golden_mean_rational.json",
    ] {
        let out = ergopt(&["oracle"], &data(name));
        let text = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{name}: {text}");
        assert!(text.contains(" 0 mismatches"), "{text}");
        assert!(!text.contains("MISMATCH"));
    }
    let out = ergopt(&["oracle", "--max-length", "12"], &data("two_fixed_points.json"));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn example_files_round_trip() {
    for entry in fs::read_dir(data("")).unwrap() {
        let path = entry.unwrap().path();
        let Ok(spec) = parse_system_file(&path) else {
            continue;
        };
        let again = parse_system_str(&spec.to_json()).unwrap();
        assert_eq!(again, spec, "{}", path.display());
    }
}
