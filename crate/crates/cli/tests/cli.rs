use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn abcmeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abcmeta"))
        .args(args)
        .env_remove("ABCMETA_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn field(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("missing {key} in {v}"))
}

fn within(x: f64, centre: f64, tol: f64) -> bool {
    (x - centre).abs() <= tol
}

#[test]
fn estimate_normal_quartiles() {
    let out = abcmeta(&[
        "estimate",
        "--n",
        "500",
        "--q1",
        "-1.4",
        "--median",
        "-0.2",
        "--q3",
        "0.95",
        "--dist",
        "normal",
        "--iters",
        "50000",
        "--accept-pct",
        "0.1",
        "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert!(within(field(&v, "est_mean"), -0.22, 0.06), "{v}");
    assert!(within(field(&v, "est_sd"), 1.745, 0.12), "{v}");
    assert_eq!(v["scenario"], "S2");
    assert_eq!(v["retained"], 50);
    assert_eq!(v["seed"], 1234);
}

#[test]
fn estimate_beta_range() {
    let out = abcmeta(&[
        "estimate", "--n", "500", "--min", "2.7", "--median", "72.5", "--max", "99.9", "--dist",
        "beta", "--lower", "0", "--upper", "100", "--iters", "100000", "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert!(within(field(&v, "est_mean"), 67.4, 2.0), "{v}");
    assert!(within(field(&v, "est_sd"), 22.6, 2.0), "{v}");
}

#[test]
fn table_output_rounds_to_three_decimals() {
    let out = abcmeta(&[
        "estimate", "--n", "500", "--q1", "-1.4", "--median", "-0.2", "--q3", "0.95", "--iters",
        "5000",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mean = text.lines().find(|l| l.starts_with("mean")).unwrap();
    let value = mean.split_whitespace().nth(1).unwrap();
    assert_eq!(value.split('.').nth(1).unwrap().len(), 3, "{text}");
}

#[test]
fn ordering_violation_exits_2() {
    let out = abcmeta(&[
        "estimate", "--n", "500", "--min", "5", "--median", "4", "--max", "10", "--dist", "normal",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("OrderingViolation"),
        "{}",
        stderr(&out)
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_and_validation_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &[
            "estimate", "--n", "2", "--min", "1", "--median", "2", "--max", "3",
        ],
        &[
            "estimate", "--n", "50", "--min", "1", "--q1", "2", "--median", "3",
        ],
        &[
            "estimate", "--n", "50", "--min", "1", "--median", "3", "--max", "5", "--dist",
            "cauchy",
        ],
        &[
            "estimate",
            "--n",
            "50",
            "--min",
            "-1",
            "--median",
            "3",
            "--max",
            "5",
            "--dist",
            "lognormal",
        ],
        &[
            "estimate", "--n", "50", "--min", "-1", "--median", "3", "--max", "5", "--dist",
            "select", "--shift", "1",
        ],
        &[
            "estimate",
            "--n",
            "50",
            "--min",
            "1",
            "--median",
            "3",
            "--max",
            "5",
            "--accept-pct",
            "0",
        ],
        &["estimate", "--median", "3"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = abcmeta(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn seed_comes_from_environment() {
    let args = [
        "estimate", "--n", "50", "--min", "1", "--median", "3", "--max", "9", "--iters", "2000",
        "--json",
    ];
    let out = Command::new(env!("CARGO_BIN_EXE_abcmeta"))
        .args(args)
        .env("ABCMETA_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 77);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "5"]);
    let out = Command::new(env!("CARGO_BIN_EXE_abcmeta"))
        .args(with_flag)
        .env("ABCMETA_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 5);
}

#[test]
fn auto_shift_is_announced() {
    let out = abcmeta(&[
        "estimate",
        "--n",
        "500",
        "--min",
        "-9.65",
        "--median",
        "-5.59",
        "--max",
        "39.25",
        "--dist",
        "exponential",
        "--shift",
        "auto",
        "--iters",
        "5000",
        "--quiet",
        "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("c = 10"), "{}", stderr(&out));
    assert_eq!(field(&json(&out), "shift"), 10.0);
}

#[test]
fn negative_values_warn_for_positive_families() {
    let out = abcmeta(&[
        "estimate", "--n", "50", "--min", "-1", "--median", "3", "--max", "9", "--dist", "weibull",
        "--iters", "2000",
    ]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("--shift"), "{}", stderr(&out));
}

#[test]
fn ties_warn_but_run() {
    let out = abcmeta(&[
        "estimate", "--n", "50", "--min", "3", "--median", "3", "--max", "9", "--iters", "2000",
    ]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("equal"));
    let out = abcmeta(&[
        "estimate", "--n", "50", "--min", "3", "--median", "3", "--max", "9", "--iters", "2000",
        "--quiet",
    ]);
    assert!(stderr(&out).is_empty());
}

#[test]
fn quiet_run_has_no_progress_output() {
    let out = abcmeta(&[
        "estimate", "--n", "50", "--min", "1", "--median", "3", "--max", "9", "--quiet",
    ]);
    assert!(out.status.success());
    assert!(out.stderr.is_empty());
}

const HEADER: &str = "study_id,n,min,q1,median,q3,max,distribution,shift\n";

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let mut rows = vec![header];
    rows.extend(
        r.records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect()),
    );
    rows
}

#[test]
fn header_only_batch_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", HEADER);
    let out = abcmeta(&["batch", &input]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "study_id");
}

#[test]
fn bad_sample_size_only_affects_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.csv",
        &format!("{HEADER}a,100,1,,3,,9,,\nsmall,2,1,,3,,9,,\nc,100,1,,3,,9,exponential,\n"),
    );
    let out = abcmeta(&["batch", &input, "--iters", "2000", "--quiet"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[2][col("study_id")], "small");
    assert!(rows[2][col("error")].starts_with("BadSampleSize"));
    assert!(rows[2][col("est_mean")].is_empty());
    for i in [1, 3] {
        assert!(rows[i][col("error")].is_empty());
        assert!(rows[i][col("est_mean")].parse::<f64>().is_ok());
    }
    assert_eq!(rows[3][col("family")], "exponential");

    let out = abcmeta(&["batch", &input, "--iters", "2000", "--quiet", "--fail-fast"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("small"));
}

#[test]
fn malformed_batch_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.csv",
        &format!("{HEADER}a,100,1,,3,,9,,\nb,100,1,,three,,9,,\n"),
    );
    let out = abcmeta(&["batch", &input]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("row 3") && err.contains("median"), "{err}");
    assert!(out.stdout.is_empty());

    let out = abcmeta(&["batch", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn batch_reproduces_worked_examples() {
    let dir = tempfile::tempdir().unwrap();
    let body = "study_id,n,min,q1,median,q3,max,distribution,shift,lower,upper\n\
        difference,500,,-1.4,-0.2,0.95,,normal,,,\n\
        hrqol,500,2.7,,72.5,,99.9,beta,,0,100\n\
        skewed,500,0.82,,4.44,,22.15,select,,,\n\
        negative,500,-9.65,,-5.59,,39.25,select,10,,\n";
    let input = write(dir.path(), "in.csv", body);
    let output = dir.path().join("out.json");
    let out = abcmeta(&[
        "batch",
        &input,
        "--iters",
        "100000",
        "--json",
        "-o",
        output.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(&output).unwrap()).unwrap();
    let rows = report.as_array().unwrap();
    let ids: Vec<&str> = rows
        .iter()
        .map(|r| r["study_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["difference", "hrqol", "skewed", "negative"]);

    let (m, s) = (field(&rows[0], "est_mean"), field(&rows[0], "est_sd"));
    assert!(
        within(m, -0.22, 0.06) && within(s, 1.745, 0.12),
        "{}",
        rows[0]
    );

    let (m, s) = (field(&rows[1], "est_mean"), field(&rows[1], "est_sd"));
    assert!(within(m, 67.4, 2.0) && within(s, 22.6, 2.0), "{}", rows[1]);

    assert_eq!(rows[2]["family"], "lognormal", "{}", rows[2]);
    let (m, s) = (field(&rows[2], "est_mean"), field(&rows[2], "est_sd"));
    assert!(
        within(field(&rows[2], "selection_probability"), 0.66, 0.15),
        "{}",
        rows[2]
    );
    assert!(within(m, 4.93, 0.5) && within(s, 2.95, 0.6), "{}", rows[2]);

    assert_eq!(rows[3]["family"], "exponential", "{}", rows[3]);
    let (m, s) = (field(&rows[3], "est_mean"), field(&rows[3], "est_sd"));
    assert!(within(m, -3.33, 0.8) && within(s, 6.84, 0.8), "{}", rows[3]);
    assert_eq!(field(&rows[3], "shift"), 10.0);
}

#[test]
fn batch_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{HEADER}a,100,1,,3,,9,,\nb,60,,2,3,5,,lognormal,\nc,80,1,2,4,6,20,select,\nd,40,-3,,0,,8,weibull,4\n"
    );
    let input = write(dir.path(), "in.csv", &body);
    for extra in [&[][..], &["--json"][..]] {
        let run = |threads: &str, name: &str| {
            let path = dir.path().join(name);
            let mut args = vec![
                "batch",
                &input,
                "--iters",
                "3000",
                "--quiet",
                "--threads",
                threads,
                "-o",
            ];
            args.push(path.to_str().unwrap());
            args.extend_from_slice(extra);
            let out = abcmeta(&args);
            assert!(out.status.success(), "{}", stderr(&out));
            fs::read(path).unwrap()
        };
        let first = run("1", "one");
        assert_eq!(first, run("1", "again"));
        assert_eq!(first, run("4", "four"));
    }
}

#[test]
fn renaming_a_study_changes_only_that_study() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "a.csv",
        &format!("{HEADER}x,100,1,,3,,9,,\ny,100,1,,3,,9,,\n"),
    );
    let b = write(
        dir.path(),
        "b.csv",
        &format!("{HEADER}x,100,1,,3,,9,,\nz,100,1,,3,,9,,\n"),
    );
    let ra = csv_rows(&stdout(&abcmeta(&["batch", &a, "--iters", "3000"])));
    let rb = csv_rows(&stdout(&abcmeta(&["batch", &b, "--iters", "3000"])));
    assert_eq!(ra[1], rb[1]);
    assert_ne!(ra[2][4], rb[2][4]);
}

#[test]
fn json_batch_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.json",
        r#"[{"study_id": "a", "n": 100, "min": 1, "median": 3, "max": 9, "distribution": "weibull"}]"#,
    );
    let out = abcmeta(&["batch", &input, "--iters", "2000", "--json", "--timings"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v[0]["family"], "weibull");
    assert!(v[0]["wall_time_s"].as_f64().is_some());
}

#[test]
fn version_flag() {
    let out = abcmeta(&["--version"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("abcmeta "));
}
