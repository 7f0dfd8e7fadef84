use std::process::{Command, Output};

fn jpk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jpk"))
        .args(args)
        .env_remove("JPK_CONFIG")
        .output()
        .expect("run jpk")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn values(o: &Output) -> Vec<f64> {
    stdout(o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn phillips_preserves_constants() {
    let o = jpk(&["eval", "--op", "phillips", "--fn", "const", "--n", "5", "--beta", "0.3", "--x", "0:2:5"]);
    assert!(o.status.success());
    let v = values(&o);
    assert_eq!(v.len(), 5);
    for y in v {
        assert!((y - 1.0).abs() < 1e-10, "{y}");
    }
}

#[test]
fn jain_linear_matches_closed_moment() {
    // B_n(t; x) = x / (1 - beta)
    let o = jpk(&["eval", "--op", "jain", "--fn", "linear", "--n", "4", "--beta", "0.25", "--x", "1", "--x", "2"]);
    assert!(o.status.success());
    let v = values(&o);
    assert!((v[0] - 4.0 / 3.0).abs() < 1e-12);
    assert!((v[1] - 8.0 / 3.0).abs() < 1e-12);
}

#[test]
fn invalid_parameters_exit_with_usage_code() {
    let o = jpk(&["eval", "--op", "jain", "--fn", "const", "--n", "5", "--beta", "1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = jpk(&["eval", "--op", "jain", "--fn", "nope", "--n", "5", "--beta", "0", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = jpk(&["moments", "--kind", "mu", "--r-max", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_of_table_order_names_the_table() {
    let o = jpk(&["moments", "--kind", "B", "--r-max", "6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("B(t^r)"));
}

#[test]
fn symbolic_moments_list_each_order() {
    let o = jpk(&["moments", "--kind", "P", "--r-max", "3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for r in 0..=3 {
        assert!(s.contains(&format!("# P_{r}")), "{s}");
    }
}

#[test]
fn second_central_moment_at_beta_zero() {
    // Szász case: mu_2 = x / n
    let o = jpk(&["moments", "--kind", "mu", "--r-max", "2", "--format", "csv", "--n", "10", "--beta", "0", "--x", "1"]);
    assert!(o.status.success());
    let v = values(&o);
    assert!(v[0].abs() < 1e-15);
    assert!((v[1] - 0.2).abs() < 1e-12, "{v:?}");
}

#[test]
fn json_output_parses() {
    let o = jpk(&["moments", "--kind", "T", "--r-max", "2", "--format", "json", "--n", "8", "--beta", "0.2", "--x", "0.5"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["values"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_reports_each_identity_and_fails_on_known_errors() {
    let o = jpk(&["verify", "--suite", "recurrences"]);
    let s = stdout(&o);
    assert!(s.lines().all(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")));
    assert!(s.contains("PASS ratio polynomial recurrence"));
    assert!(s.contains("FAIL reduced-polynomial recurrence with the printed alpha table"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn voronovskaja_square_at_beta_zero_tends_to_two() {
    let o = jpk(&["converge", "--experiment", "voronovskaja", "--fn", "square", "--beta", "0", "--x", "1", "--n-list", "8,16,32"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        let est: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((est - 2.0).abs() < 1e-9, "{line}");
    }
}

#[test]
fn converge_writes_output_file() {
    let dir = std::env::temp_dir().join(format!("jpk-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("korovkin.csv");
    let o = jpk(&[
        "converge", "--experiment", "korovkin", "--fn", "exp-neg", "--beta", "0.3", "--interval", "0:3",
        "--n-list", "4,8,16", "--grid-size", "7", "--out", path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("n,error,rate,estimate"));
    assert_eq!(text.lines().count(), 4);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_is_honoured_and_validated() {
    let dir = std::env::temp_dir().join(format!("jpk-cfg-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "tail_tol = -1\n").unwrap();
    let o = jpk(&["--config", bad.to_str().unwrap(), "eval", "--op", "jain", "--fn", "const", "--n", "3", "--beta", "0", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let tiny = dir.join("tiny.cfg");
    std::fs::write(&tiny, "k_max = 3\n").unwrap();
    let o = jpk(&["--config", tiny.to_str().unwrap(), "eval", "--op", "jain", "--fn", "const", "--n", "3", "--beta", "0.5", "--x", "4"]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}
