use std::process::{Command, Output};

use vofrac::GridFunction;

fn vofrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vofrac")).args(args).output().expect("spawn vofrac")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Data rows of a CSV answer, split into fields.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn half_derivative_of_t() {
    let out = vofrac(&["differint", "--func", "t", "--dim", "0.5", "--a", "0", "--t", "1", "--n-points", "4097"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# config {"));
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    let v: f64 = r[0][1].parse().unwrap();
    assert!((v - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-3, "{v}");
}

#[test]
fn first_derivative_of_t_squared() {
    let out = vofrac(&["differint", "--func", "t^2", "--dim", "1", "--a", "0", "--b", "4", "--t", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: f64 = rows(&stdout(&out))[0][1].parse().unwrap();
    assert!((v - 6.0).abs() < 1e-3, "{v}");
}

#[test]
fn compare_reports_finite_error() {
    let out = vofrac(&["compare", "--func", "t", "--dim", "1 - 0.01", "--window", "1", "2", "--n-points", "1025"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let err = json["report"]["max_rel_err"].as_f64().unwrap();
    assert!(err.is_finite() && err < 0.05, "{err}");
    assert_eq!(json["config"]["command"], "compare");
}

#[test]
fn calibrate_returns_alpha() {
    let out = vofrac(&["calibrate", "--func", "t", "--dim", "1 - 0.02", "--window", "1", "2", "--n-points", "1025"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(json["report"]["alpha"].as_f64().unwrap().is_finite());
}

#[test]
fn invalid_expression_exits_one() {
    let out = vofrac(&["differint", "--func", "t +", "--dim", "0.5", "--t", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E:parse:"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_flag_exits_one() {
    let out = vofrac(&["differint", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E:usage:"));
}

#[test]
fn band_crossing_exits_two() {
    let out = vofrac(&["differint", "--func", "t", "--dim", "0.5 + t", "--a", "0", "--b", "1", "--t", "0.8"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("E:"));
}

#[test]
fn strict_nonconvergence_exits_three() {
    let args = ["solve", "--func", "t", "--d0", "0.4", "--kappa", "0.1", "--max-iter", "2", "--n-points", "65"];
    let lax = vofrac(&args);
    assert_eq!(lax.status.code(), Some(0), "{}", stderr(&lax));
    let json: serde_json::Value = serde_json::from_str(&stdout(&lax)).unwrap();
    assert_eq!(json["report"]["converged"], false);

    let mut strict = args.to_vec();
    strict.push("--strict");
    let out = vofrac(&strict);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("E:nonconverged:"));
}

#[test]
fn sampled_input_matches_expression() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let g = GridFunction::from_fn(0.0, 2.0, 1025, |t: f64| t * t).unwrap();
    vofrac_cli::emit_grid(&g, &path).unwrap();
    let file_arg = format!("@{}", path.display());
    let sampled = vofrac(&["differint", "--func", &file_arg, "--dim", "0.5", "--t", "1"]);
    assert!(sampled.status.success(), "{}", stderr(&sampled));
    let v: f64 = rows(&stdout(&sampled))[0][1].parse().unwrap();
    // Gamma(3) / Gamma(2.5)
    assert!((v - 1.504_505_556_127_35).abs() < 1e-3, "{v}");
}

#[test]
fn non_uniform_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t,f\n0,0\n0.1,1\n0.3,2\n0.4,3\n").unwrap();
    let out = vofrac(&["differint", "--func", &format!("@{}", path.display()), "--dim", "0.5", "--t", "0.2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("E:non-uniform-grid:"), "{}", stderr(&out));
}

#[test]
fn ingest_accepts_eleven_rows_and_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    let mut text = String::from("t,f\n");
    for i in 0..11 {
        text.push_str(&format!("{},{}\n", i as f64 / 10.0, (i as f64 / 10.0).exp()));
    }
    std::fs::write(&good, text).unwrap();
    let g = vofrac_cli::ingest_csv(&good).unwrap();
    assert_eq!(g.n_points(), 11);
    assert_eq!((g.a(), g.b()), (0.0, 1.0));

    let headless = dir.path().join("headless.csv");
    std::fs::write(&headless, "0,1\n0.5,2\n1,3\n").unwrap();
    match vofrac_cli::ingest_csv(&headless) {
        Err(vofrac_cli::IoError::Format { line, .. }) => assert_eq!(line, 1),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn sweep_rows_follow_requested_order() {
    let out = vofrac(&["sweep", "--func", "t", "--dim", "0.9", "--vary", "eps-scale", "--values", "1,0.5,0.25", "--t", "1", "--n-points", "1025"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "axis,param,t,value,trust"));
    let params: Vec<f64> = rows(&text).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(params, vec![1.0, 0.5, 0.25]);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("res.json");
    let out = vofrac(&["differint", "--func", "t", "--dim", "0.5", "--t", "1", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["config"]["dim"], "0.5");
}
