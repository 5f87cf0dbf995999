use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rigidity-gauge"));
    c.env_remove("RIGIDITY_GAUGE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn table_markdown_matches_closed_forms() {
    let out = run(&["table", "--max", "6", "--format", "md"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut classical = 0;
    for line in text.lines().filter(|l| l.starts_with("| I") && !l.starts_with("| type")) {
        let cells: Vec<&str> = line.trim_matches('|').split('|').map(str::trim).collect();
        let params: Vec<usize> = cells[1].split(',').filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
        let (n, gamma) = match (cells[0], params.as_slice()) {
            ("I", [p, q]) => (p * q, p + q),
            ("II", [m]) => (m * (m - 1) / 2, 2 * (m - 1)),
            ("III", [m]) => (m * (m + 1) / 2, m + 1),
            ("IV", [m]) => (*m, *m),
            _ => continue,
        };
        classical += 1;
        assert_eq!(cells[2].parse::<usize>().unwrap(), n, "{line}");
        assert!((cells[3].parse::<f64>().unwrap() - gamma as f64).abs() < 1e-6, "{line}");
        assert_eq!(cells[6], "true");
    }
    assert!(classical >= 30, "only {classical} classical rows");
    assert!(text.contains("| V |  | 16 |"));
}

#[test]
fn gamma_of_i22() {
    let out = run(&["gamma", "I(2,2)"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = &v["report"];
    assert_eq!(r["n"], 4);
    assert!((r["gamma"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert_eq!(r["vanishing_q_max"], 2);
}

#[test]
fn cv_on_the_disk_is_negative() {
    let out = run(&["verify", "cv", "--domain", "I(1,1)", "--q", "0", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    let reports = v["report"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 10);
    assert!(reports.iter().all(|r| r["sign_verdict"] == "negative-definite" && r["lhs"].as_f64().unwrap() < 0.0));
}

#[test]
fn identical_config_gives_identical_bytes() {
    for args in [
        &["verify", "cv", "--domain", "III(2)", "--q", "2", "--samples", "25"][..],
        &["table", "--max", "4", "--format", "csv"][..],
        &["lab", "decompose", "--basis", "8"][..],
    ] {
        let (a, b) = (run(args), run(args));
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert!(!a.stdout.contains(&b'\r'));
    }
}

#[test]
fn seed_comes_from_flag_then_environment_then_default() {
    let args = ["lab", "decompose", "--basis", "8"];
    assert_eq!(json(&run(&args))["report"]["seed"], 42);
    let env = bin().args(args).env("RIGIDITY_GAUGE_SEED", "5").output().unwrap();
    assert_eq!(json(&env)["report"]["seed"], 5);
    let flag = bin().args(args).args(["--seed", "9"]).env("RIGIDITY_GAUGE_SEED", "5").output().unwrap();
    assert_eq!(json(&flag)["report"]["seed"], 9);
    let bad = bin().args(args).env("RIGIDITY_GAUGE_SEED", "nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["gamma", "VII"][..],
        &["gamma", "I(0,3)"][..],
        &["table", "--format", "xml"][..],
        &["verify", "cv", "--domain", "I(1,1)xI(1,1)", "--q", "0"][..],
        &["verify", "cv", "--domain", "I(2,2)", "--q", "9"][..],
        &["verify", "growth", "--custom", "1/"][..],
        &["verify", "growth", "--case", "dz", "--custom", "z"][..],
        &["verify", "growth", "--rho-min", "0.01"][..],
        &["verify", "good-metric", "--case", "log-power:x"][..],
        &["verify", "ke", "--case", "abs-z-squared"][..],
        &["lab", "decompose", "--epsilon", "0.7"][..],
        &["frobnicate"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn failed_checks_exit_1_with_a_summary() {
    let out = run(&["verify", "growth", "--custom", "1/z"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["passed"], false);
    assert_eq!(v["failures"][0], "(1/z) dz: not-poincare-growth, expected poincare-growth");

    let strict = run(&["verify", "ke", "--case", "poincare-disk", "--tol", "1e-12"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn custom_expression_reproduces_the_fixture() {
    let custom = json(&run(&["verify", "growth", "--custom", "1/(z*log(abs(z)^2))"]));
    let fixture = json(&run(&["verify", "growth", "--case", "dz-over-zlog"]));
    let ratio = |v: &Value| v["report"]["cases"][0]["report"]["sup_ratio"].as_f64().unwrap();
    assert!((ratio(&custom) - ratio(&fixture)).abs() < 1e-12);
    assert!((ratio(&custom) - 1.0).abs() < 1e-6);
}

#[test]
fn fixture_suites_pass() {
    for args in [
        &["verify", "growth"][..],
        &["verify", "good-metric"][..],
        &["verify", "good-metric", "--case", "log-power:-1.5"][..],
        &["verify", "ke"][..],
        &["verify", "boundary"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn lab_report_has_the_documented_keys() {
    let v = json(&run(&["lab", "decompose", "--basis", "16", "--epsilon", "0.01", "--quad-order", "20"]));
    for key in ["adjoint_residual", "energy_identity_residual", "decomposition_residual", "harmonic_dim"] {
        assert!(v["report"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["report"]["harmonic_dim"], serde_json::json!([16, 32, 16]));
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let out = run(&["table", "--max", "3", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let file = std::fs::read(&path).unwrap();
    assert_eq!(file, run(&["table", "--max", "3", "--format", "csv"]).stdout);
    assert!(file.starts_with(b"type,params,n,gamma,gamma_reference,source,match\n"));
}

#[test]
fn verify_all_runs_every_criterion() {
    let out = run(&["verify", "all", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.contains(",pass,")));
}
