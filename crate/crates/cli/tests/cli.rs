use std::path::Path;
use std::process::{Command, Output};

fn weil(args: &[&str]) -> Output {
    weil_with_env(args, None)
}

fn weil_with_env(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_weil"));
    cmd.args(args).env_remove("WEIL_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("WEIL_CACHE_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn verify_passes_and_reports_json() {
    let out = weil(&["verify", "--p", "3", "--d", "1", "--suite", "theorem1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["schema"], "weil.suite-report/1");
    assert_eq!(rep["suite"], "theorem1");
    assert_eq!(rep["passed"], true);
    assert!(rep["failure"].is_null());
    assert!(rep.get("wall_seconds").is_none());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall time"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = weil(&["verify", "--p", "3", "--d", "1", "--suite", "lemma7"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn unsupported_prime_is_a_usage_error() {
    assert_eq!(code(&weil(&["verify", "--p", "4", "--d", "1", "--suite", "maslov"])), 2);
    assert_eq!(code(&weil(&["enumerate", "--p", "2", "--d", "1"])), 2);
}

#[test]
fn budgets_exit_with_three() {
    let out = weil(&["verify", "--p", "3", "--d", "2", "--suite", "lemma1", "--budget-bytes", "5000"]);
    assert_eq!(code(&out), 3);
    let out = weil(&["verify", "--p", "3", "--d", "1", "--suite", "theorem1", "--budget-seconds", "0"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn reports_are_byte_identical_under_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = weil(&["verify", "--p", "3", "--d", "2", "--suite", "maslov", "--samples", "40", "--seed", "7", "--out", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = weil(&["verify", "--p", "3", "--d", "2", "--suite", "maslov", "--samples", "40", "--seed", "8"]);
    let rep_a: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_ne!(rep_a["seed"], json(&c)["seed"]);
}

#[test]
fn csv_report_lists_checks() {
    let out = weil(&["verify", "--p", "3", "--d", "1", "--suite", "sublemma1", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "check,cases,failures\nclosed_form,9,0\n");
}

#[test]
fn kernel_export_has_one_row_per_group_element() {
    let out = weil(&["kernel", "--p", "3", "--d", "2", "--n", "0", "--l", "5", "--l-eps", "-1", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "m_1,m_2,m_3,m_4,a,value");
    assert_eq!(text.lines().count(), 1 + 243);
    let js = json(&weil(&["export", "--kind", "kernel", "--p", "3", "--d", "1", "--n", "1", "--l", "2"]));
    assert_eq!(js["rows"].as_array().unwrap().len(), 27);
    assert_eq!(js["n"]["id"], 1);
}

#[test]
fn theta_table_export_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("t1.csv");
    let b = dir.path().join("t2.csv");
    assert_eq!(code(&weil(&["theta-table", "--p", "3", "--d", "1", "--level", "1", "--format", "csv", "--out", a.to_str().unwrap()])), 0);
    assert_eq!(
        code(&weil(&["export", "--kind", "theta-table", "--p", "3", "--d", "1", "--level", "1", "--format", "csv", "--out", b.to_str().unwrap()])),
        0
    );
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 81);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn enumerate_uses_the_cache_directory() {
    let dir = tempfile::tempdir().unwrap();
    let first = weil_with_env(&["enumerate", "--p", "3", "--d", "2"], Some(dir.path()));
    assert_eq!(code(&first), 0);
    let file = dir.path().join("lagrangians_p3_d2.json");
    assert!(file.exists());
    assert_eq!(json(&first)["count"], 40);
    std::fs::write(&file, "garbage").unwrap();
    let again = weil_with_env(&["enumerate", "--p", "3", "--d", "2"], Some(dir.path()));
    assert_eq!(again.stdout, first.stdout);
    let cached: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(cached["format_version"], 1);
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("out.json");
    let out = weil(&["enumerate", "--p", "3", "--d", "1", "--out", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn tower_check_runs_the_tower_suite() {
    let out = weil(&["tower-check", "--p", "3", "--d", "1", "--level", "1", "--samples", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["suite"], "tower");
    assert_eq!(rep["checks"][0]["name"], "square");
    assert_eq!(rep["checks"][0]["cases"], 3);
}

#[test]
fn all_runs_every_suite_at_d1() {
    let out = weil(&["verify", "--p", "3", "--d", "1", "--suite", "all", "--samples", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    let names: Vec<&str> = rep["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for suite in ["lemma1", "sublemma1", "theorem1", "maslov", "weilrep", "reduction", "tower", "schrodinger", "theta"] {
        assert!(names.iter().any(|n| n.starts_with(&format!("{suite}."))), "{suite} missing");
    }
}
