use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn weakot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakot")).args(args).env_remove("WEAKOT_SEED").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = weakot(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const MU: &str = r#"{"atoms": [0, 2]}"#;
const NU: &str = r#"{"atoms": [-1, 1]}"#;
const DIRAC: &str = r#"{"atoms": [0]}"#;

#[test]
fn weak_cost_example() {
    let r = json(&["weak-cost", "--theta", "power:p=2", MU, NU]);
    assert_eq!(r["command"], "weak-cost");
    assert!((r["results"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["refinement_n"], 2);
    let swapped = json(&["weak-cost", "--theta", "power:p=2", "--swap", MU, NU]);
    assert_eq!(swapped["results"]["direction"], "mu_given_nu");
}

#[test]
fn weak_cost_text_output() {
    let out = weakot(&["weak-cost", "--theta", "power:p=2", MU, NU]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).lines().any(|l| l == "value: 1.0"));
}

#[test]
fn classical_cost_of_shift() {
    let r = json(&["cost", "--theta", "power:p=2", MU, r#"{"atoms": [1, 3]}"#]);
    assert!((r["results"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn order_example_and_witness() {
    let r = json(&["order", DIRAC, NU]);
    assert_eq!(r["results"]["verdict"], "dominated");
    assert_eq!(r["verdicts"][0]["holds"], true);
    let r = json(&["order", NU, DIRAC]);
    assert_eq!(r["results"]["verdict"], "not_dominated");
    assert_eq!(r["results"]["witness"]["kind"], "stop_loss");
}

#[test]
fn diagnose_bernoulli() {
    let r = json(&["diagnose", "--theta", "power:p=2", "--t0", "1", &data("bernoulli.json")]);
    let res = &r["results"];
    assert_eq!(res["best_b"].as_f64(), Some(1.0));
    assert_eq!(res["h"].as_f64(), Some(1.0));
    assert!((res["d"].as_f64().unwrap() - 5480.0).abs() < 1e-9);
    assert!(res.get("verdicts").is_none());
    assert!(r["verdicts"].as_array().unwrap().iter().all(|v| v["holds"] == true));
}

#[test]
fn measures_from_csv_and_files() {
    let r = json(&["order", DIRAC, &data("two_point.csv")]);
    assert_eq!(r["results"]["verdict"], "dominated");
    let r = json(&["weak-cost", "--theta", "power:p=2", &data("uniform3.json"), &data("bernoulli_skewed.json")]);
    assert!(r["results"]["value"].as_f64().unwrap() >= 0.0);
}

#[test]
fn projection_majorization_and_rado() {
    let r = json(&["project", "[0, 0]", "[-1, 1]"]);
    assert_eq!(r["results"]["c_hat"], serde_json::json!([0.0, 0.0]));
    let r = json(&["majorize", "[0, 0]", "[-1, 1]"]);
    assert_eq!(r["results"]["verdict"], "majorized");
    let r = json(&["majorize", "[-2, 2]", "[-1, 1]"]);
    assert_eq!(r["results"]["verdict"], "not_majorized");
    let r = json(&["rado", "[1.5, 1.5]", "[0, 3]"]);
    assert_eq!(r["results"]["matrix"], serde_json::json!([[0.5, 0.5], [0.5, 0.5]]));
}

#[test]
fn coupling_marginals() {
    let r = json(&["couple", "--theta", "power:p=2", MU, NU]);
    assert!((r["results"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["verdicts"][0]["name"], "marginals");
    assert_eq!(r["verdicts"][0]["holds"], true);
}

#[test]
fn probe_is_seeded() {
    let args = ["probe", "--theta", "power:p=2", "--t0", "1", "--trials", "10", "--seed", "4"];
    let mut with_mu = args.to_vec();
    let path = data("bernoulli.json");
    with_mu.push(&path);
    let a = json(&with_mu);
    let b = json(&with_mu);
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["verdicts"][0]["holds"], true);

    let from_env = Command::new(env!("CARGO_BIN_EXE_weakot"))
        .args(["--json", "probe", "--theta", "power:p=2", "--t0", "1", "--trials", "10", &path])
        .env("WEAKOT_SEED", "4")
        .output()
        .unwrap();
    let c: Value = serde_json::from_slice(&from_env.stdout).unwrap();
    assert_eq!(a["results"], c["results"]);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = json(&["verify", "--seed", "9"]);
    let b = json(&["verify", "--seed", "9"]);
    assert_eq!(a["results"], b["results"]);
    assert!(a["verdicts"].as_array().unwrap().iter().all(|v| v["holds"] == true));
}

#[test]
fn reports_round_trip() {
    let r = json(&["diagnose", "--theta", "power:p=2", "--t0", "1", &data("uniform3.json")]);
    let text = serde_json::to_string(&r).unwrap();
    let back: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

#[test]
fn exit_codes() {
    assert_eq!(weakot(&["--help"]).status.code(), Some(0));
    assert_eq!(weakot(&["--version"]).status.code(), Some(0));

    let out = weakot(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).lines().last().unwrap().starts_with("error: kind=usage msg="));
    assert_eq!(weakot(&["cost", MU, NU]).status.code(), Some(1));
    assert_eq!(weakot(&["diagnose", "--theta", "power:p=2", "--t0", "1", "--b", "1", MU]).status.code(), Some(1));

    let out = weakot(&["cost", "--theta", "power:p=0.5", MU, NU]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr(&out).lines().count(), 1);
    assert!(stderr(&out).starts_with("error: kind=non_convex msg="));

    let out = weakot(&["cost", "--theta", "power:p=2", "/no/such/file.json", NU]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: kind=input msg="));

    let out = weakot(&["rado", "[-2, 2]", "[-1, 1]"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: kind=not_majorized"));

    let out = weakot(&["weak-cost", "--theta", "power:p=2", r#"{"atoms": [0, 1], "weights": [1, -1]}"#, NU]);
    assert_eq!(out.status.code(), Some(2));
}
