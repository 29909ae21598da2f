//! Golden-file regression tests. Rerun with `LONGARM_BLESS=1` to rewrite the goldens.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn data(name: &str) -> String {
    dir("data").join(name).to_string_lossy().into_owned()
}

fn longarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longarm"))
        .args(args)
        .env_remove("LONGARM_WORKERS")
        .output()
        .expect("spawn longarm")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = longarm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str, args: &[&str]) {
    let got = stdout_ok(args);
    let path = dir("golden").join(name);
    if std::env::var_os("LONGARM_BLESS").is_some() {
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}; run with LONGARM_BLESS=1", path.display()));
    assert_eq!(got, want, "output of {args:?} differs from {name}");
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout_ok(args)).unwrap()
}

#[test]
fn golden_brw_gamma() {
    golden("brw_gamma.csv", &["brw-gamma", "--config", &data("brw_job.json"), "--workers", "1"]);
}

#[test]
fn golden_lrp_gamma() {
    golden(
        "lrp_gamma.csv",
        &["lrp-gamma", "--d", "1", "--alpha", "0.8", "--p", "0.5", "--radii", "1,2,4", "--samples", "1000", "--seed", "2", "--workers", "1"],
    );
}

#[test]
fn golden_estimate_pc() {
    golden(
        "estimate_pc.json",
        &[
            "estimate-pc", "--d", "1", "--alpha", "0.8", "--window", "32", "--n-grid", "2,4,8,16", "--samples", "400",
            "--seed", "3", "--bisection-steps", "4", "--workers", "1",
        ],
    );
}

#[test]
fn golden_green() {
    golden("green.csv", &["green", "--d", "1", "--alpha", "0.8", "--radius", "16", "--steps", "256"]);
}

#[test]
fn golden_progeny() {
    golden("progeny.csv", &["progeny", "--offspring", "0.25,0.5,0.25", "--n-max", "12"]);
}

#[test]
fn golden_enumerate() {
    golden("enumerate.json", &["enumerate", &data("triangle.json")]);
}

#[test]
fn golden_bk_check() {
    golden("bk_check.json", &["bk-check", &data("bk.json")]);
}

#[test]
fn golden_exponents() {
    golden("exponents.json", &["exponents", "--alpha", "0.8"]);
}

#[test]
fn golden_check_beta() {
    golden("check_beta.json", &["check-beta", "--alpha", "3"]);
}

#[test]
fn golden_fit() {
    golden("fit.json", &["fit", &data("r_minus_2.csv")]);
}

#[test]
fn exponents_values() {
    let v = json(&["exponents", "--alpha", "0.8"]);
    assert!((v["rho"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert!((v["xi"].as_f64().unwrap() - 0.2222).abs() < 1e-4);
    assert!((v["beta_lo"].as_f64().unwrap() - 1.375).abs() < 1e-12);
    assert!((v["beta_hi"].as_f64().unwrap() - 2.8125).abs() < 1e-12);
}

#[test]
fn fit_recovers_inverse_square() {
    let v = json(&["fit", &data("r_minus_2.csv")]);
    assert!((v["slope"].as_f64().unwrap() + 2.0).abs() < 1e-12, "{v}");
}

#[test]
fn triangle_connection_is_exact() {
    let v = json(&["enumerate", &data("triangle.json")]);
    let exact = 1.0 - (1.0 - 0.7) * (1.0 - 0.5 * 0.3);
    assert!((v["probability"].as_f64().unwrap() - exact).abs() < 1e-12);
}

#[test]
fn green_decreases_along_axis() {
    let csv = stdout_ok(&["green", "--d", "1", "--alpha", "0.8", "--radius", "64", "--steps", "1024"]);
    let g: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(g.len(), 65);
    assert!(g.windows(2).all(|w| w[1] < w[0]), "{g:?}");
}

#[test]
fn csv_identical_across_worker_counts() {
    let job = data("brw_job.json");
    let one = stdout_ok(&["brw-gamma", "--config", &job, "--workers", "1"]);
    let four = stdout_ok(&["brw-gamma", "--config", &job, "--workers", "4"]);
    assert_eq!(one, four);
    let env = Command::new(env!("CARGO_BIN_EXE_longarm"))
        .args(["brw-gamma", "--config", &job])
        .env("LONGARM_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), one);
    let lrp = ["lrp-gamma", "--d", "2", "--alpha", "0.8", "--p", "0.4", "--radii", "1,2,4", "--samples", "5000", "--seed", "8"];
    let a = stdout_ok(&[&lrp[..], &["--workers", "1"]].concat());
    let b = stdout_ok(&[&lrp[..], &["--workers", "3"]].concat());
    assert_eq!(a, b);
}

#[test]
fn validation_errors_exit_two() {
    let tmp = std::env::temp_dir().join(format!("longarm-zero-{}.json", std::process::id()));
    let text = std::fs::read_to_string(data("brw_job.json")).unwrap().replace("3000", "0");
    std::fs::write(&tmp, text).unwrap();
    let out = longarm(&["brw-gamma", "--config", tmp.to_str().unwrap()]);
    std::fs::remove_file(&tmp).ok();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples must be >= 1"));
    let out = longarm(&["lrp-gamma", "--config", &data("brw_job.json")]);
    assert_eq!(out.status.code(), Some(2));
    let out = longarm(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    let out = longarm(&["green", "--d", "1", "--alpha", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_overrides_flags() {
    let out = stdout_ok(&["brw-gamma", "--config", &data("brw_job.json"), "--samples", "10", "--workers", "1"]);
    assert!(out.lines().nth(1).unwrap().contains(",3000,"), "{out}");
}

#[test]
fn metadata_sidecar() {
    let base = std::env::temp_dir().join(format!("longarm-meta-{}", std::process::id()));
    std::fs::create_dir_all(&base).unwrap();
    let csv = base.join("out.csv");
    let out = longarm(&["brw-gamma", "--config", &data("brw_job.json"), "--workers", "2", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(base.join("out.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "brw-gamma");
    assert_eq!(meta["config"]["seed"], 17);
    assert_eq!(meta["diagnostics"].as_array().unwrap().len(), 4);
    assert!(meta["tool"]["git_describe"].is_string());
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table, stdout_ok(&["brw-gamma", "--config", &data("brw_job.json"), "--workers", "1"]));
    std::fs::remove_dir_all(&base).ok();
}
