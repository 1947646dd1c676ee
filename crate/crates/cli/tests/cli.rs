use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

struct Run {
    code: i32,
    report: Value,
    raw: String,
    stderr: String,
}

fn run(dir: &TempDir, args: &[&str], input: &Path) -> Run {
    run_env(dir, args, input, &[])
}

fn run_env(dir: &TempDir, args: &[&str], input: &Path, env: &[(&str, &str)]) -> Run {
    let out = dir.path().join("report.json");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_epsk1"));
    cmd.args(args).arg("--input").arg(input).arg("--output").arg(&out).env_remove("EPSK1_CAP");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let o = cmd.output().expect("spawn epsk1");
    let raw = std::fs::read_to_string(&out).expect("report written");
    Run {
        code: o.status.code().unwrap(),
        report: serde_json::from_str(&raw).expect("report is JSON"),
        raw,
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const FLAGSHIP_JSON: &str = r#"{"tower": {"l": 13, "d0": 1, "p": 3, "s": 2, "n": 1, "e": 4, "m_delta": 1}}"#;

#[test]
fn flagship_tower_verifies() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["tower-verify"], &examples().join("flagship_tower.toml"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["passed"], true);
    let towers = r.report["result"].as_array().unwrap();
    assert_eq!(towers.len(), 2);
    for t in towers {
        assert_eq!(t["passed"], true);
        assert_eq!(t["levels"].as_array().unwrap().len(), 2);
        assert!(t["conditions"]["m3_additive"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    }
    assert_eq!(r.report["tool"], "epsk1");
    assert_eq!(r.report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r.report["input"]["tower"]["e"], 4);
}

#[test]
fn trivial_datum_gives_minus_one() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["eps-abelian"], &examples().join("trivial_datum.json"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["result"]["element"]["text"], "-1");
    assert_eq!(r.report["input_format"], "json");
}

#[test]
fn malformed_spec_names_the_invariant() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["tower-verify"], &examples().join("malformed_tower.toml"));
    assert_eq!(r.code, 2);
    let msg = r.report["error"]["message"].as_str().unwrap();
    assert!(msg.contains("e^(p^n)") && msg.contains("mod p^s"), "{msg}");
    assert!(r.stderr.contains("e^(p^n)"));
}

#[test]
fn unknown_field_is_a_schema_violation() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", r#"{"tower": {"l": 13, "d0": 1, "p": 3, "s": 2, "n": 1, "e": 4, "m_delta": 1, "q": 0}}"#);
    let r = run(&dir, &["tower-verify"], &p);
    assert_eq!(r.code, 2);
    assert_eq!(r.report["error"]["kind"], "schema");
}

#[test]
fn reports_are_byte_identical_and_format_independent() {
    let dir = TempDir::new().unwrap();
    let a = run(&dir, &["tower-verify", "--seed", "5"], &examples().join("flagship_tower.toml"));
    let b = run(&dir, &["tower-verify", "--seed", "5"], &examples().join("flagship_tower.toml"));
    assert_eq!(a.raw, b.raw);
    let json = write(&dir, "flagship.json", FLAGSHIP_JSON);
    let c = run(&dir, &["tower-verify", "--seed", "5"], &json);
    assert_eq!(a.report["result"], c.report["result"]);
    assert_eq!(a.report["input"], c.report["input"]);
}

#[test]
fn synthetic_data_follow_the_seed() {
    let dir = TempDir::new().unwrap();
    let input = examples().join("synthetic.toml");
    let a = run(&dir, &["eps-abelian", "--seed", "1"], &input);
    let b = run(&dir, &["eps-abelian", "--seed", "1"], &input);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.raw, b.raw);
}

#[test]
fn resource_cap_from_environment() {
    let dir = TempDir::new().unwrap();
    let r = run_env(&dir, &["tower-verify"], &examples().join("flagship_tower.toml"), &[("EPSK1_CAP", "100")]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert_eq!(r.report["options"]["cap"], 100);
    assert_eq!(r.report["error"]["kind"], "resource");
    let r = run_env(&dir, &["tower-verify", "--cap", "100000"], &examples().join("flagship_tower.toml"), &[("EPSK1_CAP", "100")]);
    assert_eq!(r.code, 0);
}

#[test]
fn check_selection_limits_conditions() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["tower-verify", "--check", "m1"], &examples().join("flagship_tower.toml"));
    assert_eq!(r.code, 0);
    let t = &r.report["result"][0]["conditions"];
    assert!(!t["m1"].as_array().unwrap().is_empty());
    assert!(t["m2"].as_array().unwrap().is_empty());
    assert!(t["m3_additive"].as_array().unwrap().is_empty());
}

#[test]
fn literal_sign_fails_at_p2() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "p2.toml",
        "sign = \"literal\"\n[tower]\nl = 3\nd0 = 1\np = 2\ns = 2\nn = 1\ne = 3\nm_delta = 1\n",
    );
    let r = run(&dir, &["tower-verify"], &p);
    assert_eq!(r.code, 1);
    assert_eq!(r.report["passed"], false);
    let r = run(&dir, &["tower-verify"], &examples().join("p2_tower.toml"));
    assert_eq!(r.code, 0);
}

#[test]
fn gauss_sums_satisfy_the_functional_equation() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["gauss-sum"], &examples().join("legendre.toml"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let chars = r.report["result"]["characters"].as_array().unwrap();
    assert_eq!(chars.len(), 2);
    // trivial character: -chi(pi) = -1; sign character: z3 - z3^2 = 1 + 2 z3 in the basis {1, z3}
    assert_eq!(chars[0]["value"], "-1");
    assert_eq!(chars[1]["value"], "1 + 2*z3");
    assert_eq!(chars[1]["functional_equation"], true);
}

#[test]
fn property_suite_passes_on_synthetic_data() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["property-suite"], &examples().join("synthetic.toml"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["result"]["laws"]["frobenius"]["passed"], true);
}

#[test]
fn beta_check_explicit_and_random() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["beta-check", "--seed", "3"], &examples().join("beta_flagship.toml"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["result"]["elements"].as_array().unwrap().len(), 5);
    let p = write(&dir, "beta.json", r#"{"l": 13, "group": {"p": 3, "s": 2, "n": 1, "e": 4}, "elements": [[[0, 1], [2, -3]]]}"#);
    let r = run(&dir, &["beta-check"], &p);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let p = write(&dir, "beta_bad.json", r#"{"l": 13, "group": {"p": 3, "s": 2, "n": 1, "e": 4}, "elements": [[[999, 1]]]}"#);
    assert_eq!(run(&dir, &["beta-check"], &p).code, 2);
}

#[test]
fn integral_log_forms() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, &["integral-log", "--precision", "4"], &examples().join("flagship_tower.toml"));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.report["result"]["precision"], 4);
    let r = run(&dir, &["integral-log"], &examples().join("p2_tower.toml"));
    assert_eq!(r.code, 1);
    let p = write(
        &dir,
        "p2_oliver.toml",
        "form = \"oliver\"\n[tower]\nl = 3\nd0 = 1\np = 2\ns = 2\nn = 1\ne = 3\nm_delta = 1\n",
    );
    assert_eq!(run(&dir, &["integral-log"], &p).code, 0);
}
