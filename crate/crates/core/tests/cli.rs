mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cf"))
        .current_dir(dir)
        .env_remove("CF_SEED")
        .args(args)
        .output()
        .expect("cf runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn gen(dir: &TempDir, family: &str, n: &str, name: &str) {
    let out = cf(dir.path(), &["gen", family, "-n", n, "--out", name]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn reduce(dir: &TempDir, input: &str, output: &str) -> Output {
    cf(
        dir.path(),
        &[
            "transform",
            input,
            "--pass",
            "homogenize,normalize,balance,depth4",
            "--out",
            output,
        ],
    )
}

#[test]
fn stats_counts_example_parse_trees() {
    let dir = TempDir::new().unwrap();
    write(&dir, "ex.ckt", common::EXAMPLE);
    let out = cf(dir.path(), &["stats", "ex.ckt"]);
    assert!(out.status.success());
    let v = &lines(&out)[0];
    assert_eq!(v["parse_trees"], "6");
    assert_eq!(v["stats"]["degree"], 2);
    assert_eq!(v["stats"]["vars"], 3);
}

#[test]
fn stats_of_generated_permanent() {
    let dir = TempDir::new().unwrap();
    gen(&dir, "perm", "2", "p2.ckt");
    let out = cf(dir.path(), &["stats", "p2.ckt"]);
    assert!(out.status.success());
    let s = &lines(&out)[0]["stats"];
    assert_eq!(s["degree"], 2);
    assert_eq!(s["vars"], 4);
    assert_eq!(s["homogeneous"], true);
}

#[test]
fn malformed_line_is_reported() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "bad.ckt",
        "input x 0\ninput y 1\nmul m x q\noutput m\n",
    );
    let out = cf(dir.path(), &["stats", "bad.ckt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn transform_reduces_permanent_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    gen(&dir, "perm", "3", "p3.ckt");
    let first = reduce(&dir, "p3.ckt", "p3d4.ckt");
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let reports = lines(&first);
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r["ok"] == true));
    let c4 = fs::read_to_string(dir.path().join("p3d4.ckt")).unwrap();

    let second = reduce(&dir, "p3.ckt", "p3d4.ckt");
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(fs::read_to_string(dir.path().join("p3d4.ckt")).unwrap(), c4);

    let check = cf(dir.path(), &["verify", "p3.ckt", "p3d4.ckt"]);
    assert!(check.status.success());
    assert_eq!(lines(&check)[0]["equivalence"]["method"], "exact");

    let bounds = cf(dir.path(), &["bounds", "p3d4.ckt", "--target", "perm"]);
    assert!(
        bounds.status.success(),
        "{}",
        String::from_utf8_lossy(&bounds.stderr)
    );
    let certs: Vec<Value> = lines(&bounds)
        .into_iter()
        .filter(|l| l["kind"] == "lower_bound" || l["kind"] == "structural")
        .collect();
    assert!(!certs.is_empty());
    assert!(certs.iter().all(|c| c["certificate"]["satisfied"] == true));
}

#[test]
fn transform_rejects_zero_split_parameter() {
    let dir = TempDir::new().unwrap();
    gen(&dir, "perm", "3", "p3.ckt");
    let out = cf(
        dir.path(),
        &["transform", "p3.ckt", "--a", "0", "--out", "never.ckt"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!dir.path().join("never.ckt").exists());
}

#[test]
fn verify_compares_circuits() {
    let dir = TempDir::new().unwrap();
    gen(&dir, "perm", "2", "p2.ckt");
    gen(&dir, "det", "2", "d2.ckt");
    let same = cf(dir.path(), &["verify", "p2.ckt", "p2.ckt"]);
    assert!(same.status.success());
    let v = &lines(&same)[0]["equivalence"];
    assert_eq!(v["equal"], true);
    assert_eq!(v["method"], "exact");

    let diff = cf(dir.path(), &["verify", "p2.ckt", "d2.ckt"]);
    assert_eq!(diff.status.code(), Some(1));
    let v = &lines(&diff)[0]["equivalence"];
    assert_eq!(v["equal"], false);
    let point: Vec<u64> = serde_json::from_value(v["failure_point"].clone()).unwrap();
    // perm2 - det2 = 2·x1·x2
    assert!(point[1] != 0 && point[2] != 0);
}

#[test]
fn bounds_rejects_non_layered_circuit() {
    let dir = TempDir::new().unwrap();
    gen(&dir, "perm", "2", "p2.ckt");
    let out = cf(dir.path(), &["bounds", "p2.ckt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("structural"));
}

#[test]
fn bounds_for_single_variable_has_trivial_rhs() {
    let dir = TempDir::new().unwrap();
    gen(&dir, "perm", "1", "p1.ckt");
    let red = reduce(&dir, "p1.ckt", "p1d4.ckt");
    assert!(
        red.status.success(),
        "{}",
        String::from_utf8_lossy(&red.stderr)
    );
    let out = cf(dir.path(), &["bounds", "p1d4.ckt", "--n", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let first = lines(&out)
        .into_iter()
        .find(|l| l["kind"] == "lower_bound")
        .unwrap();
    assert_eq!(first["certificate"]["rhs"], "0");
    assert_eq!(first["certificate"]["satisfied"], true);
}

#[test]
fn parse_trees_lists_monomials() {
    let dir = TempDir::new().unwrap();
    write(&dir, "ex.ckt", common::EXAMPLE);
    let out = cf(dir.path(), &["parse-trees", "ex.ckt", "--list", "10"]);
    assert!(out.status.success());
    let l = lines(&out);
    assert_eq!(l[0]["count"], "6");
    assert_eq!(l.len(), 7);
}

#[test]
fn seed_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cf"));
        cmd.current_dir(dir.path())
            .args(["gen", "random", "-n", "3", "--gates", "10"]);
        match seed {
            Some(s) => cmd.env("CF_SEED", s),
            None => cmd.env_remove("CF_SEED"),
        };
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("7")), run(Some("7")));
    assert_eq!(run(None), run(None));
    let explicit = cf(
        dir.path(),
        &["--seed", "7", "gen", "random", "-n", "3", "--gates", "10"],
    );
    assert_eq!(explicit.stdout, run(Some("7")));
}
