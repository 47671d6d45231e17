//! End-to-end runs of the `bcst` binary, checking output and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const QD: &str = r#"
version = 1
kind = "qd"
pair_basis = "bell"
indices = [1, 2]

[controller]
family = "computational"
qubits = 1
"#;

fn bcst() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bcst"));
    cmd.env_remove("BCST_TOLERANCE");
    cmd
}

fn run(args: &[&str]) -> Output {
    bcst().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn export(dir: &TempDir, id: &str) -> PathBuf {
    let path = dir.path().join(format!("{id}.toml"));
    let out = run(&["catalog", "--export", id, "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_writes_one_row_per_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let spec = export(&dir, "zha5");
    let out = run(&["build", s(&spec)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 32);
    let nonzero = rows
        .iter()
        .filter(|r| r.split_whitespace().skip(1).any(|x| x.parse::<f64>().unwrap() != 0.0))
        .count();
    assert_eq!(nonzero, 4);
}

#[test]
fn rule_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (id, rule) in [("li5", "Rule 1"), ("cqsdc5", "Rule 1"), ("six4b", "Rule 2")] {
        let out = run(&["build", s(&export(&dir, id))]);
        assert_eq!(code(&out), 2, "{id}");
        assert!(stderr(&out).contains(rule), "{id}: {}", stderr(&out));
    }
}

#[test]
fn parse_errors_exit_1_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "version = 1\nkind = \"bcst\"\npair_basis = [\n").unwrap();
    let out = run(&["build", s(&path)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
    assert_eq!(code(&run(&["build", "/nonexistent/spec.toml"])), 1);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&["census", "2"])), 1);
    assert_eq!(code(&run(&["census", "2", "3", "--oracle", "--formula"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn census_reports_and_flags_intractable_counts() {
    let out = run(&["census", "2", "2"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("MATCH"));
    let out = run(&["census", "2", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("3648") && stdout(&out).contains("WARN"));
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&["census", "2", "4", "--json"]))).unwrap();
    assert_eq!(json["formula_value"], "63744");
    assert_eq!(code(&run(&["census", "3", "8", "--oracle"])), 3);
    assert_eq!(code(&run(&["census", "3", "8", "--formula"])), 0);
}

#[test]
fn simulate_reports_fidelities_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = export(&dir, "zha5");
    let transcript = dir.path().join("t.jsonl");
    let out = run(&[
        "simulate",
        s(&spec),
        "--seed",
        "3",
        "--trials",
        "4",
        "--transcript",
        s(&transcript),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("transcript sha256: "));
    let lines: Vec<serde_json::Value> = fs::read_to_string(&transcript)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 4);
    for l in &lines {
        assert_eq!(l["seed"], 3);
        assert!(l["fidelity_alice_to_bob"].as_f64().unwrap() > 1.0 - 1e-9);
    }
}

#[test]
fn simulate_accepts_named_and_numeric_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = export(&dir, "six3");
    let out = run(&[
        "simulate",
        s(&spec),
        "--alice-state",
        "+i",
        "--bob-state",
        "0.6,0;0,0.8",
        "--trials",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["simulate", s(&spec), "--alice-state", "1,0;1,0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_rejects_dialogue_specs_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qd.toml");
    fs::write(&path, QD).unwrap();
    assert_eq!(code(&run(&["build", s(&path)])), 0);
    assert_eq!(code(&run(&["simulate", s(&path)])), 4);
}

#[test]
fn one_sided_control_fails_the_requirement() {
    let dir = tempfile::tempdir().unwrap();
    let spec = export(&dir, "li5");
    let out = run(&["simulate", s(&spec), "--trials", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("first-only"));
    assert_eq!(code(&run(&["simulate", s(&spec), "--require-both-controlled"])), 5);
    let zha = export(&dir, "zha5");
    assert_eq!(code(&run(&["simulate", s(&zha), "--require-both-controlled"])), 0);
}

#[test]
fn catalog_verify_lists_every_entry() {
    let out = run(&["catalog", "--verify"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    for id in [
        "zha5", "zha_ii5", "li5", "cqsdc5", "six1", "six3", "six4a", "six4b", "seven",
    ] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id}");
    }
    assert!(text
        .lines()
        .find(|l| l.starts_with("six4b"))
        .unwrap()
        .contains("RULE-VIOLATION"));
    assert!(!text.contains("FAIL"));
    assert_eq!(code(&run(&["catalog", "--export", "nine"])), 1);
    assert_eq!(code(&run(&["catalog"])), 1);
}

#[test]
fn recognize_round_trips_and_reports_misses() {
    let dir = tempfile::tempdir().unwrap();
    let spec = export(&dir, "six4a");
    let amps = dir.path().join("six4a.amp");
    assert_eq!(code(&run(&["build", s(&spec), "-o", s(&amps)])), 0);

    let out = run(&["recognize", s(&amps)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = dir.path().join("found.toml");
    fs::write(&doc, stdout(&out)).unwrap();
    let rebuilt = run(&["build", s(&doc)]);
    assert_eq!(stdout(&rebuilt), fs::read_to_string(&amps).unwrap());

    let out = run(&["recognize", s(&amps), "--layout", "C1,A1,B1,A2,B2,C2"]);
    assert_eq!(code(&out), 6);
    assert!(stdout(&out).contains("NOT-RECOGNIZED"));
    assert_eq!(code(&run(&["recognize", s(&amps), "--layout", "A1,B1,A2,B2,C1"])), 1);
}

#[test]
fn recognize_honours_the_tolerance_override() {
    let dir = tempfile::tempdir().unwrap();
    let spec = export(&dir, "zha5");
    let amps = dir.path().join("zha5.amp");
    assert_eq!(code(&run(&["build", s(&spec), "-o", s(&amps)])), 0);
    let text = fs::read_to_string(&amps).unwrap();
    let first = text.lines().find(|l| l.starts_with("0 ")).unwrap();
    let skewed = text.replacen(first, "0 5.0000001e-1 0.0000000000000000e0", 1);
    fs::write(&amps, skewed).unwrap();
    assert_eq!(code(&run(&["recognize", s(&amps)])), 1);
    // the file now loads, but sits too far from an exact decomposition
    let out = bcst()
        .env("BCST_TOLERANCE", "1e-6")
        .args(["recognize", s(&amps)])
        .output()
        .unwrap();
    assert_eq!(code(&out), 6, "{}", stderr(&out));
    let out = bcst()
        .env("BCST_TOLERANCE", "zero")
        .args(["recognize", s(&amps)])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}
