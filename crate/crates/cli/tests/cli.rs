use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn aquaforte(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aquaforte")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The report with timings removed, for comparing runs.
fn untimed(mut report: Value) -> Value {
    fn strip(v: &mut Value) {
        match v {
            Value::Object(m) => {
                m.retain(|k, _| !k.ends_with("_s"));
                m.values_mut().for_each(strip);
            }
            Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    strip(&mut report);
    report
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("sat.smt2", "(declare-fun x () Real)\n(assert (> x 1.0))\n(check-sat)\n", Some(10), "sat"),
        ("unsat.smt2", "(declare-fun x () Real)\n(assert (> x x))\n(check-sat)\n", Some(20), "unsat"),
        ("bad.smt2", "(assert (> x 1.0))\n", Some(1), ""),
    ];
    for (name, text, code, first) in cases {
        std::fs::write(dir.path().join(name), text).unwrap();
        let o = aquaforte(&["solve", name, "-q", "--iters", "0", "--budget", "5"], dir.path());
        assert_eq!(o.status.code(), code, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o).lines().next().unwrap_or(""), first, "{name}");
    }
    let o = aquaforte(&["solve", "missing.smt2", "-q"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_unknown_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = "(declare-fun f (Real) Real)\n\
                (assert (forall ((x Real)) (= (f (* 2.0 x)) (* 2.0 x))))\n(check-sat)\n";
    std::fs::write(dir.path().join("hard.smt2"), text).unwrap();
    let o = aquaforte(&["solve", "hard.smt2", "-q", "--iters", "0", "--budget", "1", "--solver", "cvc5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "unknown");
}

#[test]
fn preprocess_writes_components() {
    let dir = tempfile::tempdir().unwrap();
    let text = "(declare-fun f (Real) Real)\n(declare-fun g (Real) Real)\n\
                (assert (and (> (f 1.0) 0.0) (< (g 1.0) 0.0)))\n(assert (> 2.0 1.0))\n(check-sat)\n";
    std::fs::write(dir.path().join("s.smt2"), text).unwrap();
    let o = aquaforte(&["preprocess", "s.smt2", "--out-dir", "out"], dir.path());
    assert!(o.status.success());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/components.json")).unwrap()).unwrap();
    let files: Vec<&str> = manifest.as_array().unwrap().iter().map(|c| c["file"].as_str().unwrap()).collect();
    // the ground assertion folds away, so there is no residue
    assert_eq!(files, ["component-0.smt2", "component-1.smt2"]);
    for f in files {
        assert!(dir.path().join("out").join(f).is_file());
    }
    assert!(dir.path().join("out/rewritten.smt2").is_file());
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = aquaforte(&["generate", "all", "--out", out, "--seed", "3", "--per-cell", "2", "--per-category", "2"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/manifest.json")).unwrap();
    assert_eq!(a, b);
    let m: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(m["instances"].as_array().unwrap().len(), 12 * 2 + 4 * 2);
}

#[test]
fn empty_directory_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let o = aquaforte(&["bench", "empty", "-q", "--report", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["rows"], Value::Array(vec![]));
    assert_eq!(r["errors"], 0);
}

#[test]
fn unparseable_file_is_one_error_row() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("batch");
    std::fs::create_dir(&b).unwrap();
    std::fs::write(b.join("a.smt2"), "(declare-fun x () Real)\n(assert (> x 1.0))\n(check-sat)\n").unwrap();
    std::fs::write(b.join("b.smt2"), "(assert (> (").unwrap();
    std::fs::write(b.join("c.smt2"), "(declare-fun x () Real)\n(assert (> x x))\n(check-sat)\n").unwrap();
    let o = aquaforte(&["bench", "batch", "-q", "--report", "r.json", "--budget", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let rows = r["rows"].as_array().unwrap();
    let got: Vec<(&str, bool)> = rows.iter().map(|r| (r["file"].as_str().unwrap(), r["error"].is_string())).collect();
    assert_eq!(got, [("a.smt2", false), ("b.smt2", true), ("c.smt2", false)]);
    assert_eq!(rows[0]["result"]["verdict"], "sat");
    assert_eq!(rows[2]["result"]["verdict"], "unsat");
    assert_eq!(r["errors"], 1);
    assert!(stdout(&o).contains("b.smt2"));
}

/// Fixtures made from manifest witnesses solve every SOS m = 1 instance
/// through the model path, and a repeat run reports the same rows.
#[test]
fn witness_fixtures_solve_sos_batch() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let gen = ["generate", "sos", "--out", "suite", "--seed", "11", "--ns", "2", "--ms", "1", "--per-cell", "10"];
    assert!(aquaforte(&gen, p).status.success());
    let o = aquaforte(&["record", "--from-witnesses", "suite/manifest.json", "--out", "fx.json"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut reports = Vec::new();
    for name in ["r1.json", "r2.json"] {
        let o = aquaforte(&["bench", "suite", "-q", "--replay", "fx.json", "--report", name, "--jobs", "2"], p);
        assert_eq!(o.status.code(), Some(0));
        let r: Value = serde_json::from_str(&std::fs::read_to_string(p.join(name)).unwrap()).unwrap();
        reports.push(r);
    }
    let rows = reports[0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    for row in rows {
        assert_eq!(row["result"]["verdict"], "sat", "{row}");
        assert_eq!(row["result"]["provenance"], "llm_instantiated", "{row}");
        assert!(row["flags"].as_array().unwrap().is_empty());
    }
    assert_eq!(reports[0]["pipeline"]["all"]["sat"], 10);
    assert_eq!(untimed(reports[0].clone()), untimed(reports[1].clone()));
}

#[test]
fn comparison_mode_reports_both_runs() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("batch");
    std::fs::create_dir(&b).unwrap();
    std::fs::write(b.join("a.smt2"), "(declare-fun x () Real)\n(assert (> x 1.0))\n(check-sat)\n").unwrap();
    let o = aquaforte(&["bench", "batch", "-q", "--compare", "--report", "r.json", "--budget", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["rows"][0]["baseline"]["verdict"], "sat");
    assert_eq!(r["baseline"]["all"]["sat"], 1);
    let table = stdout(&o);
    assert!(table.contains("baseline"));
    assert!(table.lines().any(|l| l.starts_with("pipeline")));
}

#[test]
fn manifest_disagreement_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("a.smt2"), "(declare-fun x () Real)\n(assert (> x x))\n(check-sat)\n").unwrap();
    let manifest = r#"{"instances": [{"file": "a.smt2", "family": "demo", "params": {}, "expected": "sat", "seed": 0}]}"#;
    std::fs::write(p.join("m.json"), manifest).unwrap();
    let o = aquaforte(&["bench", "m.json", "--report", "r.json", "--budget", "5"], p);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    assert_eq!(r["flagged"], 1);
    assert!(stdout(&o).contains("!! expected sat, got unsat"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MISMATCH"));
}

#[test]
fn json_log_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.smt2"), "(declare-fun x () Real)\n(assert (> x 1.0))\n(check-sat)\n").unwrap();
    let o = aquaforte(&["solve", "s.smt2", "--iters", "0", "--log-json", "log.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(10));
    let log = std::fs::read_to_string(dir.path().join("log.jsonl")).unwrap();
    let last: Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(last["fields"]["verdict"], "sat");
}
