use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn dibi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dibi")).args(args).output().expect("runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

const CI_FORMULA: &str = "<{} |> {z}> ; (<{z} |> {x, z}> * <{z} |> {y, z}>)";

#[test]
fn ci_on_the_coin_state() {
    let o = dibi(&["ci", &fixture("ex62.json"), "h", "--w", "z", "--x", "x", "--y", "y", "--flavor", "dibi"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "true\n");
    let o = dibi(&["ci", &fixture("ex62.json"), "h_xor", "--w", "z", "--x", "x", "--y", "y"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o), "false\n");
}

#[test]
fn every_flavor_on_the_coin_state() {
    for flavor in ["dibi", "plain", "markov", "superset", "ext-superset"] {
        let o = dibi(&["--format", "json", "ci", &fixture("ex62.json"), "h", "--w", "z", "--x", "x", "--y", "y", "--flavor", flavor]);
        assert_eq!(code(&o), 0, "{flavor}");
        let v = json(&o);
        assert_eq!(v["independent"], true);
        assert_eq!(v["query"]["flavor"], flavor);
    }
}

#[test]
fn check_top_and_the_independence_formula() {
    let o = dibi(&["check", &fixture("ex35.json"), "f", "top"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "true\n"));
    let o = dibi(&["check", &fixture("ex62.json"), "h", CI_FORMULA]);
    assert_eq!(code(&o), 0);
    let o = dibi(&["--format", "json", "check", &fixture("ex62.json"), "h_xor", CI_FORMULA]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["satisfied"], false);
    let o = dibi(&["check", "--mode", "bounded", &fixture("ex62.json"), "h", CI_FORMULA]);
    assert_eq!(code(&o), 0);
}

#[test]
fn gauss_fixture() {
    let f = fixture("gauss.json");
    assert_eq!(code(&dibi(&["ci", &f, "s", "--w", "w", "--x", "x", "--y", "y", "--flavor", "markov"])), 0);
    assert_eq!(code(&dibi(&["ci", &f, "s", "--x", "x", "--y", "y", "--u", "w", "--flavor", "markov"])), 1);
    assert_eq!(code(&dibi(&["ci", &f, "s", "--w", "w", "--x", "x", "--y", "y", "--flavor", "superset"])), 69);
}

#[test]
fn separating_fixture() {
    let f = fixture("ex67.json");
    let run = |flavor: &str| code(&dibi(&["ci", &f, "s", "--w", "w", "--x", "x", "--y", "y", "--u", "u", "--flavor", flavor]));
    assert_eq!(run("dibi"), 0);
    assert_eq!(run("superset"), 1);
    assert_eq!(run("ext-superset"), 0);
}

#[test]
fn synvar_equality() {
    let f = fixture("ex67.json");
    assert_eq!(code(&dibi(&["synvar-eq", &f, "fork", "fork_swapped"])), 0);
    assert_eq!(code(&dibi(&["synvar-eq", &f, "fork", "chain"])), 1);
    assert_eq!(code(&dibi(&["synvar-eq", &f, "s", "s"])), 0);
    assert_eq!(code(&dibi(&["synvar-eq", &f, "fork", "missing"])), 65);
    assert_eq!(code(&dibi(&["synvar-eq", &fixture("ex35.json"), "f", "f"])), 65);
}

#[test]
fn compose_reproduces_the_product_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.json");
    let o = dibi(&["compose", &fixture("ex35.json"), "g1", "par", "g2", "-o", out.to_str().unwrap(), "--name", "f"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let shipped: Value = serde_json::from_str(&std::fs::read_to_string(fixture("ex35.json")).unwrap()).unwrap();
    let weights = |v: &Value| -> Vec<String> {
        let mut w: Vec<String> = v["kernels"]["f"]["rows"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|r| r["outcomes"].as_array().unwrap().iter().map(|o| format!("{}{}{}", r["given"], o["values"], o["p"])))
            .collect();
        w.sort();
        w
    };
    assert_eq!(weights(&written), weights(&shipped));
    let o = dibi(&["compose", &fixture("ex35.json"), "g1", "par", "f", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn frames_on_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("assoc.json");
    let write = |tol: &str| {
        let text = format!(
            r#"{{
  "instance": "gauss", "default_dimension": 1, "tolerance": {tol}, "condition": "seq-assoc",
  "kernels": {{
    "a": {{ "dom": [], "cod": ["x"], "cov": [[0.1]], "mean": [0.3] }},
    "b": {{ "dom": ["x"], "cod": ["x", "y"], "m": [[0.3]], "cov": [[0.7]], "mean": [0.1] }},
    "c": {{ "dom": ["x", "y"], "cod": ["x", "y", "z"], "m": [[0.1, 0.7]], "cov": [[0.3]], "mean": [0.7] }}
  }}
}}"#
        );
        std::fs::write(&path, text).unwrap();
    };
    write("1e-9");
    let o = dibi(&["--format", "json", "frames", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["results"][0]["outcome"], "pass");
    write("0.0");
    let o = dibi(&["--format", "json", "frames", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["results"][0]["condition"], "seq-assoc");
    let o = dibi(&["frames", &fixture("ex35.json")]);
    assert_eq!(code(&o), 65);
}

#[test]
fn frames_random_suite() {
    let o = dibi(&["--format", "json", "frames", "--random", "--seed", "7", "--trials", "200"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["ok"], true);
    assert_eq!(v["total"], 24);
    let rows = v["conditions"].as_array().unwrap();
    for inst in ["finstoch", "finrel"] {
        let mine: Vec<&Value> = rows.iter().filter(|r| r["instance"] == inst).collect();
        assert_eq!(mine.len(), 12);
        for r in mine {
            assert_eq!(r["trials"], 200);
            assert_eq!(r["failed"], 0);
            assert_eq!(r["passed"].as_u64().unwrap() + r["vacuous"].as_u64().unwrap(), 200);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let args = ["--format", "json", "frames", "--random", "--seed", "3", "--trials", "20", "--instance", "finrel"];
    assert_eq!(stdout(&dibi(&args)), stdout(&dibi(&args)));
    let args = ["--format", "json", "harness", "--seed", "5", "--trials", "20"];
    let (a, b) = (dibi(&args), dibi(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn harness_text_report() {
    let o = dibi(&["harness", "--seed", "1", "--trials", "30"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("markov-iff-dibi"));
    assert!(text.contains("separating-diagram"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn exit_codes_for_errors() {
    assert_eq!(code(&dibi(&[])), 64);
    assert_eq!(code(&dibi(&["ci", &fixture("ex62.json"), "h", "--flavor", "nope"])), 64);
    assert_eq!(code(&dibi(&["frames", "--random", "extra.json"])), 64);
    assert_eq!(code(&dibi(&["check", "/nonexistent/file.json", "f", "top"])), 65);
    assert_eq!(code(&dibi(&["check", &fixture("ex35.json"), "f", "<{z} |>"])), 65);
    assert_eq!(code(&dibi(&["check", &fixture("ex35.json"), "nope", "top"])), 65);
    assert_eq!(code(&dibi(&["ci", &fixture("ex62.json"), "h", "--w", "z", "--x", "x,z", "--y", "y"])), 2);
    let o = dibi(&["--format", "json", "ci", &fixture("ex62.json"), "h", "--w", "q", "--x", "x", "--y", "y"]);
    assert_eq!(code(&o), 2);
    assert!(json(&o)["error"].is_string());
    assert_eq!(code(&dibi(&["--help"])), 0);
}

#[test]
fn finrel_refuses_satisfaction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rel.json");
    let text = r#"{
  "instance": "finrel", "default_alphabet": ["0", "1"],
  "kernels": { "r": { "dom": [], "cod": ["x"], "rows": [ { "outcomes": [ { "values": { "x": "0" } }, { "values": { "x": "1" } } ] } ] } }
}"#;
    std::fs::write(&path, text).unwrap();
    assert_eq!(code(&dibi(&["check", path.to_str().unwrap(), "r", "top"])), 69);
    assert_eq!(code(&dibi(&["ci", path.to_str().unwrap(), "r", "--x", "x", "--flavor", "markov"])), 0);
    assert_eq!(code(&dibi(&["ci", path.to_str().unwrap(), "r", "--x", "x", "--flavor", "dibi"])), 69);
}
