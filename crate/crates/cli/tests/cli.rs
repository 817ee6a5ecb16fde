use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normdeflate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const OP: &str = r#"{"rows":2,"cols":3,"data":[1,2,0,0,1,-1],
  "source":{"kind":"lp","p":1.0,"d":3},"target":{"kind":"lp","p":3.0,"d":2}}"#;

#[test]
fn decompose_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("op.json"), OP).unwrap();
    let out = run(&["decompose", "op.json", "--seed", "5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dec = json(&out);
    assert_eq!(dec["steps"].as_array().unwrap().len(), 2);
    assert_eq!(dec["kernel_basis"].as_array().unwrap().len(), 1);
    std::fs::write(dir.path().join("dec.json"), &out.stdout).unwrap();
    let v = run(&["verify", "dec.json", "op.json"], dir.path());
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(json(&v)["all_pass"], Value::Bool(true));
}

#[test]
fn output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("op.json"), OP).unwrap();
    let a = run(&["decompose", "op.json", "--seed", "11"], dir.path());
    let b = run(&["decompose", "op.json", "--seed", "11"], dir.path());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tampered_decomposition_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("op.json"), OP).unwrap();
    let out = run(&["decompose", "op.json"], dir.path());
    let mut dec = json(&out);
    // ξ₁ += 0.1·f₂
    for i in 0..3 {
        let v = dec["xi"][0][i].as_f64().unwrap() + 0.1 * dec["steps"][1]["f"][i].as_f64().unwrap();
        dec["xi"][0][i] = Value::from(v);
    }
    std::fs::write(dir.path().join("bad.json"), dec.to_string()).unwrap();
    let v = run(&["verify", "bad.json", "op.json"], dir.path());
    assert_eq!(v.status.code(), Some(1));
    assert_eq!(json(&v)["all_pass"], Value::Bool(false));
}

#[test]
fn example_reports_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["example", "--k", "1", "--alpha", "0.1,0.4,0.2,0.3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let order: Vec<u64> = v["ground_truth"]["order"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    assert_eq!(order, [2, 4, 3, 1]);
    for (s, want) in v["decomposition"]["steps"].as_array().unwrap().iter().zip([0.4, 0.3, 0.2, 0.1]) {
        assert!((s["lambda"].as_f64().unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn example_with_random_alpha_and_negative_entries() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["example", "--d", "5", "--k", "2", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["example", "--k", "1", "--alpha", "-0.5,0.25"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["decomposition"]["steps"][0]["lambda"].as_f64().unwrap() + 0.5).abs() < 1e-12);
}

#[test]
fn norm_reports_oracle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("op.json"), OP).unwrap();
    let v = json(&run(&["norm", "op.json"], dir.path()));
    let (p, o) = (v["value"].as_f64().unwrap(), v["oracle"].as_f64().unwrap());
    assert!((p - o).abs() <= 1e-9 * o);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("op.json"), OP).unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"restarts": 2, "seed": 9}"#).unwrap();
    let out = run(&["decompose", "op.json", "--config", "cfg.json", "--restarts", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let power = &json(&out)["config"]["power"];
    assert_eq!(power["restarts"], 3);
    assert_eq!(power["seed"], 9);
    std::fs::write(dir.path().join("bad.json"), r#"{"restarts": 2, "bogus": 1}"#).unwrap();
    assert_eq!(run(&["decompose", "op.json", "--config", "bad.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["decompose", "missing.json"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("short.json"), OP.replace("0,1,-1", "0,1")).unwrap();
    let out = run(&["decompose", "short.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
    std::fs::write(dir.path().join("op.json"), OP).unwrap();
    assert_eq!(run(&["decompose", "op.json", "--eigen"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["example", "--k", "1", "--d", "3", "--alpha", "1,2"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["bogus"], dir.path()).status.code(), Some(2));
}

#[test]
fn outside_eigen_class_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let op = r#"{"rows":2,"cols":2,"data":[0,1,0,0],
      "source":{"kind":"lp","p":2.0,"d":2},"target":{"kind":"lp","p":2.0,"d":2}}"#;
    std::fs::write(dir.path().join("op.json"), op).unwrap();
    assert_eq!(run(&["decompose", "op.json", "--eigen"], dir.path()).status.code(), Some(3));
}

#[test]
fn mixed_example_file_gives_coordinate_functionals() {
    let dir = tempfile::tempdir().unwrap();
    let op = r#"{"rows":6,"cols":6,
      "data":[0.5,0,0,0,0,0, 0,1,0,0,0,0, 0,0,0.25,0,0,0, 0,0,0,0.8,0,0, 0,0,0,0,0.1,0, 0,0,0,0,0,0.05],
      "source":{"kind":"mixed_k1","k":2,"d":6},"target":{"kind":"mixed_k1","k":2,"d":6}}"#;
    std::fs::write(dir.path().join("op.json"), op).unwrap();
    let out = run(&["decompose", "op.json", "--eigen"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dec = json(&out);
    for (j, n) in [1usize, 3, 0, 2, 4, 5].into_iter().enumerate() {
        for i in 0..6 {
            let want = if i == n { 1.0 } else { 0.0 };
            assert!((dec["xi"][j][i].as_f64().unwrap() - want).abs() < 1e-8);
        }
    }
}

#[test]
fn example_ties_and_zero_entries() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(&["example", "--k", "1", "--alpha", "1,1"], dir.path()));
    assert_eq!(v["ground_truth"]["order"], serde_json::json!([1, 2]));
    assert!((v["decomposition"]["steps"][0]["x"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let v = json(&run(&["example", "--k", "1", "--alpha", "0.5,0,0.25"], dir.path()));
    assert_eq!(v["decomposition"]["steps"].as_array().unwrap().len(), 2);
    assert_eq!(v["decomposition"]["kernel_basis"].as_array().unwrap().len(), 1);
}

#[test]
fn dimension_mismatch_between_files_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("op.json"), OP).unwrap();
    let out = run(&["decompose", "op.json"], dir.path());
    std::fs::write(dir.path().join("dec.json"), &out.stdout).unwrap();
    let other = r#"{"rows":2,"cols":2,"data":[1,0,0,1],
      "source":{"kind":"lp","p":2.0,"d":2},"target":{"kind":"lp","p":2.0,"d":2}}"#;
    std::fs::write(dir.path().join("other.json"), other).unwrap();
    assert_eq!(run(&["verify", "dec.json", "other.json"], dir.path()).status.code(), Some(2));
}
