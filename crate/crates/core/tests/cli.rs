use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn arbor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arbor")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn temp_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("arbor-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn trim_reports_stages_and_status() {
    let p5 = temp_file("p5.txt", "0 1\n1 2\n2 3\n3 4\n");
    let out = arbor(&["trim", "--input", p5.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["stages"], serde_json::json!([5, 3, 1]));
    assert_eq!(doc["status"], "stabilized");

    let k2 = temp_file("k2.txt", "0 1\n");
    let doc = json(&arbor(&["trim", "--input", k2.to_str().unwrap()]));
    assert_eq!(doc["stages"], serde_json::json!([2, 0]));
    assert_eq!(doc["status"], "extinct");

    let out = arbor(&["--format", "text", "trim", "--fixture", "staircase_n(2)", "--radius", "8", "--steps", "10"]);
    assert!(stdout(&out).contains("periodic within radius, period 2"), "{}", stdout(&out));

    let out = arbor(&["--format", "csv", "trim", "--input", p5.to_str().unwrap()]);
    assert_eq!(stdout(&out), "step,vertices\n0,5\n1,3\n2,1\n");
}

#[test]
fn cheeger_values() {
    let doc = json(&arbor(&["cheeger", "--fixture", "regular(3)"]));
    let value: arbor::Ratio = doc["result"]["value"].as_str().unwrap().parse().unwrap();
    assert!(value >= arbor::Ratio::new(1, 2));
    assert!(!doc["result"]["argmin"]["members"].as_array().unwrap().is_empty());

    for m in [4, 6, 10] {
        let doc = json(&arbor(&["cheeger", "--fixture", "regular(2)", "--max-size", &m.to_string()]));
        assert_eq!(doc["result"]["value"], arbor::Ratio::from_counts(2, m).to_string());
    }

    let star = temp_file("star.txt", "0 1\n0 2\n0 3\n3 4\n");
    let doc = json(&arbor(&["cheeger", "--input", star.to_str().unwrap()]));
    assert_eq!(doc["result"]["value"], "0/1");
    assert_eq!(doc["result"]["argmin"]["members"].as_array().unwrap().len(), 5);
}

#[test]
fn classify_exit_codes() {
    let out = arbor(&["classify", "--fixture", "regular(3)", "--radius", "8"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["verdict"], "inconclusive");

    let out = arbor(&[
        "classify", "--fixture", "regular(3)", "--radius", "8", "--declared-k", "0", "--declared-d", "1",
        "--declared-R", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "nonamenable-certified");
    assert_eq!(doc["certificate"]["bound"], "1/2");

    let out = arbor(&[
        "classify", "--fixture", "zline_pendant", "--radius", "16", "--declared-k", "0", "--declared-d",
        "2", "--declared-R", "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refuted"));

    let out = arbor(&["classify", "--fixture", "comb", "--radius", "32"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "amenable-witnessed");

    // declared bounds come as a triple
    let out = arbor(&["classify", "--fixture", "comb", "--declared-k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(arbor(&["trim", "--fixture", "moebius"]).status.code(), Some(2));
    assert_eq!(arbor(&["gw", "events", "--p", "0,1", "--d", "2"]).status.code(), Some(2));
    assert_eq!(arbor(&["gw", "sample", "--p", "0.5,0.4", "--seed", "1"]).status.code(), Some(2));
    let cyc = temp_file("cycle.txt", "0 1\n1 2\n2 0\n");
    assert_eq!(arbor(&["trim", "--input", cyc.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(arbor(&["trim", "--input", "/nonexistent/tree.txt"]).status.code(), Some(2));
    assert_eq!(arbor(&["--format", "csv", "classify", "--fixture", "comb"]).status.code(), Some(2));
}

#[test]
fn gw_commands() {
    let doc = json(&arbor(&["gw", "sample", "--p", "0,0,1", "--seed", "7", "--depth", "4"]));
    assert_eq!(doc["vertices"], 31);
    assert_eq!(doc["generation_sizes"], serde_json::json!([1, 2, 4, 8, 16]));

    let doc = json(&arbor(&["gw", "events", "--p", "0,0.5,0.5", "--d", "2", "--seed", "3", "--trials", "20000"]));
    assert_eq!(doc["analytic"], 0.125);
    assert_eq!(doc["within_3se"], true);

    let spec = temp_file("p3.json", r#"{"p": [0, 0, 0, 1]}"#);
    let out = arbor(&["gw", "dichotomy", "--input", spec.to_str().unwrap(), "--seed", "2", "--trials", "5", "--subsets", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["side"], "non-amenable");
    assert_eq!(doc["non_amenable"]["degree_violations"], 0);
    assert_eq!(doc["non_amenable"]["bound_violations"], 0);

    let out = arbor(&["--format", "csv", "gw", "growth", "--p", "0,0,1", "--n", "3", "--seed", "1", "--trials", "3"]);
    assert_eq!(stdout(&out), "trial,generation_sizes\n0,1;2;4;8\n1,1;2;4;8\n2,1;2;4;8\n");

    let poisson = temp_file("poisson.json", r#"{"family": "poisson", "lambda": 1.5}"#);
    let doc = json(&arbor(&["gw", "growth", "--input", poisson.to_str().unwrap(), "--n", "4", "--seed", "1", "--trials", "4000"]));
    assert_eq!(doc["report"]["within_4se"], true);
}

#[test]
fn fixtures_are_listed() {
    let doc = json(&arbor(&["fixtures", "list"]));
    let ids: Vec<&str> = doc["fixtures"].as_array().unwrap().iter().map(|f| f["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"regular(k)"));
    assert!(ids.contains(&"staircase_n(n)"));
}
