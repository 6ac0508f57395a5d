use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_strebel"))
        .args(args)
        .env_remove("STREBEL_BUDGET_SCALE")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    } else {
        drop(child.stdin.take());
    }
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn cylinders(report: &Value) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = report["decomposition"]["components"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["kind"] == "cylinder")
        .map(|c| (c["leafLength"].as_str().unwrap().to_string(), c["width"].as_str().unwrap().to_string()))
        .collect();
    v.sort();
    v
}

#[test]
fn decompose_l_origami() {
    let out = run(&["decompose", &fixture("l_origami.json")], None);
    assert!(out.status.success());
    assert_eq!(cylinders(&json(&out)), vec![("1".into(), "1".into()), ("2".into(), "1".into())]);
}

#[test]
fn detour_ratios() {
    let out = run(&["detour", "--ratios", "1,1/4"], None);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["delta"], "log 2");
    assert_eq!(v["sigma"], "1/2 log 2");
    assert_eq!(v["deltaDecimal"], "0.693147180560");
}

#[test]
fn flow_then_decompose_through_stdin() {
    let flowed = run(&["flow", &fixture("torus.json"), "--lambda", "2"], None);
    assert!(flowed.status.success());
    let text = String::from_utf8(flowed.stdout).unwrap();
    let out = run(&["decompose", "-"], Some(&text));
    assert!(out.status.success());
    assert_eq!(cylinders(&json(&out)), vec![("1".into(), "2".into())]);
}

#[test]
fn reports_are_byte_identical() {
    let a = run(&["limit-distance", &fixture("l_origami.json"), &fixture("torus.json")], None);
    let b = run(&["limit-distance", &fixture("l_origami.json"), &fixture("torus.json")], None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["limitingDistance"]["kind"], "infinite");
}

#[test]
fn validate_round_trips() {
    let out = run(&["validate", &fixture("golden_torus.json")], None);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["genus"], 1);
    let canonical = serde_json::to_string(&v["canonical"]).unwrap();
    let again = run(&["validate", "-"], Some(&canonical));
    assert_eq!(json(&again)["canonical"], v["canonical"]);
}

#[test]
fn malformed_input_exits_two() {
    let out = run(&["validate", "-"], Some("{\"field_d\": 1}"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "surface");
    let out = run(&["decompose", "/nonexistent/surface.json"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["limit-distance", &fixture("golden_torus.json"), &fixture("silver_torus.json")], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_exhaustion_exits_three() {
    let out = run(&["decompose", &data("slow_torus.json")], None);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "budget");
    let out = run(&["--budget-scale", "20", "decompose", &data("slow_torus.json")], None);
    assert!(out.status.success());
    assert_eq!(json(&out)["budgets"]["traceScale"], 20);
}

#[test]
fn budget_scale_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_strebel"))
        .args(["decompose", &data("slow_torus.json")])
        .env("STREBEL_BUDGET_SCALE", "20")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn standalone_graph_limit_surface() {
    let out = run(&["limit-surface", "--graph", &data("three_vertex_graph.json")], None);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["signatures"][0]["genus"], 0);
    assert_eq!(v["models"][0]["euler"], -1);
}

#[test]
fn asymptotic_self_and_iet() {
    let out = run(&["asymptotic", &fixture("l_origami.json"), &fixture("l_origami.json")], None);
    assert_eq!(json(&out)["asymptotic"], "yes");
    let out = run(&["iet", "-", "--birkhoff", "100"], Some(r#"{"lengths":["1","1/2+1/2*sqrt(5)"],"imagePos":[1,0]}"#));
    assert!(out.status.success());
    assert_eq!(json(&out)["certificate"]["status"], "certified");
}

#[test]
fn extremal_subcommands() {
    let out = run(&["ext", &fixture("torus.json"), "--curve", "horizontal", "--lambda", "3"], None);
    assert_eq!(json(&out)["curves"][0]["lower"]["exact"], "3");
    let out = run(&["ext", &fixture("torus.json"), "--curve", "horizontal", "--curve", "vertical", "--kerckhoff", "4"], None);
    let v = json(&out);
    assert_eq!(v["achieved"]["exact"], "log 2");
    assert_eq!(v["exact"], true);
    let out = run(&["walsh", &fixture("l_origami.json"), "--curve", "hleaf:0,1/2"], None);
    let v = json(&out);
    assert_eq!(v["target"], "3/2");
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["brackets"] == true));
    let out = run(&["qc-affine", &data("affine.json")], None);
    assert_eq!(json(&out)["cornerDilatationExact"], "2");
    let out = run(&["qc-affine", "--ratio", "1/2"], None);
    assert!(json(&out)["maxDeviation"].as_f64().unwrap() < 1e-12);
    let out = run(&["ext", &fixture("torus.json"), "--curve", "torus:2,2"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gh_check_small() {
    let out = run(
        &["gh-check", &fixture("torus.json"), "--base", "0,0,0", "--step", "1/16", "--stride", "2", "--lambdas", "2,4", "--reference", "16"],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert!(v["rows"].as_array().unwrap().iter().all(|r| r["epsilon"].as_f64().unwrap() < 0.5));
}

#[test]
fn text_format() {
    let out = run(&["--format", "text", "detour", "--ratios", "1,1/4"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "delta: log 2"));
}
